"""Complex amplitudes built from mixed-path pairs.

Each path's momentum affinity and position affinity combine into
``phi_j = alpha_j + 1j*beta_j``; the propagator is the coherent sum of the
``phi_j`` and ``|sum(phi)|**2 == sum(alpha)**2 + sum(beta)**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mixedpath import MixedPathPair

__all__ = [
    "AmplitudeSet",
    "CommonBasis",
    "Expectation",
    "common_basis_2d",
    "amplitudes_from_pair",
    "amplitudes_from_phases",
    "propagator_sum",
    "probability",
    "expectation",
    "conjugate_amplitudes",
    "PLANCK_H",
    "QUANTUM_PHASE_SCALE",
]

HBAR = 1.0
PLANCK_H = 2.0 * math.pi * HBAR
# c = 2*pi/h = 1/hbar
QUANTUM_PHASE_SCALE = 2.0 * math.pi / PLANCK_H
UNIFORM_TOL = 1e-9


@dataclass(frozen=True)
class AmplitudeSet:
    """Per-path amplitudes. ``modulus`` is None when the moduli differ."""

    phis: np.ndarray
    thetas: np.ndarray
    modulus: float | None

    @property
    def uniform(self) -> bool:
        return self.modulus is not None

    @property
    def alpha(self) -> np.ndarray:
        return self.phis.real.copy()

    @property
    def beta(self) -> np.ndarray:
        return self.phis.imag.copy()

    def __len__(self):
        return len(self.phis)


@dataclass(frozen=True)
class CommonBasis:
    rotation: np.ndarray
    theta_pairs: tuple[tuple[float, float], tuple[float, float]]
    angle: float

    def symmetry_residual(self, alpha0, beta0) -> float:
        """Distance between rotated ``beta0`` and the mirror of rotated ``alpha0``.

        Directions only; zero when the two are symmetric about the pi/4 line.
        """
        ra = self.rotation @ np.asarray(alpha0, dtype=float)
        rb = self.rotation @ np.asarray(beta0, dtype=float)
        mirrored = ra[::-1] / np.linalg.norm(ra)
        return float(np.linalg.norm(mirrored - rb / np.linalg.norm(rb)))


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def common_basis_2d(alpha0, beta0) -> CommonBasis:
    """Rotate the plane so ``alpha0`` and ``beta0`` mirror about the pi/4 line.

    In the rotated frame ``theta + theta' = pi/2`` for both axes, where theta is
    the angle of ``alpha0`` and theta' that of ``beta0`` from the axis.
    """
    a = np.asarray(alpha0, dtype=float)
    b = np.asarray(beta0, dtype=float)
    if a.shape != (2,) or b.shape != (2,):
        raise ValueError("common_basis_2d expects two 2-vectors")
    if not (np.any(a) and np.any(b)):
        raise ValueError("zero vector has no direction")
    psi_a = math.atan2(a[1], a[0])
    psi_b = math.atan2(b[1], b[0])
    angle = -(psi_a + psi_b - math.pi / 2) / 2
    theta1 = psi_a + angle
    theta1p = psi_b + angle
    # angles from the second axis are the complements
    pairs = ((theta1, theta1p), (math.pi / 2 - theta1, math.pi / 2 - theta1p))
    return CommonBasis(_rotation(angle), pairs, angle)


def _uniform_modulus(phis: np.ndarray) -> float | None:
    mods = np.abs(phis)
    if len(mods) == 0:
        return None
    if np.max(mods) - np.min(mods) <= UNIFORM_TOL:
        return float(np.mean(mods))
    return None


def amplitudes_from_pair(pair: MixedPathPair) -> AmplitudeSet:
    if len(pair.alpha) != len(pair.beta):
        raise ValueError("alpha and beta lengths differ")
    phis = pair.alpha + 1j * pair.beta
    # atan2(0, 0) is already 0, the convention for a vanishing amplitude
    thetas = np.arctan2(pair.beta, pair.alpha)
    return AmplitudeSet(phis, thetas, _uniform_modulus(phis))


def amplitudes_from_phases(thetas, modulus: float) -> AmplitudeSet:
    """Amplitudes ``modulus * exp(1j*theta)`` for externally supplied phases."""
    thetas = np.asarray(thetas, dtype=float)
    phis = modulus * np.exp(1j * thetas)
    return AmplitudeSet(phis, thetas, abs(float(modulus)))


def propagator_sum(amps: AmplitudeSet) -> complex:
    if len(amps.phis) == 0:
        raise ValueError("propagator of an empty amplitude set")
    return complex(np.sum(amps.phis))


def probability(source) -> float:
    """``|sum(phi)|**2`` for an AmplitudeSet or MixedPathPair."""
    if isinstance(source, MixedPathPair):
        source = amplitudes_from_pair(source)
    return abs(propagator_sum(source)) ** 2


def conjugate_amplitudes(amps: AmplitudeSet) -> AmplitudeSet:
    """Time reversal ``i -> -i``: alpha fixed, beta negated."""
    return AmplitudeSet(np.conj(amps.phis), -amps.thetas, amps.modulus)


@dataclass(frozen=True)
class Expectation:
    value: float
    complex_value: complex
    diagonal: float
    interference: float | None = None
    imaginary_cross: float | None = None


def expectation(pair: MixedPathPair, x_matrix) -> Expectation:
    """``<X> = alpha.X.alpha + beta.X.beta`` with the complex route alongside.

    For two paths the value is also split into the diagonal part and the
    interference term ``(a1*a2 + b1*b2)*(X12 + X21)``; ``imaginary_cross`` is
    ``(X12 - X21)*(a1*b2 - a2*b1)``, the imaginary part of ``phi^H X phi``.
    """
    X = np.asarray(x_matrix, dtype=float)
    a, b = pair.alpha, pair.beta
    if X.shape != (len(a), len(a)) or len(a) != len(b):
        raise ValueError(f"dimension mismatch: X {X.shape} vs pair of length {len(a)}")
    value = float(a @ X @ a + b @ X @ b)
    phi = a + 1j * b
    complex_value = complex(np.conj(phi) @ X @ phi)
    diagonal = float(np.sum(np.diag(X) * (a * a + b * b)))
    if len(a) != 2:
        return Expectation(value, complex_value, diagonal)
    interference = float((a[0] * a[1] + b[0] * b[1]) * (X[0, 1] + X[1, 0]))
    imaginary_cross = float((X[0, 1] - X[1, 0]) * (a[0] * b[1] - a[1] * b[0]))
    return Expectation(value, complex_value, diagonal, interference, imaginary_cross)

"""Mixed-path affinity vectors and the bilinear generalized action.

A pair ``(alpha, beta)`` assigns a signed affinity to every momentum path and
every position path. The total probability is ``sum(alpha)**2 +
sum(beta)**2``, and the generalized action is ``alpha @ S @ beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .action import ActionMatrix

__all__ = [
    "MixedPathPair",
    "SaddleReport",
    "check_normalization",
    "generalized_action",
    "equal_component_pair",
    "parallelism_residual",
    "stationarity_check",
    "saddle_check",
]

NORM_TOL = 1e-9
CERT_TOL = 1e-9
DEFAULT_PROBES = 10_000


@dataclass(frozen=True)
class MixedPathPair:
    alpha: np.ndarray
    beta: np.ndarray
    pr: float = 1.0

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        b = np.array(self.beta, dtype=float)
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("alpha and beta must be vectors")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("affinities must be finite")
        if np.any(np.abs(a) > 1) or np.any(np.abs(b) > 1):
            raise ValueError("every affinity must lie in [-1, 1]")
        if not (math.isfinite(self.pr) and self.pr > 0):
            raise ValueError("pr must be positive")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def total_probability(self) -> float:
        return float(np.sum(self.alpha) ** 2 + np.sum(self.beta) ** 2)

    @property
    def normalized(self) -> bool:
        return abs(self.total_probability - self.pr) <= NORM_TOL


def _matrix(m) -> np.ndarray:
    return np.asarray(m.entries if isinstance(m, ActionMatrix) else m, dtype=float)


def _check_lengths(pair: MixedPathPair):
    if len(pair.alpha) != len(pair.beta):
        raise ValueError(f"length mismatch: alpha has {len(pair.alpha)}, beta has {len(pair.beta)}")


def _check_dims(pair: MixedPathPair, S: np.ndarray):
    _check_lengths(pair)
    if S.shape != (pair.n, pair.n):
        raise ValueError(f"dimension mismatch: matrix {S.shape} vs pair of length {pair.n}")


def check_normalization(pair: MixedPathPair, tol: float = NORM_TOL) -> tuple[float, bool]:
    _check_lengths(pair)
    value = pair.total_probability
    return value, abs(value - pair.pr) <= tol


def generalized_action(pair: MixedPathPair, m) -> float:
    """``v = sum_jk alpha_j S_jk beta_k``."""
    S = _matrix(m)
    _check_dims(pair, S)
    return float(pair.alpha @ S @ pair.beta)


def equal_component_pair(n: int, pr: float = 1.0) -> MixedPathPair:
    """Every component equal to ``sqrt(pr/2)/n``, the positive root."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not pr > 0:
        raise ValueError("pr must be positive")
    value = math.sqrt(pr / 2.0) / n
    return MixedPathPair(np.full(n, value), np.full(n, value), pr)


def parallelism_residual(pair: MixedPathPair, m) -> float:
    """Relative size of the part of ``S @ beta`` orthogonal to ``alpha``."""
    S = _matrix(m)
    _check_dims(pair, S)
    a = pair.alpha
    aa = float(a @ a)
    if aa == 0.0:
        raise ValueError("alpha is the zero vector")
    sb = S @ pair.beta
    norm = float(np.linalg.norm(sb))
    if norm == 0.0:
        return 0.0
    perp = sb - (float(sb @ a) / aa) * a
    return float(np.linalg.norm(perp)) / norm


def _constrained_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the directions orthogonal to both ``v`` and ones."""
    n = len(v)
    spanning = np.column_stack([np.ones(n), v])
    u, s, _ = np.linalg.svd(spanning, full_matrices=True)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0])))
    return u[:, rank:]


def stationarity_check(
    pair: MixedPathPair, m, n_probes: int = DEFAULT_PROBES, seed: int = 0
) -> float:
    """Largest first-order change of ``v`` along admissible perturbations.

    Each probe perturbs ``alpha`` orthogonally to ``alpha`` and ``beta``
    orthogonally to ``beta``, both within the ``sum == const`` plane, so the
    normalization is preserved to first order. Returns
    ``max |da.S.b + a.S.db| / (|da| + |db|)``.
    """
    S = _matrix(m)
    _check_dims(pair, S)
    basis_a = _constrained_basis(pair.alpha)
    basis_b = _constrained_basis(pair.beta)
    if basis_a.shape[1] == 0 and basis_b.shape[1] == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    coeff_a = rng.standard_normal((n_probes, basis_a.shape[1]))
    coeff_b = rng.standard_normal((n_probes, basis_b.shape[1]))
    d_alpha = coeff_a @ basis_a.T
    d_beta = coeff_b @ basis_b.T
    grad_alpha = S @ pair.beta
    grad_beta = pair.alpha @ S
    change = d_alpha @ grad_alpha + d_beta @ grad_beta
    size = np.linalg.norm(d_alpha, axis=1) + np.linalg.norm(d_beta, axis=1)
    size = np.where(size > 0, size, 1.0)
    return float(np.max(np.abs(change) / size))


@dataclass(frozen=True)
class SaddleReport:
    v: float
    min_over_beta: float
    max_over_beta: float
    min_over_alpha: float
    max_over_alpha: float
    violations: int
    violations_mirrored: int
    inverted_probes: int
    probes: int
    seed: int
    tol: float

    @property
    def holds(self) -> bool:
        """``P(alpha0, beta) >= v`` and ``P(alpha, beta0) <= v`` on every probe."""
        return self.violations == 0

    @property
    def holds_mirrored(self) -> bool:
        return self.violations_mirrored == 0

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "min_over_beta": self.min_over_beta,
            "max_over_beta": self.max_over_beta,
            "min_over_alpha": self.min_over_alpha,
            "max_over_alpha": self.max_over_alpha,
            "violations": self.violations,
            "violations_mirrored": self.violations_mirrored,
            "inverted_probes": self.inverted_probes,
            "holds": self.holds,
            "holds_mirrored": self.holds_mirrored,
            "probes": self.probes,
            "seed": self.seed,
            "tol": self.tol,
        }


def _sign_restricted_probes(rng, n_probes: int, n: int, total: float):
    # magnitudes on the simplex scaled so each probe sums to +/- total
    weights = rng.dirichlet(np.ones(n), size=n_probes) if n > 1 else np.ones((n_probes, 1))
    signs = rng.choice([-1.0, 1.0], size=n_probes)
    return signs[:, None] * weights * total, signs


def saddle_check(
    pair: MixedPathPair,
    m,
    n_probes: int = DEFAULT_PROBES,
    seed: int = 0,
    tol: float = CERT_TOL,
) -> SaddleReport:
    """Probe the mini-max inequalities around ``pair``.

    Probes come from the sign-restricted domain (all components of a probe
    share one sign) and are rescaled so the pair stays normalized. A probe in
    the negative orthant is scored against the inverted optimum, i.e.
    ``P(-alpha0, beta)``; bilinearity makes that the value of its mirror image.
    """
    S = _matrix(m)
    _check_dims(pair, S)
    v = generalized_action(pair, S)
    scale = tol * max(1.0, abs(v))
    sum_a = float(np.sum(pair.alpha))
    sum_b = float(np.sum(pair.beta))
    beta_total = math.sqrt(max(pair.pr - sum_a**2, 0.0))
    alpha_total = math.sqrt(max(pair.pr - sum_b**2, 0.0))

    rng = np.random.default_rng(seed)
    betas, beta_signs = _sign_restricted_probes(rng, n_probes, pair.n, beta_total)
    alphas, alpha_signs = _sign_restricted_probes(rng, n_probes, pair.n, alpha_total)
    over_beta = beta_signs * (betas @ (pair.alpha @ S))
    over_alpha = alpha_signs * (alphas @ (S @ pair.beta))

    violations = int(np.sum(over_beta < v - scale) + np.sum(over_alpha > v + scale))
    mirrored = int(np.sum(over_beta > v + scale) + np.sum(over_alpha < v - scale))
    inverted = int(np.sum(beta_signs < 0) + np.sum(alpha_signs < 0))
    return SaddleReport(
        v=v,
        min_over_beta=float(np.min(over_beta)),
        max_over_beta=float(np.max(over_beta)),
        min_over_alpha=float(np.min(over_alpha)),
        max_over_alpha=float(np.max(over_alpha)),
        violations=violations,
        violations_mirrored=mirrored,
        inverted_probes=inverted,
        probes=n_probes,
        seed=seed,
        tol=tol,
    )

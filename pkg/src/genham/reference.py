"""Analytic and quadrature references for the free, oscillator and linear propagators.

Real-time path integrals do not converge absolutely. Quadratures here run at a
short ladder of complex times ``tau = t*(1 - 1j*eta)`` where the integrands
carry a Gaussian envelope, and the ladder is extrapolated polynomially to
``eta = 0``. Units: ``hbar`` is explicit, ``h = 2*pi*hbar``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import FREE, HARMONIC, LINEAR, HamiltonianSpec, LatticeConfig

__all__ = [
    "QuadratureError",
    "NyquistError",
    "QuadratureResult",
    "PropagatorSample",
    "SpectralGrid",
    "DampingReport",
    "free_particle_K",
    "free_particle_probability",
    "free_kernel",
    "oscillator_kernel",
    "linear_kernel",
    "analytic_kernel",
    "extrapolate_to_zero",
    "compose_propagators",
    "lattice_propagator",
    "convergence_exponent",
    "interference_damping_trial",
    "sample_free_propagator",
    "microcanonical_transform",
    "peak_fwhm",
]

Kernel = Callable[[np.ndarray, np.ndarray, complex], np.ndarray]

COMPOSE_REGULATORS = (0.02, 0.01)
LATTICE_REGULATORS = (0.2, 0.15, 0.1, 0.075)
EDGE_THRESHOLD = 1e-3


class QuadratureError(ValueError):
    """Quadrature window too narrow or grid too coarse for the integrand."""


class NyquistError(ValueError):
    """Spectral grid cannot resolve the expected peak."""


def _check_time(t):
    if not (math.isfinite(t) and t > 0):
        raise ValueError(f"time interval must be positive, got {t}")


def free_particle_K(m: float, hbar: float, dq, dt) -> complex | np.ndarray:
    """``sqrt(m/(2*pi*i*hbar*dt)) * exp(i*m*dq**2/(2*hbar*dt))``, principal root.

    ``dt`` may be complex with a non-positive imaginary part (regulated time).
    """
    if isinstance(dt, complex):
        if not dt.real > 0 or dt.imag > 0:
            raise ValueError(f"regulated time must have positive real part and Im <= 0, got {dt}")
    else:
        _check_time(dt)
    kern = free_kernel(m, hbar)
    out = kern(np.asarray(0.0), np.asarray(dq, dtype=float), dt)
    return complex(out) if np.ndim(out) == 0 else out


def free_particle_probability(m: float, hbar: float, dt: float, n_dof: int = 1) -> float:
    """``|K|**2`` for ``n_dof`` independent free coordinates: ``(m/(h*dt))**n_dof``."""
    _check_time(dt)
    if n_dof < 1:
        raise ValueError("n_dof must be a positive integer")
    return (m / (2.0 * math.pi * hbar * dt)) ** n_dof


def free_kernel(m: float = 1.0, hbar: float = 1.0) -> Kernel:
    if not (m > 0 and hbar > 0):
        raise ValueError("mass and hbar must be positive")

    def kernel(qa, qb, tau):
        tau = complex(tau)
        pref = np.sqrt(m / (2j * math.pi * hbar * tau))
        return pref * np.exp(1j * m * (qb - qa) ** 2 / (2.0 * hbar * tau))

    return kernel


def oscillator_kernel(m: float = 1.0, omega: float = 1.0, hbar: float = 1.0) -> Kernel:
    """Mehler kernel, valid for ``0 < Re(omega*tau) < pi``."""
    if not (m > 0 and hbar > 0 and omega > 0):
        raise ValueError("mass, omega and hbar must be positive")

    def kernel(qa, qb, tau):
        wt = omega * complex(tau)
        s, c = cmath.sin(wt), cmath.cos(wt)
        pref = np.sqrt(m * omega / (2j * math.pi * hbar * s))
        phase = m * omega / (2.0 * hbar * s) * ((qa**2 + qb**2) * c - 2.0 * qa * qb)
        return pref * np.exp(1j * phase)

    return kernel


def linear_kernel(m: float = 1.0, force: float = 0.0, hbar: float = 1.0) -> Kernel:
    """Kernel for ``V = force*q``."""
    if not (m > 0 and hbar > 0):
        raise ValueError("mass and hbar must be positive")

    def kernel(qa, qb, tau):
        tau = complex(tau)
        pref = np.sqrt(m / (2j * math.pi * hbar * tau))
        s_cl = (
            m * (qb - qa) ** 2 / (2.0 * tau)
            - force * tau * (qa + qb) / 2.0
            - force**2 * tau**3 / (24.0 * m)
        )
        return pref * np.exp(1j * s_cl / hbar)

    return kernel


def analytic_kernel(h: HamiltonianSpec, hbar: float = 1.0) -> Kernel:
    if h.kind == FREE or (h.kind == HARMONIC and h.omega == 0):
        return free_kernel(h.mass, hbar)
    if h.kind == HARMONIC:
        return oscillator_kernel(h.mass, abs(h.omega), hbar)
    if h.kind == LINEAR:
        return linear_kernel(h.mass, h.force, hbar)
    raise ValueError(f"no analytic kernel for {h.kind!r}")


def extrapolate_to_zero(etas: Sequence[float], values: Sequence[complex]) -> complex:
    """Neville extrapolation of ``values(eta)`` to ``eta = 0``.

    Two points give the Richardson estimate.
    """
    x = np.asarray(etas, dtype=float)
    P = np.asarray(values, dtype=complex).copy()
    if len(x) != len(P) or len(x) == 0:
        raise ValueError("need matching, non-empty eta and value sequences")
    if len(np.unique(x)) != len(x):
        raise ValueError("regulator values must be distinct")
    n = len(x)
    for k in range(1, n):
        for i in range(n - k):
            P[i] = (x[i] * P[i + 1] - x[i + k] * P[i]) / (x[i] - x[i + k])
    return complex(P[0])


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    regulators: tuple[float, ...]
    raw_values: tuple[complex, ...]
    edge_ratio: float
    points: int
    window: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "value_re": self.value.real,
            "value_im": self.value.imag,
            "regulators": list(self.regulators),
            "raw_re": [v.real for v in self.raw_values],
            "raw_im": [v.imag for v in self.raw_values],
            "edge_ratio": self.edge_ratio,
            "points": self.points,
            "window": list(self.window),
        }


def _grid(window, points):
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"bad quadrature window {window}")
    if points < 3:
        raise ValueError("quadrature needs at least 3 points")
    g = np.linspace(lo, hi, int(points))
    w = np.full(len(g), g[1] - g[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return g, w


def _check_regulators(regulators):
    regs = tuple(float(e) for e in regulators)
    if not regs or any(not (0 <= e < 1) for e in regs):
        raise ValueError("regulators must lie in [0, 1)")
    return regs


def _edge_ratio(integrand: np.ndarray) -> float:
    mags = np.abs(integrand)
    peak = float(np.max(mags))
    if peak == 0.0:
        return 0.0
    return float(max(mags[0], mags[-1]) / peak)


def _phase_step(integrand: np.ndarray, rel_floor: float = 1e-6) -> float:
    """Largest phase jump between neighbouring grid points where the integrand matters."""
    mags = np.abs(integrand)
    keep = (mags[:-1] > rel_floor * mags.max()) & (mags[1:] > rel_floor * mags.max())
    if not np.any(keep):
        return 0.0
    jumps = np.abs(np.angle(integrand[1:] * np.conj(integrand[:-1])))
    return float(np.max(jumps[keep]))


def _diagnose(edge, step, threshold, what):
    if edge > threshold:
        raise QuadratureError(
            f"{what}: window too narrow, edge magnitude ratio {edge:.3g} exceeds {threshold:.3g}"
        )
    if step > math.pi / 2:
        raise QuadratureError(
            f"{what}: grid too coarse, phase advances {step:.3g} rad per point"
        )


def compose_propagators(
    k_provider: Kernel,
    t_i: float,
    t_m: float,
    t_f: float,
    q_i: float,
    q_f: float,
    window: tuple[float, float] = (-40.0, 40.0),
    points: int = 2**14,
    regulators: Sequence[float] = COMPOSE_REGULATORS,
    edge_threshold: float = EDGE_THRESHOLD,
    full_output: bool = False,
):
    """``int K(q_i, t_i; q, t_m) K(q, t_m; q_f, t_f) dq`` by the trapezoid rule.

    Parameters
    ----------
    k_provider : callable
        ``k(qa, qb, tau)`` accepting complex ``tau``.
    regulators : sequence of float
        Imaginary-time fractions ``eta``; results are extrapolated to zero.
    full_output : bool
        Return a :class:`QuadratureResult` instead of the bare value.

    Raises
    ------
    QuadratureError
        When the integrand at the window edge exceeds ``edge_threshold`` of
        its peak, or the grid undersamples its phase, at the smallest regulator.
    """
    if not (t_i < t_m < t_f):
        raise ValueError(f"need t_i < t_m < t_f, got {t_i}, {t_m}, {t_f}")
    regs = _check_regulators(regulators)
    g, w = _grid(window, points)
    raw = []
    for eta in regs:
        integrand = k_provider(q_i, g, (t_m - t_i) * (1 - 1j * eta)) * k_provider(
            g, q_f, (t_f - t_m) * (1 - 1j * eta)
        )
        raw.append(complex(np.sum(integrand * w)))
        if eta == min(regs):
            edge = _edge_ratio(integrand)
            _diagnose(edge, _phase_step(integrand), edge_threshold, "compose_propagators")
    value = extrapolate_to_zero(regs, raw) if len(regs) > 1 else raw[0]
    if not full_output:
        return value
    return QuadratureResult(value, regs, tuple(raw), edge, int(points), (float(g[0]), float(g[-1])))


def _short_time_kernel(h: HamiltonianSpec, hbar: float) -> Kernel:
    """One slice: ``sqrt(m/(2 pi i hbar eps)) exp(i S/hbar)`` with the Lagrangian step action.

    ``S = m*dq**2/(2*eps) - V((qa+qb)/2)*eps``, the same midpoint form as the
    reduced ``J`` functional.
    """
    m = h.mass

    def kernel(qa, qb, eps):
        eps = complex(eps)
        pref = np.sqrt(m / (2j * math.pi * hbar * eps))
        s = m * (qb - qa) ** 2 / (2.0 * eps) - h.potential(0.5 * (qa + qb)) * eps
        return pref * np.exp(1j * s / hbar)

    return kernel


def _lattice_at(kern, q_i, q_f, eps, n_slices, g, w):
    x = kern(q_i, g, eps)
    M = kern(g[:, None], g[None, :], eps)
    for _ in range(n_slices - 2):
        x = (x * w) @ M
    last = x * kern(g, q_f, eps)
    return complex(np.sum(last * w)), _edge_ratio(last), _phase_step(kern(q_i, g, eps))


def lattice_propagator(
    h: HamiltonianSpec,
    cfg: LatticeConfig | float,
    q_i: float,
    q_f: float,
    n_slices: int,
    q_window: tuple[float, float] = (-8.0, 8.0),
    q_points: int = 256,
    hbar: float = 1.0,
    regulators: Sequence[float] = LATTICE_REGULATORS,
    edge_threshold: float = EDGE_THRESHOLD,
    full_output: bool = False,
):
    """Time-sliced propagator over a quadrature grid of intermediate positions.

    ``cfg`` is a :class:`LatticeConfig` (its total time is used) or the total
    time itself. Each slice carries ``sqrt(m/(2 pi i hbar eps))`` and the
    trapezoid weight of its grid point; the transfer-matrix product sums every
    broken-line path on the grid. The result is extrapolated to real time over
    ``regulators``.
    """
    total = cfg.total_time if isinstance(cfg, LatticeConfig) else float(cfg)
    _check_time(total)
    if int(n_slices) != n_slices or n_slices < 1:
        raise ValueError("n_slices must be a positive integer")
    n_slices = int(n_slices)
    regs = _check_regulators(regulators)
    g, w = _grid(q_window, q_points)
    kern = _short_time_kernel(h, hbar)
    if n_slices == 1:
        # no intermediate points, so no quadrature and no regulator
        value = complex(kern(np.asarray(q_i), np.asarray(q_f), total))
        if not full_output:
            return value
        return QuadratureResult(value, (), (value,), 0.0, int(q_points), (float(g[0]), float(g[-1])))
    raw, edge = [], 0.0
    for eta in regs:
        val, e, step = _lattice_at(kern, q_i, q_f, total / n_slices * (1 - 1j * eta), n_slices, g, w)
        raw.append(val)
        if eta == min(regs):
            edge = e
            _diagnose(edge, step, edge_threshold, "lattice_propagator")
    value = extrapolate_to_zero(regs, raw) if len(regs) > 1 else raw[0]
    if not full_output:
        return value
    return QuadratureResult(value, regs, tuple(raw), edge, int(q_points), (float(g[0]), float(g[-1])))


def convergence_exponent(slices: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(1/n_slices)``."""
    x = -np.log(np.asarray(slices, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class DampingReport:
    n_paths: int
    model: str
    trials: int
    seed: int
    diagonal: float
    cross_terms: np.ndarray = field(repr=False)

    @property
    def mean_cross(self) -> float:
        return float(np.mean(self.cross_terms))

    @property
    def std_error(self) -> float:
        if self.trials < 2:
            return 0.0
        return float(np.std(self.cross_terms, ddof=1) / math.sqrt(self.trials))

    @property
    def mean_probability(self) -> float:
        return self.diagonal + self.mean_cross

    def to_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "model": self.model,
            "trials": self.trials,
            "seed": self.seed,
            "diagonal": self.diagonal,
            "mean_cross": self.mean_cross,
            "std_error": self.std_error,
            "mean_probability": self.mean_probability,
        }


def interference_damping_trial(
    n_paths: int, model: str = "uniform-random", seed: int = 0, trials: int = 1000
) -> DampingReport:
    """Split ``|sum a exp(i theta)|**2`` with ``|a|**2 = 1/n`` into diagonal and cross terms.

    The diagonal is ``n * |a|**2 = 1``. Each trial draws its phases from its
    own child of ``SeedSequence(seed)`` so trials are independent of ordering.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if model not in ("uniform-random", "coherent"):
        raise ValueError(f"unknown phase model {model!r}")
    cross = np.empty(trials)
    children = np.random.SeedSequence(seed).spawn(trials)
    for k in range(trials):
        if model == "coherent":
            # all phases equal: |sum|^2 = n^2 exactly
            cross[k] = float(n_paths - 1)
            continue
        theta = np.random.default_rng(children[k]).uniform(0.0, 2.0 * math.pi, n_paths)
        total = np.exp(1j * theta).sum()
        cross[k] = (total.real**2 + total.imag**2 - n_paths) / n_paths
    return DampingReport(n_paths, model, trials, seed, 1.0, cross)


@dataclass(frozen=True)
class PropagatorSample:
    """Free-particle ``K`` sampled on a uniform endpoint grid and time grid.

    ``K`` depends on ``q_f - q_i`` only, so ``k_values[t, d]`` holds it at the
    separation ``(d - (n_q - 1))*dq``; the full ``(q_i, q_f)`` slab is the
    Toeplitz matrix built from one row.
    """

    k_values: np.ndarray
    q_grid: np.ndarray
    t_grid: np.ndarray
    mass: float = 1.0
    hbar: float = 1.0
    n_dof: int = 1

    def __post_init__(self):
        for name in ("q_grid", "t_grid"):
            g = getattr(self, name)
            d = np.diff(g)
            if len(g) < 2 or np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-9, atol=0):
                raise ValueError(f"{name} must be strictly increasing and uniform")
        if self.k_values.shape != (len(self.t_grid), 2 * len(self.q_grid) - 1):
            raise ValueError("k_values must have shape (n_t, 2*n_q - 1)")

    @property
    def dq(self) -> float:
        return float(self.q_grid[1] - self.q_grid[0])

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    def slab(self, t_index: int) -> np.ndarray:
        """``K(q_i, q_f)`` at one time, rows indexed by ``q_i``."""
        n = len(self.q_grid)
        i = np.arange(n)
        return self.k_values[t_index][(i[None, :] - i[:, None]) + n - 1]


def sample_free_propagator(
    m: float = 1.0,
    hbar: float = 1.0,
    L: float = 64.0,
    T: float = 64.0,
    points: int = 256,
    t_points: int | None = None,
) -> PropagatorSample:
    """Sample ``K(q_f - q_i, t)`` for ``q`` in ``[-L/2, L/2)`` and ``t`` in ``(-T/2, T/2)``.

    The time grid sits at cell midpoints so ``t = 0`` is never sampled;
    negative times use the same formula continued through ``sqrt(1/t)``.
    """
    if not (L > 0 and T > 0):
        raise ValueError("window lengths must be positive")
    n_t = points if t_points is None else t_points
    dq = L / points
    q = (np.arange(points) - points // 2) * dq
    dt = T / n_t
    t = (np.arange(n_t) - n_t / 2 + 0.5) * dt
    sep = (np.arange(2 * points - 1) - (points - 1)) * dq
    tt = t[:, None].astype(complex)
    k = np.sqrt(m / (2j * math.pi * hbar * tt)) * np.exp(1j * m * sep[None, :] ** 2 / (2 * hbar * tt))
    return PropagatorSample(k, q, t, m, hbar)


@dataclass(frozen=True)
class SpectralGrid:
    """Fourier image of a propagator sample.

    ``endpoint_density[a, b]`` is ``sum_t |K~(p_a, p_b, t)|**2`` and
    ``energy_density[a, e]`` is ``|K~(p_a, p_a, E_e)|`` on the diagonal.
    """

    p_grid: np.ndarray
    e_grid: np.ndarray
    window: tuple[float, float]
    endpoint_density: np.ndarray
    energy_density: np.ndarray
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        L, T = self.window
        if not (L > 0 and T > 0):
            raise ValueError("window lengths must be positive")
        for name, length in (("p_grid", L), ("e_grid", T)):
            d = np.diff(getattr(self, name))
            if not np.allclose(d, 2 * math.pi * self.hbar / length, rtol=1e-9):
                raise ValueError(f"{name} spacing must be 2*pi*hbar/window")

    @property
    def dp(self) -> float:
        return float(self.p_grid[1] - self.p_grid[0])

    @property
    def de(self) -> float:
        return float(self.e_grid[1] - self.e_grid[0])

    def endpoint_argmax(self) -> tuple[float, float]:
        a, b = np.unravel_index(np.argmax(self.endpoint_density), self.endpoint_density.shape)
        return float(self.p_grid[a]), float(self.p_grid[b])

    def energy_peak(self, p: float) -> float:
        """Energy of the largest spectral weight at the grid momentum nearest ``p``."""
        a = int(np.argmin(np.abs(self.p_grid - p)))
        return float(self.e_grid[np.argmax(self.energy_density[a])])

    def nearest_p(self, p: float) -> float:
        return float(self.p_grid[np.argmin(np.abs(self.p_grid - p))])


def _p_axis(n, dx, hbar):
    return np.fft.fftshift(np.fft.fftfreq(n, d=dx)) * 2 * math.pi * hbar


def _endpoint_transform(slab: np.ndarray) -> np.ndarray:
    # e^{+i p_i q_i} on the initial index, e^{-i p_f q_f} on the final one
    n = slab.shape[0]
    out = np.fft.fft(np.fft.ifft(slab, axis=0) * n, axis=1)
    return np.fft.fftshift(out)


def microcanonical_transform(prop: PropagatorSample, check_nyquist: float | None = None) -> SpectralGrid:
    """Fourier transform endpoints to momenta and time to energy.

    Conventions: the final endpoint uses ``exp(-i p q/hbar)``, the initial
    one the conjugate kernel and time ``exp(+i E t/hbar)``, so a free
    propagator concentrates on ``p_i == p_f`` and ``E == p**2/(2m)``.

    Parameters
    ----------
    check_nyquist : float, optional
        A momentum that must be resolvable; raises :class:`NyquistError` when
        ``p**2/(2m)`` or ``p`` falls outside the representable band.
    """
    n_q, n_t = len(prop.q_grid), len(prop.t_grid)
    L, T = n_q * prop.dq, n_t * prop.dt
    p = _p_axis(n_q, prop.dq, prop.hbar)
    # inverse DFT index k along t maps to E = 2*pi*hbar*k/T
    e = _p_axis(n_t, prop.dt, prop.hbar)
    if check_nyquist is not None:
        e_need = check_nyquist**2 / (2 * prop.mass)
        if abs(check_nyquist) >= p.max() or e_need >= e.max():
            raise NyquistError(
                f"grid too coarse: p={check_nyquist} needs |p| < {p.max():.3g} "
                f"and E={e_need:.3g} < {e.max():.3g}"
            )
    dq, dt = prop.dq, prop.dt
    endpoint = np.zeros((n_q, n_q))
    diag = np.empty((n_t, n_q), dtype=complex)
    for k in range(n_t):
        kt = _endpoint_transform(prop.slab(k)) * dq * dq
        endpoint += kt.real**2 + kt.imag**2
        diag[k] = np.diagonal(kt)
    # exp(+iEt) is an inverse DFT along t
    spectrum = np.fft.fftshift(np.fft.ifft(diag, axis=0) * n_t * dt, axes=0)
    energy = np.abs(spectrum).T
    return SpectralGrid(p, e, (L, T), endpoint, energy, prop.hbar, prop.mass)


def peak_fwhm(prop: PropagatorSample, p_f: float = 0.0, pad: int = 16) -> float:
    """Full width at half maximum of the ``p_i`` peak at fixed ``p_f``.

    The ``q_f`` transform is taken at ``p_f`` exactly and the ``q_i`` transform
    is zero-padded by ``pad`` so the width is resolved below one grid cell.
    Intensities are summed over the time grid.
    """
    n_q = len(prop.q_grid)
    q = prop.q_grid
    n_pad = pad * n_q
    intensity = np.zeros(n_pad)
    kernel_f = np.exp(-1j * p_f * q / prop.hbar)
    for k in range(len(prop.t_grid)):
        row = prop.slab(k) @ kernel_f
        spectrum = np.fft.ifft(row, n=n_pad) * n_pad
        intensity += np.abs(spectrum) ** 2
    intensity = np.fft.fftshift(intensity)
    p = _p_axis(n_pad, prop.dq, prop.hbar)
    i0 = int(np.argmax(intensity))
    half = intensity[i0] / 2.0

    def crossing(step):
        i = i0
        while 0 < i < n_pad - 1 and intensity[i + step] > half:
            i += step
        j = i + step
        if not 0 <= j < n_pad:
            raise NyquistError("peak wider than the momentum window")
        # linear interpolation between i and j
        frac = (intensity[i] - half) / (intensity[i] - intensity[j])
        return p[i] + frac * (p[j] - p[i])

    return float(crossing(1) - crossing(-1))

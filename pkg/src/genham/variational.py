"""Lagrange-multiplier extremization over the sine/cosine trial family.

Problem 1 varies ``alpha = a*sin(c*G[p])`` against a fixed ``beta0``;
Problem 2 varies ``beta = b*cos(c*J[q])`` against a fixed ``alpha0``. Both
reduce to ``f(a, c) = a*I(c)`` under ``a**2*J(c)**2 = kappa**2``, whose
critical phase scale satisfies ``d/dc ln(I/J) = 0``.

Path integrals are plain sums over the finite ensemble.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .action import ActionMatrix

__all__ = [
    "ProblemUnavailable",
    "DegenerateBracketError",
    "NoSignChangeError",
    "SingularAmplitudeError",
    "TrialFamily",
    "ProblemSolution",
    "ExtremumReport",
    "contracted_profiles",
    "problem1_profile",
    "problem2_profile",
    "log_ratio_slope",
    "solve_problem",
    "hessian_degeneracy",
    "hessian_scale",
    "optimal_amplitude_phase",
    "solve_variational",
    "profile_table",
]

Profile = Callable[[float], "tuple[float, float]"]

SCAN_POINTS = 10_000
# tighter than the 1e-10 requirement: near-zero J makes the slope steep
ROOT_RTOL = 4 * np.finfo(float).eps
FD_STEP = 1e-5


class ProblemUnavailable(ValueError):
    pass


class DegenerateBracketError(ValueError):
    """``I/J`` is constant across the bracket, so every c is critical."""


class NoSignChangeError(ValueError):
    pass


class SingularAmplitudeError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class TrialFamily:
    a: float
    b: float
    c: float
    kappa1: float
    kappa2: float

    @classmethod
    def from_partners(cls, alpha0, beta0, pr: float = 1.0, a=1.0, b=1.0, c=1.0):
        k1_sq = pr - float(np.sum(beta0)) ** 2
        k2_sq = pr - float(np.sum(alpha0)) ** 2
        for name, value in (("kappa1**2", k1_sq), ("kappa2**2", k2_sq)):
            if not -1e-12 <= value <= pr + 1e-12:
                raise ValueError(f"{name} = {value} outside [0, pr]")
        return cls(a, b, c, math.sqrt(max(k1_sq, 0.0)), math.sqrt(max(k2_sq, 0.0)))


def _check_profile_inputs(c, s_matrix, beta0, alpha0):
    S = np.asarray(s_matrix.entries if isinstance(s_matrix, ActionMatrix) else s_matrix, float)
    n = S.shape[0]
    if S.shape != (n, n) or len(beta0) != n or len(alpha0) != n:
        raise ValueError("inconsistent dimensions between matrix and partner vectors")
    if not c > 0:
        raise ValueError("phase scale c must be positive")
    return S


def problem1_profile(g_values, s_matrix, beta0) -> Profile:
    """``c -> (I1, J1)`` with ``I1 = sum_j sin(c G_j) S_beta[p_j]``."""
    if g_values is None:
        raise ProblemUnavailable("Problem 1 unavailable: G[p] undefined for this Hamiltonian")
    g = np.asarray(g_values, float)
    S = np.asarray(s_matrix.entries if isinstance(s_matrix, ActionMatrix) else s_matrix, float)
    s_beta = S @ np.asarray(beta0, float)

    def profile(c):
        sines = np.sin(c * g)
        return float(sines @ s_beta), float(np.sum(sines))

    return profile


def problem2_profile(j_values, s_matrix, alpha0) -> Profile:
    """``c -> (I2, J2)`` with ``I2 = sum_k cos(c J_k) S_alpha[q_k]``."""
    jv = np.asarray(j_values, float)
    S = np.asarray(s_matrix.entries if isinstance(s_matrix, ActionMatrix) else s_matrix, float)
    s_alpha = np.asarray(alpha0, float) @ S

    def profile(c):
        cosines = np.cos(c * jv)
        return float(cosines @ s_alpha), float(np.sum(cosines))

    return profile


def contracted_profiles(c, g_values, j_values, s_matrix, beta0, alpha0):
    """Return ``(I1, J1, I2, J2)`` at phase scale ``c``."""
    S = _check_profile_inputs(c, s_matrix, beta0, alpha0)
    i1, j1 = problem1_profile(g_values, S, beta0)(c)
    i2, j2 = problem2_profile(j_values, S, alpha0)(c)
    return i1, j1, i2, j2


def _step(x: float) -> float:
    return FD_STEP * max(1.0, abs(x))


def _log_abs_ratio(profile: Profile, c: float) -> float:
    i, j = profile(c)
    return math.log(abs(i)) - math.log(abs(j))


def log_ratio_slope(profile: Profile, c: float) -> float:
    """Central difference of ``ln|I/J|`` at ``c``."""
    h = _step(c)
    return (_log_abs_ratio(profile, c + h) - _log_abs_ratio(profile, c - h)) / (2 * h)


@dataclass(frozen=True)
class ProblemSolution:
    which: int
    amplitude: float
    c_star: float
    lam: float
    ratio: float
    i_value: float
    j_value: float
    kappa: float
    residual: float
    candidate_roots: int


def _scan(profile: Profile, lo: float, hi: float, points: int):
    grid = np.linspace(lo, hi, points)
    vals = np.array([profile(c) for c in grid])
    return grid, vals[:, 0], vals[:, 1]


def _candidate_intervals(profile, grid, i_vals, j_vals):
    ok = (i_vals != 0) & (j_vals != 0) & np.isfinite(i_vals) & np.isfinite(j_vals)
    slopes = np.full(len(grid), np.nan)
    for idx in np.flatnonzero(ok):
        slopes[idx] = log_ratio_slope(profile, grid[idx])
    found = []
    for k in range(len(grid) - 1):
        if not (ok[k] and ok[k + 1]):
            continue
        # a sign flip of I or J in between is a pole of the slope, not a root
        if np.sign(i_vals[k]) != np.sign(i_vals[k + 1]) or np.sign(j_vals[k]) != np.sign(j_vals[k + 1]):
            continue
        if slopes[k] == 0.0:
            found.append((grid[k], grid[k]))
        elif slopes[k] * slopes[k + 1] < 0:
            found.append((grid[k], grid[k + 1]))
    return found


def solve_problem(
    which: int,
    profile: Profile,
    kappa: float,
    c_bracket: tuple[float, float],
    scan_points: int = SCAN_POINTS,
    root_index: int = 0,
) -> ProblemSolution:
    """Critical ``(amplitude, c, lambda)`` of ``a*I(c) + lambda*(a**2*J(c)**2 - kappa**2)``.

    The bracket is scanned on ``scan_points`` points for sign changes of the
    log-ratio slope; the ``root_index``-th one is refined with Brent's method.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    lo, hi = map(float, c_bracket)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError("bracket must satisfy 0 < lo < hi < inf")
    grid, i_vals, j_vals = _scan(profile, lo, hi, scan_points)
    if not (np.all(np.isfinite(i_vals)) and np.all(np.isfinite(j_vals))):
        raise ValueError("I or J is non-finite inside the bracket")
    # constant ratio r means I - r*J vanishes identically; test the best-fit r
    jj = float(j_vals @ j_vals)
    if jj > 0:
        r = float(i_vals @ j_vals) / jj
        misfit = float(np.max(np.abs(i_vals - r * j_vals)))
        scale = float(np.max(np.abs(i_vals))) + abs(r) * float(np.max(np.abs(j_vals)))
        if misfit <= 1e-12 * scale:
            raise DegenerateBracketError(
                f"degenerate bracket: I/J = {r!r} is constant on [{lo}, {hi}], every c is critical"
            )
    intervals = _candidate_intervals(profile, grid, i_vals, j_vals)
    if len(intervals) <= root_index:
        raise NoSignChangeError(
            f"no sign change of d/dc ln(I/J) in [{lo}, {hi}] (found {len(intervals)} roots)"
        )
    a, b = intervals[root_index]
    if a == b:
        c_star = a
    else:
        c_star = brentq(lambda c: log_ratio_slope(profile, c), a, b, xtol=1e-15, rtol=ROOT_RTOL)
    i_star, j_star = profile(c_star)
    if not (math.isfinite(i_star) and math.isfinite(j_star)):
        raise ValueError("I or J non-finite at the critical point")
    if j_star == 0.0:
        raise SingularAmplitudeError("J(c*) = 0, amplitude kappa/J is singular")
    if kappa == 0.0:
        raise SingularAmplitudeError("kappa = 0, multiplier -I/(2 J kappa) is singular")
    return ProblemSolution(
        which=which,
        amplitude=kappa / j_star,
        c_star=c_star,
        lam=-i_star / (2.0 * j_star * kappa),
        ratio=i_star / j_star,
        i_value=i_star,
        j_value=j_star,
        kappa=kappa,
        residual=abs(log_ratio_slope(profile, c_star)),
        candidate_roots=len(intervals),
    )


def _lagrangian(profile: Profile, lam: float, kappa: float):
    def F(a, c):
        i, j = profile(c)
        return a * i + lam * (a * a * j * j - kappa * kappa)

    return F


def _second_differences(profile: Profile, amplitude, c_star, lam, kappa):
    F = _lagrangian(profile, lam, kappa)
    a, c = amplitude, c_star
    ha, hc = _step(a), _step(c)
    f0 = F(a, c)
    f_aa = (F(a + ha, c) - 2 * f0 + F(a - ha, c)) / ha**2
    f_cc = (F(a, c + hc) - 2 * f0 + F(a, c - hc)) / hc**2
    f_ac = (
        F(a + ha, c + hc) - F(a + ha, c - hc) - F(a - ha, c + hc) + F(a - ha, c - hc)
    ) / (4 * ha * hc)
    if not all(math.isfinite(x) for x in (f_aa, f_cc, f_ac)):
        raise ValueError("non-finite second differences")
    return f_aa, f_cc, f_ac


def hessian_degeneracy(
    which: int,
    amplitude: float,
    c_star: float,
    lam: float,
    profile: Profile,
    kappa: float,
) -> tuple[float, float]:
    """``(D, F_aa)`` with ``D = F_aa*F_cc - F_ac**2`` by central differences."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    f_aa, f_cc, f_ac = _second_differences(profile, amplitude, c_star, lam, kappa)
    return f_aa * f_cc - f_ac**2, f_aa


def hessian_scale(
    amplitude: float, c_star: float, lam: float, profile: Profile, kappa: float
) -> float:
    """``max(|F_aa*F_cc|, F_ac**2, 1)``, the normalizer for ``|D|``."""
    f_aa, f_cc, f_ac = _second_differences(profile, amplitude, c_star, lam, kappa)
    return max(abs(f_aa * f_cc), f_ac**2, 1.0)


def optimal_amplitude_phase(s_values, a_star: float, c_star: float) -> np.ndarray:
    """Per-path ``a* * exp(1j * c* * S_j)``."""
    return a_star * np.exp(1j * c_star * np.asarray(s_values, float))


@dataclass(frozen=True)
class ExtremumReport:
    a_star: float
    b_star: float
    c1_star: float
    c2_star: float
    lambda1: float
    lambda2: float
    ratio1: float
    ratio2: float
    d1: float
    d2: float
    f1_aa: float
    f2_bb: float
    d1_normalized: float
    d2_normalized: float
    residual1: float
    residual2: float
    constraint1: float
    constraint2: float
    v_problem1: float
    v_problem2: float
    kappa1: float
    kappa2: float
    common_amplitude: float

    @property
    def c_star(self) -> float:
        return self.c1_star

    def to_dict(self) -> dict:
        return asdict(self)


def solve_variational(
    matrix: ActionMatrix,
    alpha0,
    beta0,
    bracket1: tuple[float, float],
    bracket2: tuple[float, float],
    pr: float = 1.0,
    equal_amplitudes: bool = True,
    scan_points: int = SCAN_POINTS,
) -> ExtremumReport:
    """Solve both problems against the partner distributions and collect diagnostics."""
    alpha0 = np.asarray(alpha0, float)
    beta0 = np.asarray(beta0, float)
    family = TrialFamily.from_partners(alpha0, beta0, pr)
    prof1 = problem1_profile(matrix.g_values, matrix, beta0)
    prof2 = problem2_profile(matrix.j_values, matrix, alpha0)
    sol1 = solve_problem(1, prof1, family.kappa1, bracket1, scan_points)
    sol2 = solve_problem(2, prof2, family.kappa2, bracket2, scan_points)
    d1, f1_aa = hessian_degeneracy(1, sol1.amplitude, sol1.c_star, sol1.lam, prof1, sol1.kappa)
    d2, f2_bb = hessian_degeneracy(2, sol2.amplitude, sol2.c_star, sol2.lam, prof2, sol2.kappa)
    scale1 = hessian_scale(sol1.amplitude, sol1.c_star, sol1.lam, prof1, sol1.kappa)
    scale2 = hessian_scale(sol2.amplitude, sol2.c_star, sol2.lam, prof2, sol2.kappa)

    S = matrix.entries
    alpha_opt = sol1.amplitude * np.sin(sol1.c_star * matrix.g_values)
    beta_opt = sol2.amplitude * np.cos(sol2.c_star * matrix.j_values)
    # the bilinear pairing evaluated both ways on the optimal distributions
    v1 = float(alpha_opt @ (S @ beta_opt))
    v2 = float(beta_opt @ (alpha_opt @ S))
    return ExtremumReport(
        a_star=sol1.amplitude,
        b_star=sol2.amplitude,
        c1_star=sol1.c_star,
        c2_star=sol2.c_star,
        lambda1=sol1.lam,
        lambda2=sol2.lam,
        ratio1=sol1.ratio,
        ratio2=sol2.ratio,
        d1=d1,
        d2=d2,
        f1_aa=f1_aa,
        f2_bb=f2_bb,
        d1_normalized=abs(d1) / scale1,
        d2_normalized=abs(d2) / scale2,
        residual1=sol1.residual,
        residual2=sol2.residual,
        constraint1=sol1.amplitude**2 * sol1.j_value**2 + float(np.sum(beta0)) ** 2,
        constraint2=sol2.amplitude**2 * sol2.j_value**2 + float(np.sum(alpha0)) ** 2,
        v_problem1=v1,
        v_problem2=v2,
        kappa1=family.kappa1,
        kappa2=family.kappa2,
        common_amplitude=sol1.amplitude if equal_amplitudes else float("nan"),
    )


def profile_table(c_grid, matrix: ActionMatrix, alpha0, beta0) -> np.ndarray:
    """Rows ``(c, I1, J1, I2, J2)``; I1/J1 are NaN when G is undefined."""
    rows = []
    prof2 = problem2_profile(matrix.j_values, matrix, alpha0)
    prof1 = problem1_profile(matrix.g_values, matrix, beta0) if matrix.g_values is not None else None
    for c in c_grid:
        i1, j1 = prof1(c) if prof1 else (math.nan, math.nan)
        i2, j2 = prof2(c)
        rows.append((c, i1, j1, i2, j2))
    return np.array(rows)

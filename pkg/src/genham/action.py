"""Discrete action functionals on staggered paths.

All actions are in units of hbar. ``S`` pairs each half-step momentum with the
position increment it drives; ``R`` is its summation-by-parts partner, which
moves the increment onto the momenta, so

    S - R == p[-1]*q[-1] - p[0]*q[0]

holds to rounding. The potential is evaluated at the step midpoint
``(q[i] + q[i+1])/2``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lattice import (
    HamiltonianSpec,
    PathEnsemble,
    PhasePath,
    infer_momentum_path,
    infer_position_path,
)

__all__ = [
    "ActionMatrix",
    "action_S",
    "action_R",
    "boundary_term",
    "zero_sum_payoffs",
    "reduced_J",
    "reduced_G",
    "build_action_matrix",
    "MatrixCapError",
]

DEFAULT_MATRIX_CAP = 2000


class MatrixCapError(ValueError):
    pass


def _hamiltonian_sum(h: HamiltonianSpec, p, q, dt) -> float:
    q_mid = 0.5 * (q[:-1] + q[1:])
    return float(np.sum(h.energy(p, q_mid)) * dt)


def _action_S_arrays(h: HamiltonianSpec, p, q, dt) -> float:
    return float(np.sum(p * np.diff(q))) - _hamiltonian_sum(h, p, q, dt)


def action_S(h: HamiltonianSpec, path: PhasePath) -> float:
    """``sum_i p[i]*(q[i+1]-q[i]) - H(p[i], qbar[i])*dt``, times the orientation."""
    return path.orientation * _action_S_arrays(h, path.p, path.q, path.dt)


def action_R(h: HamiltonianSpec, path: PhasePath) -> float:
    """``-sum_i q[i]*(p[i+1/2]-p[i-1/2]) - sum_i H*dt`` over interior steps."""
    p, q = path.p, path.q
    pq_dot = -float(np.sum(q[1:-1] * np.diff(p)))
    return path.orientation * (pq_dot - _hamiltonian_sum(h, p, q, path.dt))


def boundary_term(path: PhasePath) -> float:
    """``[pq]_f - [pq]_i`` using the first and last half-step momenta."""
    return path.orientation * (path.p[-1] * path.q[-1] - path.p[0] * path.q[0])


def zero_sum_payoffs(h: HamiltonianSpec, path: PhasePath) -> tuple[float, float]:
    """Return ``(S', R') = (-S, R + [pq]_f - [pq]_i)``; they sum to zero."""
    return -action_S(h, path), action_R(h, path) + boundary_term(path)


def reduced_J(h: HamiltonianSpec, q_samples, dt: float) -> float:
    """Action with ``p`` eliminated through ``qdot = H_p``.

    For ``H = p**2/2m + V`` this is the Lagrangian sum
    ``sum (m*qdot**2/2 - V(qbar))*dt``.
    """
    q = np.asarray(q_samples, dtype=float)
    p = infer_momentum_path(h, q, dt)
    return _action_S_arrays(h, p, q, dt)


def reduced_G(h: HamiltonianSpec, p_samples, dt: float) -> float:
    """Action with ``q`` eliminated through ``pdot = -H_q`` (oscillator only)."""
    if not h.position_invertible:
        raise ValueError(f"G undefined for this Hamiltonian (kind={h.kind!r})")
    p = np.asarray(p_samples, dtype=float)
    q = infer_position_path(h, p, dt)
    return _action_S_arrays(h, p, q, dt)


@dataclass(frozen=True)
class ActionMatrix:
    """``entries[j, k] = S[p_j, q_k]`` with per-path side arrays.

    ``g_values`` is None when ``G`` is undefined for the Hamiltonian.
    """

    entries: np.ndarray
    s_diag: np.ndarray
    r_values: np.ndarray
    j_values: np.ndarray
    g_values: np.ndarray | None
    ensemble_ref: str = ""

    def __post_init__(self):
        n = len(self.s_diag)
        if self.entries.shape != (n, n):
            raise ValueError("entries must be n x n with n = len(s_diag)")

    @property
    def n(self) -> int:
        return len(self.s_diag)

    def diagonal_residual(self) -> float:
        return float(np.max(np.abs(np.diag(self.entries) - self.s_diag)))


def _matrix_rows(h, P, dQ, row_kinetic, col_potential, dt, rows):
    block = np.zeros((len(rows), dQ.shape[0]))
    Pr = P[rows]
    # accumulate step by step so every entry sums in the same order
    for i in range(P.shape[1]):
        block += np.multiply.outer(Pr[:, i], dQ[:, i])
    block -= dt * (row_kinetic[rows][:, None] + col_potential[None, :])
    return block


def build_action_matrix(
    h: HamiltonianSpec,
    ensemble: PathEnsemble,
    workers: int = 1,
    max_size: int = DEFAULT_MATRIX_CAP,
) -> ActionMatrix:
    """Assemble ``S[p_j, q_k]`` over every ordered pair of ensemble paths."""
    n = len(ensemble)
    if n == 0:
        raise ValueError("cannot build an action matrix from an empty ensemble")
    if n > max_size:
        raise MatrixCapError(f"ensemble of {n} paths exceeds matrix cap {max_size}")
    dt = ensemble.config.dt
    P, Q = ensemble.p_matrix, ensemble.q_matrix
    dQ = np.diff(Q, axis=1)
    # H is separable, so the Hamiltonian sum splits into a p-part and a q-part
    row_kinetic = np.sum(h.kinetic(P), axis=1)
    col_potential = np.sum(h.potential(0.5 * (Q[:, :-1] + Q[:, 1:])), axis=1)

    row_blocks = np.array_split(np.arange(n), max(1, min(workers, n)))
    if len(row_blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(
                pool.map(
                    lambda rows: _matrix_rows(h, P, dQ, row_kinetic, col_potential, dt, rows),
                    row_blocks,
                )
            )
        entries = np.vstack(blocks)
    else:
        entries = _matrix_rows(h, P, dQ, row_kinetic, col_potential, dt, np.arange(n))

    s_diag = np.array([action_S(h, path) for path in ensemble])
    r_values = np.array([action_R(h, path) for path in ensemble])
    j_values = np.array([reduced_J(h, path.q, dt) for path in ensemble])
    g_values = None
    # G needs two momentum samples to difference
    if h.position_invertible and ensemble.config.n_steps >= 2:
        g_values = np.array([reduced_G(h, path.p, dt) for path in ensemble])
    return ActionMatrix(entries, s_diag, r_values, j_values, g_values, ensemble.identifier)

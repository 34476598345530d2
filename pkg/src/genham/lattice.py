"""Staggered phase-space lattice paths.

Positions live on integer time steps ``0, dt, ..., n*dt`` and momenta on the
half steps ``dt/2, 3*dt/2, ...``. Paths fan out by adding every branch offset
to the current momentum before each step; pinning an endpoint keeps only the
leaves that land within ``pin_tolerance`` of it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "FREE",
    "HARMONIC",
    "LINEAR",
    "HamiltonianSpec",
    "LatticeConfig",
    "PhasePath",
    "PathEnsemble",
    "EmptyEnsembleError",
    "EnsembleCapError",
    "step_hamilton",
    "enumerate_paths",
    "infer_momentum_path",
    "infer_position_path",
    "time_reverse_path",
]

FREE = "free"
HARMONIC = "harmonic"
LINEAR = "linear-potential"
KINDS = (FREE, HARMONIC, LINEAR)

DEFAULT_MAX_PATHS = 100_000
CONSISTENCY_RTOL = 1e-9


class EmptyEnsembleError(ValueError):
    """Pinned enumeration produced no path reaching the endpoint."""


class EnsembleCapError(ValueError):
    """Requested ensemble exceeds the configured size cap."""


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class HamiltonianSpec:
    """Time-independent ``H = p**2/(2m) + V(q)``.

    ``V`` is zero for ``free``, ``m*omega**2*q**2/2`` for ``harmonic`` and
    ``force*q`` for ``linear-potential``.
    """

    kind: str = FREE
    mass: float = 1.0
    omega: float = 0.0
    force: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}; expected one of {KINDS}")
        for name in ("mass", "omega", "force"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")

    def potential(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == HARMONIC:
            return 0.5 * self.mass * self.omega**2 * q * q
        if self.kind == LINEAR:
            return self.force * q
        return np.zeros_like(q)

    def dV(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == HARMONIC:
            return self.mass * self.omega**2 * q
        if self.kind == LINEAR:
            return np.full_like(q, self.force)
        return np.zeros_like(q)

    def kinetic(self, p):
        p = np.asarray(p, dtype=float)
        return p * p / (2.0 * self.mass)

    def energy(self, p, q):
        return self.kinetic(p) + self.potential(q)

    def velocity(self, p):
        """H_p, the right-hand side of ``qdot = H_p``."""
        return np.asarray(p, dtype=float) / self.mass

    @property
    def position_invertible(self) -> bool:
        # H_q = m*omega**2*q can be solved for q only for a proper oscillator
        return self.kind == HARMONIC and self.omega > 0


@dataclass(frozen=True)
class LatticeConfig:
    dt: float
    n_steps: int
    branch_offsets: tuple[float, ...]
    q_start: float = 0.0
    endpoint: float | None = None
    pin_tolerance: float = 1e-9
    p_start: float = 0.0
    max_paths: int = DEFAULT_MAX_PATHS

    def __post_init__(self):
        offsets = tuple(float(o) for o in self.branch_offsets)
        object.__setattr__(self, "branch_offsets", offsets)
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive and finite")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if not offsets:
            raise ValueError("branch_offsets must be nonempty")
        if any(not math.isfinite(o) for o in offsets):
            raise ValueError("branch_offsets must be finite")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("branch_offsets must be sorted and distinct")
        if not (math.isfinite(self.q_start) and math.isfinite(self.p_start)):
            raise ValueError("q_start and p_start must be finite")
        if self.endpoint is not None:
            if not math.isfinite(self.endpoint):
                raise ValueError("endpoint must be finite")
            if not self.pin_tolerance > 0:
                raise ValueError("pin_tolerance must be positive")
        if self.max_paths < 1:
            raise ValueError("max_paths must be positive")

    @property
    def pinned(self) -> bool:
        return self.endpoint is not None

    @property
    def leaf_count(self) -> int:
        return len(self.branch_offsets) ** self.n_steps

    @property
    def total_time(self) -> float:
        return self.n_steps * self.dt


@dataclass(frozen=True)
class PhasePath:
    """One staggered trajectory.

    ``orientation`` is ``+1`` for a path traversed forward in time and ``-1``
    for a time-reversed one; action integrals pick up that sign.
    """

    q: np.ndarray
    p: np.ndarray
    dt: float
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen(self.q, "q_samples"))
        object.__setattr__(self, "p", _frozen(self.p, "p_samples"))
        if len(self.q) != len(self.p) + 1:
            raise ValueError("need len(q_samples) == len(p_samples) + 1")
        if len(self.p) < 1:
            raise ValueError("a path needs at least one step")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive and finite")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def n_steps(self) -> int:
        return len(self.p)

    def consistency_residual(self, h: HamiltonianSpec) -> float:
        """Largest relative mismatch of ``(q[i+1]-q[i])/dt`` against ``H_p``."""
        qdot = np.diff(self.q) / self.dt
        hp = h.velocity(self.p)
        return float(np.max(np.abs(qdot - hp) / np.maximum(1.0, np.abs(hp))))

    def is_consistent(self, h: HamiltonianSpec, rtol: float = CONSISTENCY_RTOL) -> bool:
        return self.consistency_residual(h) <= rtol

    def __eq__(self, other):
        if not isinstance(other, PhasePath):
            return NotImplemented
        return (
            self.dt == other.dt
            and self.orientation == other.orientation
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None


@dataclass(frozen=True)
class PathEnsemble:
    paths: tuple[PhasePath, ...]
    hamiltonian: HamiltonianSpec
    config: LatticeConfig
    branch_indices: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if self.paths:
            q0 = self.paths[0].q[0]
            if any(path.q[0] != q0 for path in self.paths):
                raise ValueError("all paths must share the initial position")
            if self.config.pinned:
                tol = self.config.pin_tolerance
                if any(abs(path.q[-1] - self.config.endpoint) > tol for path in self.paths):
                    raise ValueError("path misses the pinned endpoint")

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __getitem__(self, i):
        return self.paths[i]

    @property
    def q_matrix(self) -> np.ndarray:
        return np.array([path.q for path in self.paths])

    @property
    def p_matrix(self) -> np.ndarray:
        return np.array([path.p for path in self.paths])

    @property
    def identifier(self) -> str:
        cfg = self.config
        pin = "free-end" if cfg.endpoint is None else f"pin={cfg.endpoint!r}"
        return (
            f"{self.hamiltonian.kind}:n={cfg.n_steps}:dt={cfg.dt!r}:"
            f"branches={len(cfg.branch_offsets)}:{pin}:paths={len(self.paths)}"
        )


def _kick_drift_kick(h: HamiltonianSpec, q, p, dt):
    p_half = p - 0.5 * dt * h.dV(q)
    q_new = q + dt * h.velocity(p_half)
    p_new = p_half - 0.5 * dt * h.dV(q_new)
    return q_new, p_new, p_half


def step_hamilton(h: HamiltonianSpec, q: float, p: float, dt: float) -> tuple[float, float]:
    """Advance ``(q, p)`` by one kick-drift-kick leapfrog step.

    The drift uses the half-step momentum, so ``(q' - q)/dt = H_p(p_half)``
    exactly; the free particle is integrated without error.
    """
    if not all(math.isfinite(x) for x in (q, p, dt)):
        raise ValueError("step_hamilton requires finite q, p and dt")
    if dt <= 0:
        raise ValueError("dt must be positive")
    q_new, p_new, _ = _kick_drift_kick(h, np.float64(q), np.float64(p), dt)
    return float(q_new), float(p_new)


def _enumerate_block(h: HamiltonianSpec, cfg: LatticeConfig, choices: np.ndarray):
    offsets = np.asarray(cfg.branch_offsets)
    count = choices.shape[0]
    q = np.full(count, float(cfg.q_start))
    p = np.full(count, float(cfg.p_start))
    qs = np.empty((count, cfg.n_steps + 1))
    ps = np.empty((count, cfg.n_steps))
    qs[:, 0] = q
    for i in range(cfg.n_steps):
        p = p + offsets[choices[:, i]]
        q, p, p_half = _kick_drift_kick(h, q, p, cfg.dt)
        qs[:, i + 1] = q
        ps[:, i] = p_half
    return qs, ps


def enumerate_paths(
    h: HamiltonianSpec, cfg: LatticeConfig, workers: int = 1
) -> PathEnsemble:
    """All fan-out paths of ``cfg`` in lexicographic branch order.

    With ``workers > 1`` the subtrees under each first-step branch are built
    concurrently; the result is identical to the serial one.
    """
    if cfg.leaf_count > cfg.max_paths:
        raise EnsembleCapError(
            f"{len(cfg.branch_offsets)}**{cfg.n_steps} = {cfg.leaf_count} paths exceeds cap {cfg.max_paths}"
        )
    k, n = len(cfg.branch_offsets), cfg.n_steps
    # base-k digits of the leaf index, most significant first == itertools.product order
    leaf = np.arange(k**n)
    choices = np.stack([(leaf // k ** (n - 1 - i)) % k for i in range(n)], axis=1)
    blocks = np.array_split(choices, k) if workers > 1 and k > 1 else [choices]
    if len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _enumerate_block(h, cfg, b), blocks))
    else:
        parts = [_enumerate_block(h, cfg, choices)]
    qs = np.concatenate([part[0] for part in parts])
    ps = np.concatenate([part[1] for part in parts])

    if cfg.pinned:
        keep = np.abs(qs[:, -1] - cfg.endpoint) <= cfg.pin_tolerance
        if not keep.any():
            raise EmptyEnsembleError(
                f"empty ensemble: no path of {cfg.leaf_count} reaches q={cfg.endpoint} "
                f"within {cfg.pin_tolerance}"
            )
        qs, ps, choices = qs[keep], ps[keep], choices[keep]

    paths = tuple(PhasePath(q, p, cfg.dt) for q, p in zip(qs, ps))
    return PathEnsemble(paths, h, cfg, branch_indices=choices)


def infer_momentum_path(h: HamiltonianSpec, q_samples: Sequence[float], dt: float) -> np.ndarray:
    """Half-step momenta solving ``(q[i+1] - q[i])/dt = H_p``, i.e. ``m*qdot``."""
    q = np.asarray(q_samples, dtype=float)
    if q.ndim != 1 or len(q) < 2:
        raise ValueError("need at least two position samples")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return h.mass * np.diff(q) / dt


def _pdot_at_integer_steps(p: np.ndarray, dt: float) -> np.ndarray:
    n = len(p)
    pdot = np.empty(n + 1)
    pdot[1:n] = np.diff(p) / dt
    if n >= 3:
        # second-order one-sided stencils at the two ends
        pdot[0] = (-2.0 * p[0] + 3.0 * p[1] - p[2]) / dt
        pdot[n] = (2.0 * p[-1] - 3.0 * p[-2] + p[-3]) / dt
    else:
        pdot[0] = pdot[n] = (p[1] - p[0]) / dt
    return pdot


def infer_position_path(h: HamiltonianSpec, p_samples: Sequence[float], dt: float) -> np.ndarray:
    """Integer-step positions solving ``pdot = -H_q`` for the oscillator.

    Returns ``len(p_samples) + 1`` positions. Interior points use the central
    difference of neighbouring half-step momenta; the two ends use one-sided
    stencils.
    """
    if not h.position_invertible:
        raise ValueError(f"H_q not invertible in q for kind={h.kind!r}")
    p = np.asarray(p_samples, dtype=float)
    if p.ndim != 1 or len(p) < 2:
        raise ValueError("need at least two momentum samples")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return -_pdot_at_integer_steps(p, dt) / (h.mass * h.omega**2)


def time_reverse_path(path: PhasePath) -> PhasePath:
    """Apply ``p -> -p, q -> q, t -> -t``.

    Samples are reversed (momenta also negated) and the orientation flips, so
    the action of the reversed path is the negative of the original.
    """
    return PhasePath(path.q[::-1], -path.p[::-1], path.dt, -path.orientation)

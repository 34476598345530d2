"""Batch front end: ``genham <experiment> --config FILE [--output-dir DIR] [--seed N]``.

Exit status is 0 on success, 1 when an experiment stage fails (a
``failure.json`` record names the stage) and 2 for an invalid configuration.
Every run writes ``report.json``; other artifacts follow ``[run] formats``.
"""

from __future__ import annotations

import argparse
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .action import boundary_term, build_action_matrix
from .amplitude import amplitudes_from_pair
from .config import EXPERIMENTS, ConfigError, RunConfig, load_config
from .io import write_csv, write_json
from .lattice import FREE, enumerate_paths
from .mixedpath import (
    check_normalization,
    equal_component_pair,
    generalized_action,
    parallelism_residual,
    saddle_check,
    stationarity_check,
)
from .reference import (
    analytic_kernel,
    compose_propagators,
    interference_damping_trial,
    lattice_propagator,
    microcanonical_transform,
    peak_fwhm,
    sample_free_propagator,
)
from .variational import optimal_amplitude_phase, profile_table, solve_variational

__all__ = ["main", "run_experiment", "StageError"]

PROFILE_POINTS = 501


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        self.error_type = type(exc).__name__
        self.detail = str(exc)
        super().__init__(f"stage '{stage}' failed: {self.error_type}: {self.detail}")


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        raise StageError(name, exc) from exc


class _Emitter:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def meta(self, artifact: str) -> dict:
        return {
            "seed": self.cfg.seed,
            "config_digest": self.cfg.digest(),
            "experiment": self.cfg.experiment,
            "artifact": artifact,
        }

    def csv(self, name: str, header, rows, scientific: bool = False):
        if "csv" in self.cfg.formats:
            write_csv(self.out / f"{name}.csv", header, rows, self.meta(name), scientific)
            self.files.append(f"{name}.csv")

    def json(self, name: str, payload: dict, force: bool = False):
        if force or "json" in self.cfg.formats:
            write_json(self.out / f"{name}.json", payload, self.meta(name))
            self.files.append(f"{name}.json")


def _ensemble(cfg: RunConfig):
    with stage("enumerate"):
        return enumerate_paths(cfg.hamiltonian, cfg.lattice, workers=cfg.workers)


def _matrix(cfg: RunConfig, ens):
    with stage("build_action_matrix"):
        return build_action_matrix(cfg.hamiltonian, ens, workers=cfg.workers)


def _emit_matrix(em: _Emitter, matrix):
    n = matrix.n
    em.csv(
        "action_matrix",
        ["j"] + [f"k{k}" for k in range(n)],
        ([j] + list(matrix.entries[j]) for j in range(n)),
        scientific=True,
    )


def _matrix_payload(matrix) -> dict:
    return {
        "n": matrix.n,
        "identifier": matrix.ensemble_ref,
        "entries": matrix.entries,
        "s_diag": matrix.s_diag,
        "r_values": matrix.r_values,
        "j_values": matrix.j_values,
        "g_values": matrix.g_values,
        "diagonal_residual": matrix.diagonal_residual(),
    }


def _run_enumerate(cfg, em):
    ens = _ensemble(cfg)
    n_steps = cfg.lattice.n_steps
    em.csv("paths", ["index"] + [f"q{i}" for i in range(n_steps + 1)] + [f"p{i}" for i in range(n_steps)],
           ([j] + list(path.q) + list(path.p) for j, path in enumerate(ens)))
    em.json("paths", {"paths": [{"index": j, "q": path.q, "p": path.p} for j, path in enumerate(ens)]})
    summary = {
        "paths": len(ens),
        "leaf_count": cfg.lattice.leaf_count,
        "pinned": cfg.lattice.pinned,
        "identifier": ens.identifier,
        "branch_indices": [] if ens.branch_indices is None else ens.branch_indices,
        "max_consistency_residual": max(p.consistency_residual(cfg.hamiltonian) for p in ens),
    }
    em.json("ensemble", summary)
    return summary


def _run_action_matrix(cfg, em):
    ens = _ensemble(cfg)
    matrix = _matrix(cfg, ens)
    _emit_matrix(em, matrix)
    boundary = np.array([boundary_term(p) for p in ens])
    g = matrix.g_values if matrix.g_values is not None else np.full(matrix.n, math.nan)
    em.csv(
        "path_actions",
        ["path", "S", "R", "boundary", "J", "G"],
        zip(range(matrix.n), matrix.s_diag, matrix.r_values, boundary, matrix.j_values, g),
    )
    payload = _matrix_payload(matrix)
    payload["legendre_residual"] = float(np.max(np.abs(matrix.s_diag - matrix.r_values - boundary)))
    em.json("action_matrix", payload)
    return {k: payload[k] for k in ("n", "diagonal_residual", "legendre_residual")}


def _run_extremize(cfg, em):
    ens = _ensemble(cfg)
    matrix = _matrix(cfg, ens)
    _emit_matrix(em, matrix)
    num = cfg.numeric
    with stage("equal_component_pair"):
        pair = equal_component_pair(matrix.n, num.pr)
    with stage("generalized_action"):
        v = generalized_action(pair, matrix)
        total, normalized = check_normalization(pair)
    with stage("parallelism"):
        par = parallelism_residual(pair, matrix)
    with stage("stationarity"):
        stat = stationarity_check(pair, matrix, num.probes, cfg.seed)
    with stage("saddle"):
        saddle = saddle_check(pair, matrix, num.probes, cfg.seed, num.tol)
    payload = {
        "n": matrix.n,
        "alpha": pair.alpha,
        "beta": pair.beta,
        "pr": pair.pr,
        "total_probability": total,
        "normalized": normalized,
        "v": v,
        "parallelism_residual": par,
        "stationarity_residual": stat,
        "saddle": saddle.to_dict(),
    }
    if matrix.n == 2:
        payload["two_path_s"] = v / (pair.alpha[0] * pair.beta[0])
        payload["matrix_sum"] = float(np.sum(matrix.entries))
    em.json("pair", payload)
    em.json("action_matrix", _matrix_payload(matrix))
    amps = amplitudes_from_pair(pair)
    em.csv("amplitudes", ["index", "phi_re", "phi_im", "theta"],
           zip(range(matrix.n), amps.phis.real, amps.phis.imag, amps.thetas))
    return {"v": v, "n": matrix.n, "stationarity_residual": stat, "saddle_holds": saddle.holds}


def _run_variational(cfg, em):
    ens = _ensemble(cfg)
    matrix = _matrix(cfg, ens)
    num = cfg.numeric
    with stage("equal_component_pair"):
        pair = equal_component_pair(matrix.n, num.pr)
    with stage("solve_variational"):
        rep = solve_variational(matrix, pair.alpha, pair.beta, num.bracket1, num.bracket2,
                                pr=num.pr, scan_points=num.scan_points)
    with stage("profile_table"):
        lo = min(num.bracket1[0], num.bracket2[0])
        hi = max(num.bracket1[1], num.bracket2[1])
        table = profile_table(np.linspace(lo, hi, PROFILE_POINTS), matrix, pair.alpha, pair.beta)
    em.csv("profiles", ["c", "I1", "J1", "I2", "J2"], table)
    phis = optimal_amplitude_phase(matrix.s_diag, rep.a_star, rep.c1_star)
    payload = rep.to_dict()
    payload["phi_re"] = phis.real
    payload["phi_im"] = phis.imag
    em.json("extremum", payload)
    return {"c1_star": rep.c1_star, "c2_star": rep.c2_star,
            "d1_normalized": rep.d1_normalized, "d2_normalized": rep.d2_normalized}


def _run_propagate(cfg, em):
    num = cfg.numeric
    kern = analytic_kernel(cfg.hamiltonian, num.hbar)
    rows, regs = [], ()
    kwargs = {} if num.regulators is None else {"regulators": num.regulators}
    with stage("lattice_propagator"):
        for qf in num.q_final:
            res = lattice_propagator(cfg.hamiltonian, num.total_time, num.q_initial, qf, num.n_slices,
                                     num.q_window, num.q_points, num.hbar, full_output=True, **kwargs)
            exact = complex(kern(num.q_initial, qf, num.total_time))
            regs = res.regulators
            rows.append((qf, res.value.real, res.value.imag, exact.real, exact.imag,
                         abs(res.value - exact) / abs(exact)))
    em.csv("propagate", ["q_final", "lattice_re", "lattice_im", "analytic_re", "analytic_im",
                         "rel_error"], rows)
    summary = {"max_rel_error": max(r[-1] for r in rows), "regulators": list(regs),
               "n_slices": num.n_slices, "total_time": num.total_time}
    em.json("propagate", summary)
    return summary


def _run_compose(cfg, em):
    num = cfg.numeric
    kern = analytic_kernel(cfg.hamiltonian, num.hbar)
    kwargs = {} if num.regulators is None else {"regulators": num.regulators}
    span = num.t_final - num.t_initial
    rows, regs = [], ()
    with stage("compose_propagators"):
        for split in num.t_splits:
            t_m = num.t_initial + split
            for qf in num.q_final:
                res = compose_propagators(kern, num.t_initial, t_m, num.t_final, num.q_initial, qf,
                                          num.compose_window, num.compose_points, full_output=True,
                                          **kwargs)
                direct = complex(kern(num.q_initial, qf, span))
                regs = res.regulators
                rows.append((t_m, qf, res.value.real, res.value.imag, direct.real, direct.imag,
                             abs(res.value - direct) / abs(direct), res.edge_ratio))
    em.csv("compose", ["t_mid", "q_final", "composed_re", "composed_im", "direct_re", "direct_im",
                       "rel_error", "edge_ratio"], rows)
    summary = {"max_rel_error": max(r[6] for r in rows), "regulators": list(regs)}
    em.json("compose", summary)
    return summary


def _run_microcanonical(cfg, em):
    num = cfg.numeric
    if cfg.hamiltonian.kind != FREE:
        raise StageError("sample_free_propagator",
                         ValueError("the micro-canonical transform is defined for the free particle"))
    with stage("sample_free_propagator"):
        prop = sample_free_propagator(cfg.hamiltonian.mass, num.hbar, num.q_length, num.t_length,
                                      num.spectral_points)
    with stage("microcanonical_transform"):
        grid = microcanonical_transform(prop, check_nyquist=max(abs(p) for p in num.p_probe))
    with stage("peak_fwhm"):
        wide = sample_free_propagator(cfg.hamiltonian.mass, num.hbar, 2 * num.q_length, num.t_length,
                                      2 * num.spectral_points, num.spectral_points)
        fwhm, fwhm_wide = peak_fwhm(prop), peak_fwhm(wide)
    p = grid.p_grid
    em.csv("endpoint_density", ["p_initial", "p_final", "density"],
           ((p[a], p[b], grid.endpoint_density[a, b]) for a in range(len(p)) for b in range(len(p))))
    peaks = []
    for probe in num.p_probe:
        a = int(np.argmin(np.abs(p - probe)))
        em.csv(f"energy_slice_p{probe:g}", ["E", "magnitude"], zip(grid.e_grid, grid.energy_density[a]))
        expected = p[a] ** 2 / (2 * cfg.hamiltonian.mass)
        found = grid.energy_peak(probe)
        peaks.append({"p_probe": probe, "p_grid": p[a], "expected_E": expected, "peak_E": found,
                      "offset_cells": abs(found - expected) / grid.de})
    pi, pf = grid.endpoint_argmax()
    summary = {
        "argmax": [pi, pf],
        "diagonal_offset_cells": abs(pi - pf) / grid.dp,
        "dp": grid.dp,
        "dE": grid.de,
        "energy_peaks": peaks,
        "fwhm": fwhm,
        "fwhm_doubled_window": fwhm_wide,
        "fwhm_ratio": fwhm / fwhm_wide,
        "window": list(grid.window),
    }
    em.json("microcanonical", summary)
    return summary


def _run_damping(cfg, em):
    num = cfg.numeric
    with stage("interference_damping_trial"):
        rep = interference_damping_trial(num.n_paths, num.phase_model, cfg.seed, num.trials)
        coherent = interference_damping_trial(num.n_paths, "coherent", cfg.seed, 1)
    em.csv("damping_trials", ["trial", "cross_term"], enumerate(rep.cross_terms))
    summary = rep.to_dict()
    summary["coherent_probability"] = coherent.mean_probability
    summary["within_3_se"] = abs(rep.mean_cross) < 3 * rep.std_error if rep.trials > 1 else None
    em.json("damping", summary)
    return summary


RUNNERS = {
    "enumerate": _run_enumerate,
    "action-matrix": _run_action_matrix,
    "extremize": _run_extremize,
    "variational": _run_variational,
    "propagate": _run_propagate,
    "compose": _run_compose,
    "microcanonical": _run_microcanonical,
    "damping": _run_damping,
}


def run_experiment(cfg: RunConfig) -> int:
    """Run ``cfg.experiment`` and write its artifacts; return the exit status."""
    em = _Emitter(cfg)
    try:
        summary = RUNNERS[cfg.experiment](cfg, em)
    except StageError as err:
        record = {"status": "failed", "stage": err.stage, "error_type": err.error_type,
                  "message": err.detail}
        em.json("failure", record, force=True)
        print(f"genham: {err}", file=sys.stderr)
        return 1
    em.json("report", {"status": "ok", "artifacts": sorted(em.files), "summary": summary}, force=True)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genham", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="INI run configuration")
    parser.add_argument("--output-dir", help="override [run] output_dir")
    parser.add_argument("--seed", type=int, help="override [run] seed")
    parser.add_argument("--version", action="version", version=f"genham {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"genham: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"genham: cannot read config: {err}", file=sys.stderr)
        return 2
    if cfg.experiment is not None and cfg.experiment != args.experiment:
        print(f"genham: config names experiment '{cfg.experiment}' but '{args.experiment}' was requested",
              file=sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("genham: --seed must be non-negative", file=sys.stderr)
        return 2
    cfg = cfg.with_overrides(experiment=args.experiment, output_dir=args.output_dir, seed=args.seed)
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())

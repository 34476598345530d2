"""Run configuration: an INI document parsed and validated in one pass.

Every problem is collected with its line number, so a bad file reports all of
its errors at once. Unknown sections and keys are rejected by name.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

from .lattice import KINDS, HamiltonianSpec, LatticeConfig

__all__ = ["EXPERIMENTS", "ConfigError", "NumericConfig", "RunConfig", "parse_config", "load_config"]

EXPERIMENTS = (
    "enumerate",
    "action-matrix",
    "extremize",
    "variational",
    "propagate",
    "compose",
    "microcanonical",
    "damping",
)
FORMATS = ("csv", "json")
PHASE_MODELS = ("uniform-random", "coherent")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


# converters raise ValueError with a message naming the constraint
def _float(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise ValueError("must be finite")
    return x


def _positive(text: str) -> float:
    x = _float(text)
    if not x > 0:
        raise ValueError(f"must be positive (got {text})")
    return x


def _nonnegative(text: str) -> float:
    x = _float(text)
    if x < 0:
        raise ValueError(f"must be non-negative (got {text})")
    return x


def _int(minimum: int) -> Callable[[str], int]:
    def conv(text: str) -> int:
        try:
            x = int(text)
        except ValueError:
            raise ValueError(f"expected an integer (got {text!r})") from None
        if x < minimum:
            raise ValueError(f"must be at least {minimum} (got {x})")
        return x

    return conv


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean (got {text!r})")


def _enum(choices) -> Callable[[str], str]:
    def conv(text: str) -> str:
        if text not in choices:
            raise ValueError(f"must be one of {', '.join(choices)} (got {text!r})")
        return text

    return conv


def _float_list(text: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ValueError("expected at least one number")
    try:
        return tuple(_float(p) for p in parts)
    except ValueError:
        raise ValueError(f"expected a list of finite numbers (got {text!r})") from None


def _positive_list(text: str) -> tuple[float, ...]:
    values = _float_list(text)
    if any(v <= 0 for v in values):
        raise ValueError(f"every value must be positive (got {text!r})")
    return values


def _interval(text: str) -> tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2 or not values[0] < values[1]:
        raise ValueError(f"expected 'lo, hi' with lo < hi (got {text!r})")
    return values


def _formats(text: str) -> tuple[str, ...]:
    parts = tuple(p for p in re.split(r"[,\s]+", text.strip()) if p)
    bad = [p for p in parts if p not in FORMATS]
    if not parts or bad:
        raise ValueError(f"formats must be a non-empty subset of {', '.join(FORMATS)} (got {text!r})")
    return tuple(f for f in FORMATS if f in parts)


def _text(text: str) -> str:
    if not text.strip():
        raise ValueError("must not be empty")
    return text.strip()


# (converter, default); a default of None means "unset"
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "run": {
        "experiment": (_enum(EXPERIMENTS), None),
        "seed": (_int(0), 0),
        "workers": (_int(1), 1),
        "output_dir": (_text, "genham-out"),
        "formats": (_formats, FORMATS),
    },
    "hamiltonian": {
        "kind": (_enum(KINDS), "free"),
        "mass": (_positive, 1.0),
        "omega": (_nonnegative, 0.0),
        "force": (_float, 0.0),
    },
    "lattice": {
        "dt": (_positive, 1.0),
        "n_steps": (_int(1), 2),
        "branch_offsets": (_float_list, (-1.0, 0.0, 1.0)),
        "q_start": (_float, 0.0),
        "p_start": (_float, 0.0),
        "endpoint": (_float, None),
        "unpinned": (_bool, False),
        "pin_tolerance": (_positive, 1e-9),
        "max_paths": (_int(1), 100_000),
    },
    "numeric": {
        "pr": (_positive, 1.0),
        "probes": (_int(1), 10_000),
        "tol": (_positive, 1e-9),
        "bracket1": (_interval, (0.05, 10.0)),
        "bracket2": (_interval, (0.05, 60.0)),
        "scan_points": (_int(10), 10_000),
        "hbar": (_positive, 1.0),
        "total_time": (_positive, 1.0),
        "n_slices": (_int(1), 3),
        "q_initial": (_float, 0.0),
        "q_final": (_float_list, (-2.0, -1.0, 0.0, 1.0, 2.0)),
        "q_window": (_interval, (-8.0, 8.0)),
        "q_points": (_int(3), 256),
        "regulators": (_positive_list, None),
        "t_initial": (_float, 0.0),
        "t_final": (_float, 2.0),
        "t_splits": (_float_list, (0.7, 1.0, 1.3)),
        "compose_window": (_interval, (-40.0, 40.0)),
        "compose_points": (_int(3), 2**14),
        "q_length": (_positive, 64.0),
        "t_length": (_positive, 64.0),
        "spectral_points": (_int(8), 256),
        "p_probe": (_float_list, (0.5, 1.0, 2.0)),
        "n_paths": (_int(1), 1000),
        "trials": (_int(1), 1000),
        "phase_model": (_enum(PHASE_MODELS), "uniform-random"),
    },
}


@dataclass(frozen=True)
class NumericConfig:
    pr: float = 1.0
    probes: int = 10_000
    tol: float = 1e-9
    bracket1: tuple[float, float] = (0.05, 10.0)
    bracket2: tuple[float, float] = (0.05, 60.0)
    scan_points: int = 10_000
    hbar: float = 1.0
    total_time: float = 1.0
    n_slices: int = 3
    q_initial: float = 0.0
    q_final: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
    q_window: tuple[float, float] = (-8.0, 8.0)
    q_points: int = 256
    regulators: tuple[float, ...] | None = None
    t_initial: float = 0.0
    t_final: float = 2.0
    t_splits: tuple[float, ...] = (0.7, 1.0, 1.3)
    compose_window: tuple[float, float] = (-40.0, 40.0)
    compose_points: int = 2**14
    q_length: float = 64.0
    t_length: float = 64.0
    spectral_points: int = 256
    p_probe: tuple[float, ...] = (0.5, 1.0, 2.0)
    n_paths: int = 1000
    trials: int = 1000
    phase_model: str = "uniform-random"


@dataclass(frozen=True)
class RunConfig:
    experiment: str | None
    hamiltonian: HamiltonianSpec
    lattice: LatticeConfig
    numeric: NumericConfig = field(default_factory=NumericConfig)
    seed: int = 0
    workers: int = 1
    output_dir: str = "genham-out"
    formats: tuple[str, ...] = FORMATS

    def with_overrides(self, **changes) -> "RunConfig":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig(**values)

    def canonical(self) -> dict:
        """Every setting that can change an output; workers and output_dir excluded."""
        return {
            "experiment": self.experiment,
            "hamiltonian": asdict(self.hamiltonian),
            "lattice": asdict(self.lattice),
            "numeric": asdict(self.numeric),
            "seed": self.seed,
            "formats": list(self.formats),
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> tuple[dict, dict]:
    """Map sections and ``(section, key)`` pairs to 1-based line numbers."""
    sections, keys = {}, {}
    current = None
    for number, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith(("#", ";")):
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, number)
            continue
        m = _KEY_RE.match(line)
        if m and current is not None and not line[:1].isspace():
            keys.setdefault((current, m.group(1).strip().lower()), number)
    return sections, keys


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        Listing every unknown key, type mismatch and constraint violation,
        each prefixed with its line number.
    """
    sections, keys = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, default_section="\0none")
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc.message if hasattr(exc, 'message') else exc}"]) from None

    errors: list[str] = []
    values: dict[str, dict[str, Any]] = {}

    def where(section, key=None):
        line = keys.get((section, key)) if key else sections.get(section)
        return f"line {line}: " if line else ""

    for section in parser.sections():
        if section not in SCHEMA:
            errors.append(f"{where(section)}unknown section [{section}]")
    for section, schema in SCHEMA.items():
        got = values.setdefault(section, {})
        for key, (_, default) in schema.items():
            got[key] = default
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in schema:
                errors.append(f"{where(section, key)}unknown key '{key}' in [{section}]")
                continue
            try:
                got[key] = schema[key][0](raw)
            except ValueError as exc:
                errors.append(f"{where(section, key)}[{section}] {key}: {exc}")

    lat = values["lattice"]
    if parser.has_option("lattice", "endpoint") and lat["unpinned"]:
        errors.append(
            f"{where('lattice', 'unpinned')}conflict: 'endpoint' pins the ensemble "
            f"(line {keys.get(('lattice', 'endpoint'))}) but 'unpinned' is true"
        )
    ham = values["hamiltonian"]
    if ham["kind"] == "harmonic" and not ham["omega"] > 0:
        errors.append(f"{where('hamiltonian', 'omega')}[hamiltonian] omega: must be positive for kind=harmonic")
    num = values["numeric"]
    if not num["t_initial"] < num["t_final"]:
        errors.append(f"{where('numeric', 't_final')}[numeric] t_final: must exceed t_initial")
    elif any(not 0 < s < num["t_final"] - num["t_initial"] for s in num["t_splits"]):
        errors.append(
            f"{where('numeric', 't_splits')}[numeric] t_splits: each split must lie strictly "
            f"inside (0, t_final - t_initial)"
        )

    hamiltonian = lattice = None
    if not errors:
        try:
            hamiltonian = HamiltonianSpec(ham["kind"], ham["mass"], ham["omega"], ham["force"])
        except ValueError as exc:
            errors.append(f"{where('hamiltonian')}[hamiltonian] {exc}")
        try:
            lattice = LatticeConfig(
                dt=lat["dt"],
                n_steps=lat["n_steps"],
                branch_offsets=lat["branch_offsets"],
                q_start=lat["q_start"],
                endpoint=lat["endpoint"],
                pin_tolerance=lat["pin_tolerance"],
                p_start=lat["p_start"],
                max_paths=lat["max_paths"],
            )
        except ValueError as exc:
            errors.append(f"{where('lattice')}[lattice] {exc}")
    if errors:
        raise ConfigError(errors)

    run = values["run"]
    return RunConfig(
        experiment=run["experiment"],
        hamiltonian=hamiltonian,
        lattice=lattice,
        numeric=NumericConfig(**num),
        seed=run["seed"],
        workers=run["workers"],
        output_dir=run["output_dir"],
        formats=run["formats"],
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

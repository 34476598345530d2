import numpy as np
import pytest

from genham.lattice import HamiltonianSpec, LatticeConfig, enumerate_paths

FREE_UNIT = HamiltonianSpec("free", 1.0)

# five lattice points with both ends pinned: three paths
THREE_PATH_CFG = LatticeConfig(dt=1.0, n_steps=2, branch_offsets=(-2, -1, 0, 1, 2), endpoint=0.0)

# two intermediate times with two positions each: four paths
FOUR_PATH_H = HamiltonianSpec("harmonic", 1.0, 0.5)
FOUR_PATH_CFG = LatticeConfig(dt=1.0, n_steps=3, branch_offsets=(-3, -1, 0.5, 2.5), endpoint=2.40625)

# three harmonic paths with distinct G values, used by the variational problems
VAR_H = HamiltonianSpec("harmonic", 1.0, 1.0)
VAR_CFG = LatticeConfig(
    dt=0.5,
    n_steps=3,
    branch_offsets=(-1, 0, 1),
    q_start=0.3,
    p_start=0.2,
    endpoint=0.22,
    pin_tolerance=0.16,
)


@pytest.fixture
def three_path_ensemble():
    return enumerate_paths(FREE_UNIT, THREE_PATH_CFG)


@pytest.fixture
def var_ensemble():
    return enumerate_paths(VAR_H, VAR_CFG)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_SESSION = {}


def pytest_sessionstart(session):
    import time

    _SESSION["start"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    import time

    elapsed = time.perf_counter() - _SESSION["start"]
    verdict = "PASS" if elapsed < 120 else "FAIL"
    terminalreporter.write_line(f"[criterion 10] {verdict} total suite runtime {elapsed:.1f} s (budget 120 s)")

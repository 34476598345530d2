import pytest

from genham.config import EXPERIMENTS, ConfigError, NumericConfig, load_config, parse_config

MINIMAL = """\
[hamiltonian]
kind = free

[lattice]
endpoint = 0
"""


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.experiment is None
    assert cfg.hamiltonian.kind == "free" and cfg.hamiltonian.mass == 1.0
    assert cfg.lattice.dt == 1.0 and cfg.lattice.n_steps == 2
    assert cfg.lattice.branch_offsets == (-1.0, 0.0, 1.0)
    assert cfg.lattice.endpoint == 0.0
    assert cfg.numeric == NumericConfig()
    assert cfg.seed == 0 and cfg.workers == 1
    assert cfg.formats == ("csv", "json")


def test_empty_document():
    cfg = parse_config("")
    assert cfg.lattice.endpoint is None


def test_negative_dt_names_key():
    errs = errors_of("[lattice]\ndt = -1\n")
    assert len(errs) == 1
    assert errs[0].startswith("line 2:")
    assert "dt" in errs[0] and "positive" in errs[0]


def test_pin_conflict():
    errs = errors_of("[lattice]\nendpoint = 0\nunpinned = true\n")
    assert any(e.startswith("line 3: conflict") and "endpoint" in e for e in errs)


def test_all_errors_reported():
    text = "[run]\ncolour = blue\n[lattice]\ndt = -1\nendpoint = 0\nunpinned = true\nn_steps = two\n"
    errs = errors_of(text)
    assert len(errs) == 4
    assert errs[0] == "line 2: unknown key 'colour' in [run]"
    assert any("line 4:" in e and "dt" in e for e in errs)
    assert any("line 7:" in e and "n_steps" in e for e in errs)
    assert any("conflict" in e for e in errs)
    assert all(e in str(ConfigError(errs)) for e in errs)


def test_unknown_section():
    errs = errors_of("[extras]\nx = 1\n")
    assert errs == ["line 1: unknown section [extras]"]


@pytest.mark.parametrize(
    "text, key",
    [
        ("[hamiltonian]\nmass = 0\n", "mass"),
        ("[hamiltonian]\nmass = nan\n", "mass"),
        ("[hamiltonian]\nkind = quartic\n", "kind"),
        ("[hamiltonian]\nkind = harmonic\n", "omega"),
        ("[numeric]\ntol = inf\n", "tol"),
        ("[numeric]\nbracket1 = 5, 1\n", "bracket1"),
        ("[numeric]\nregulators = 0.1, -0.2\n", "regulators"),
        ("[numeric]\nt_splits = 0.5, 3\n", "t_splits"),
        ("[numeric]\nphase_model = gaussian\n", "phase_model"),
        ("[run]\nexperiment = plot\n", "experiment"),
        ("[run]\nformats = csv, xml\n", "formats"),
        ("[run]\nseed = -3\n", "seed"),
        ("[lattice]\nbranch_offsets = 0, 0\n", "lattice"),
    ],
)
def test_constraint_violations(text, key):
    errs = errors_of(text)
    assert any(key in e for e in errs), errs


def test_every_experiment_accepted():
    for name in EXPERIMENTS:
        assert parse_config(f"[run]\nexperiment = {name}\n").experiment == name


def test_digest_ignores_workers_and_output():
    a = parse_config(MINIMAL)
    b = parse_config("[run]\nworkers = 4\noutput_dir = elsewhere\n" + MINIMAL)
    assert a.digest() == b.digest()
    assert a.digest() != a.with_overrides(seed=1).digest()
    assert a.digest().startswith("sha256:")


def test_overrides_skip_none():
    cfg = parse_config(MINIMAL).with_overrides(seed=None, output_dir="x")
    assert cfg.seed == 0 and cfg.output_dir == "x"


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(MINIMAL)
    assert load_config(path) == parse_config(MINIMAL)


def test_syntax_error():
    errs = errors_of("dt = 1\n")
    assert errs[0].startswith("syntax")

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genham.action import (
    MatrixCapError,
    action_R,
    action_S,
    boundary_term,
    build_action_matrix,
    reduced_G,
    reduced_J,
    zero_sum_payoffs,
)
from genham.lattice import HamiltonianSpec, LatticeConfig, PhasePath, enumerate_paths

from conftest import FREE_UNIT

HO = HamiltonianSpec("harmonic", 1.0, 1.0)
UNIFORM = PhasePath(np.linspace(0, 1, 5), np.ones(4), 0.25)
REST = PhasePath(np.zeros(5), np.zeros(4), 0.25)

# classical oscillator path from q=0 at t=0 to q=1 at t=pi/4
T_CL = math.pi / 4
S_CL = 0.5 * (1.0 * math.cos(T_CL)) / math.sin(T_CL)


def classical_oscillator(n=100):
    dt = T_CL / n
    t = np.arange(n + 1) * dt
    half = t[:-1] + dt / 2
    amp = 1.0 / math.sin(T_CL)
    return amp * np.sin(t), amp * np.cos(half), dt


class TestS:
    def test_uniform_free(self):
        assert action_S(FREE_UNIT, UNIFORM) == pytest.approx(0.5, abs=1e-15)

    def test_rest(self):
        assert action_S(HO, REST) == 0.0

    def test_classical_oscillator(self):
        q, p, dt = classical_oscillator()
        assert action_S(HO, PhasePath(q, p, dt)) == pytest.approx(S_CL, abs=1e-3)


class TestR:
    def test_rest(self):
        assert action_R(HO, REST) == 0.0

    def test_uniform_free(self):
        assert action_R(FREE_UNIT, UNIFORM) == pytest.approx(-0.5, abs=1e-15)

    def test_legendre_identity_on_ensembles(self):
        for h in (FREE_UNIT, HO, HamiltonianSpec("linear-potential", 1.3, force=0.7)):
            ens = enumerate_paths(h, LatticeConfig(0.2, 5, (-1, 0.2, 1.1), q_start=0.4, p_start=-0.3))
            for path in ens:
                s, r, b = action_S(h, path), action_R(h, path), boundary_term(path)
                assert abs(s - r - b) <= 1e-12 * max(1.0, abs(s))
                s2, r2 = zero_sum_payoffs(h, path)
                assert abs(s2 + r2) <= 1e-12 * max(1.0, abs(s))


class TestReduced:
    def test_J_uniform(self):
        assert reduced_J(FREE_UNIT, UNIFORM.q, 0.25) == pytest.approx(0.5, abs=1e-15)

    def test_J_rest(self):
        assert reduced_J(HO, np.zeros(4), 0.1) == 0.0

    def test_J_classical(self):
        q, _, dt = classical_oscillator()
        assert reduced_J(HO, q, dt) == pytest.approx(S_CL, abs=1e-3)

    def test_G_rest(self):
        assert reduced_G(HO, np.zeros(4), 0.1) == 0.0

    def test_G_classical(self):
        _, p, dt = classical_oscillator()
        assert reduced_G(HO, p, dt) == pytest.approx(S_CL, abs=1e-3)

    @pytest.mark.parametrize("kind", ["free", "linear-potential"])
    def test_G_undefined(self, kind):
        with pytest.raises(ValueError, match="G undefined"):
            reduced_G(HamiltonianSpec(kind), [1.0, 1.0, 1.0], 0.1)

    def test_on_shell_convergence_second_order(self):
        gaps_j, gaps_g = [], []
        for n in (40, 80, 160):
            dt = 2.0 / n
            cfg = LatticeConfig(dt, n, (0.0,), q_start=1.0, p_start=0.0)
            path = enumerate_paths(HO, cfg)[0]
            s = action_S(HO, path)
            gaps_j.append(abs(s - reduced_J(HO, path.q, dt)))
            gaps_g.append(abs(s - reduced_G(HO, path.p, dt)))
        # the leapfrog momentum is exactly m*dq/dt, so J agrees to rounding
        assert max(gaps_j) < 1e-12
        rates = np.log2(np.array(gaps_g[:-1]) / np.array(gaps_g[1:]))
        assert np.all(rates > 1.8)


class TestMatrix:
    def test_three_paths(self, three_path_ensemble):
        m = build_action_matrix(FREE_UNIT, three_path_ensemble)
        assert m.entries.shape == (3, 3)
        assert m.g_values is None
        assert m.diagonal_residual() <= 1e-12

    def test_two_path_term_by_term(self):
        cfg = LatticeConfig(0.5, 3, (-1.0, 0.5))
        ens = enumerate_paths(FREE_UNIT, LatticeConfig(0.5, 3, (-1.0, 0.5)))
        paths = [ens[0], ens[5]]
        from genham.lattice import PathEnsemble

        two = PathEnsemble(paths, FREE_UNIT, cfg)
        m = build_action_matrix(FREE_UNIT, two)
        for j in range(2):
            for k in range(2):
                total = 0.0
                p, q = paths[j].p, paths[k].q
                for i in range(3):
                    total += p[i] * (q[i + 1] - q[i]) - p[i] ** 2 / 2 * 0.5
                assert m.entries[j, k] == pytest.approx(total, abs=1e-14)

    def test_side_arrays(self, var_ensemble):
        from conftest import VAR_H

        m = build_action_matrix(VAR_H, var_ensemble)
        for j, path in enumerate(var_ensemble):
            assert m.s_diag[j] == action_S(VAR_H, path)
            assert m.r_values[j] == action_R(VAR_H, path)
            assert m.g_values[j] == reduced_G(VAR_H, path.p, path.dt)

    def test_workers_bit_identical(self):
        ens = enumerate_paths(HO, LatticeConfig(0.3, 5, (-1, 0, 0.7, 1.5)))
        one = build_action_matrix(HO, ens, workers=1)
        four = build_action_matrix(HO, ens, workers=4)
        assert one.entries.tobytes() == four.entries.tobytes()

    def test_cap(self):
        ens = enumerate_paths(FREE_UNIT, LatticeConfig(1.0, 4, (-1, 0, 1)))
        with pytest.raises(MatrixCapError):
            build_action_matrix(FREE_UNIT, ens, max_size=50)


@settings(max_examples=50, deadline=None)
@given(
    q=st.lists(st.floats(-5, 5), min_size=2, max_size=8),
    data=st.data(),
    dt=st.floats(0.01, 2.0),
    orientation=st.sampled_from([1, -1]),
)
def test_legendre_identity_random_paths(q, data, dt, orientation):
    p = data.draw(st.lists(st.floats(-5, 5), min_size=len(q) - 1, max_size=len(q) - 1))
    path = PhasePath(q, p, dt, orientation)
    s, r, b = action_S(HO, path), action_R(HO, path), boundary_term(path)
    scale = max(1.0, abs(s), abs(r), abs(b))
    assert abs(s - r - b) <= 1e-12 * scale


def test_one_step_ensemble_has_no_G():
    h = HamiltonianSpec("harmonic", 1.0, 1.0)
    matrix = build_action_matrix(h, enumerate_paths(h, LatticeConfig(0.5, 1, (-1.0, 1.0))))
    assert matrix.n == 2 and matrix.g_values is None

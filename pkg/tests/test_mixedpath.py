import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genham.action import build_action_matrix
from genham.amplitude import probability
from genham.mixedpath import (
    MixedPathPair,
    check_normalization,
    equal_component_pair,
    generalized_action,
    parallelism_residual,
    saddle_check,
    stationarity_check,
)

from conftest import FREE_UNIT

S_GENERIC = np.array([[1.0, 2.0], [3.0, 4.0]])
R2 = 1 / math.sqrt(2)


def balanced_matrix(n, rng):
    """Random matrix with every row sum and column sum equal."""
    a = rng.normal(size=(n, n))
    a -= a.mean(axis=1, keepdims=True)
    a -= a.mean(axis=0, keepdims=True)
    return a + 0.7


class TestPair:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            MixedPathPair([1.2], [0.0])

    def test_immutable(self):
        pair = equal_component_pair(2)
        with pytest.raises(ValueError):
            pair.alpha[0] = 0.0


class TestNormalization:
    def test_quarter_root_two_components(self):
        c = 1 / (2 * math.sqrt(2))
        value, ok = check_normalization(MixedPathPair([c, c], [c, c]))
        assert value == pytest.approx(1.0, abs=1e-15) and ok

    def test_zero(self):
        assert check_normalization(MixedPathPair([0, 0], [0, 0])) == (0.0, False)

    def test_negative_component(self):
        value, ok = check_normalization(MixedPathPair([0.9, -0.9 + R2], [R2, 0.0]))
        assert value == pytest.approx(1.0, abs=1e-12) and ok

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            check_normalization(MixedPathPair([0.5], [0.5, 0.1]))


class TestGeneralizedAction:
    def test_generic_value(self):
        assert generalized_action(equal_component_pair(2), S_GENERIC) == pytest.approx(1.25, abs=1e-15)

    def test_zero_matrix(self):
        assert generalized_action(equal_component_pair(3), np.zeros((3, 3))) == 0.0

    def test_two_path_identity(self):
        pair = equal_component_pair(2)
        v = generalized_action(pair, S_GENERIC)
        assert v / (pair.alpha[0] * pair.beta[0]) == pytest.approx(S_GENERIC.sum(), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            generalized_action(equal_component_pair(3), S_GENERIC)

    def test_accepts_action_matrix(self, three_path_ensemble):
        m = build_action_matrix(FREE_UNIT, three_path_ensemble)
        pair = equal_component_pair(3)
        assert generalized_action(pair, m) == generalized_action(pair, m.entries)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.floats(0.01, 2), st.integers(0, 2**31))
    def test_closed_form(self, n, pr, seed):
        S = np.random.default_rng(seed).normal(size=(n, n))
        pair = equal_component_pair(n, pr)
        assert pair.normalized
        assert generalized_action(pair, S) == pytest.approx(pr / 2 * S.sum() / n**2, rel=1e-12, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.floats(-1, 1))
    def test_bilinear(self, seed, c):
        rng = np.random.default_rng(seed)
        S = rng.normal(size=(4, 4))
        a1, a2, b = rng.uniform(-0.5, 0.5, size=(3, 4))
        v = lambda a: generalized_action(MixedPathPair(a, b), S)
        assert v(a1 + a2) == pytest.approx(v(a1) + v(a2), abs=1e-12)
        assert v(c * a1) == pytest.approx(c * v(a1), abs=1e-12)


class TestEqualPair:
    @pytest.mark.parametrize("n,pr,value", [(1, 1.0, R2), (2, 1.0, 1 / (2 * math.sqrt(2))), (4, 0.5, 0.125)])
    def test_components(self, n, pr, value):
        pair = equal_component_pair(n, pr)
        np.testing.assert_allclose(pair.alpha, value, rtol=1e-15)
        np.testing.assert_allclose(pair.beta, value, rtol=1e-15)


class TestParallelism:
    def test_identity(self):
        assert parallelism_residual(equal_component_pair(3), np.eye(3)) < 1e-15

    def test_equal_row_sums(self, rng):
        assert parallelism_residual(equal_component_pair(5), balanced_matrix(5, rng)) < 1e-12

    def test_generic_nonzero(self):
        assert parallelism_residual(equal_component_pair(2), S_GENERIC) > 0.01

    def test_zero_alpha(self):
        with pytest.raises(ValueError):
            parallelism_residual(MixedPathPair([0, 0], [0.5, 0.5]), S_GENERIC)


class TestStationarity:
    def test_balanced(self, rng):
        assert stationarity_check(equal_component_pair(4), balanced_matrix(4, rng), 10_000, 1) <= 1e-9

    def test_identity(self):
        assert stationarity_check(equal_component_pair(3), np.eye(3), 10_000, 2) <= 1e-9

    def test_generic_reports_nonzero(self):
        assert stationarity_check(equal_component_pair(2), S_GENERIC, 1000, 3) > 0.01

    def test_seeded(self):
        a = stationarity_check(equal_component_pair(3), np.arange(9.0).reshape(3, 3), 500, 9)
        b = stationarity_check(equal_component_pair(3), np.arange(9.0).reshape(3, 3), 500, 9)
        assert a == b


class TestSaddle:
    def test_single_path(self):
        rep = saddle_check(equal_component_pair(1), np.array([[3.0]]), 1000, 0)
        assert rep.holds and rep.violations == 0

    def test_balanced_two_by_two(self):
        S = np.array([[1.0, 2.0], [2.0, 1.0]])
        rep = saddle_check(equal_component_pair(2), S, 10_000, 4)
        assert rep.violations == 0 and rep.holds
        assert rep.probes == 10_000 and rep.seed == 4
        assert rep.inverted_probes > 0

    def test_generic_is_data(self):
        rep = saddle_check(equal_component_pair(2), S_GENERIC, 2000, 5)
        d = rep.to_dict()
        assert set(d) >= {"v", "min_over_beta", "max_over_alpha", "violations", "probes", "seed"}
        assert d["v"] == pytest.approx(1.25)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=8), st.data())
def test_probability_identity(alpha, data):
    beta = data.draw(st.lists(st.floats(-1, 1), min_size=len(alpha), max_size=len(alpha)))
    pair = MixedPathPair(alpha, beta)
    assert pair.total_probability == pytest.approx(probability(pair), rel=1e-12, abs=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genham.amplitude import (
    PLANCK_H,
    amplitudes_from_pair,
    amplitudes_from_phases,
    common_basis_2d,
    conjugate_amplitudes,
    expectation,
    probability,
    propagator_sum,
)
from genham.mixedpath import MixedPathPair, equal_component_pair

R2 = 1 / math.sqrt(2)


def unit(angle):
    return np.array([math.cos(angle), math.sin(angle)])


class TestCommonBasis:
    def test_already_on_diagonal(self):
        b = common_basis_2d(unit(math.pi / 4), unit(math.pi / 4))
        np.testing.assert_allclose(b.rotation, np.eye(2), atol=1e-15)
        assert b.theta_pairs[0] == pytest.approx((math.pi / 4, math.pi / 4))

    def test_axes(self):
        b = common_basis_2d([1.0, 0.0], [0.0, 1.0])
        assert b.angle == pytest.approx(0.0, abs=1e-15)
        assert b.theta_pairs[0] == pytest.approx((0.0, math.pi / 2))

    def test_polar_angles(self):
        b = common_basis_2d(unit(0.3), 2.0 * unit(0.9))
        assert b.angle == pytest.approx((math.pi / 2 - 1.2) / 2, abs=1e-15)
        assert b.symmetry_residual(unit(0.3), 2.0 * unit(0.9)) < 1e-12

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            common_basis_2d([0.0, 0.0], [1.0, 0.0])

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.floats(0.1, 5), st.floats(0.1, 5))
    def test_complementary_angles(self, pa, pb, ra, rb):
        b = common_basis_2d(ra * unit(pa), rb * unit(pb))
        for theta, theta_p in b.theta_pairs:
            assert theta + theta_p == pytest.approx(math.pi / 2, abs=1e-12)
        np.testing.assert_allclose(b.rotation.T @ b.rotation, np.eye(2), atol=1e-12)


class TestAmplitudes:
    def test_axis_pair(self):
        amps = amplitudes_from_pair(MixedPathPair([R2, 0.0], [0.0, R2]))
        np.testing.assert_allclose(amps.phis, [R2, 1j * R2], atol=1e-15)
        np.testing.assert_allclose(amps.thetas, [0.0, math.pi / 2], atol=1e-15)

    def test_equal_pair_modulus(self):
        # |phi| = sqrt(2) * 1/(2 sqrt 2) = 1/2
        amps = amplitudes_from_pair(equal_component_pair(2))
        assert amps.uniform
        assert amps.modulus == pytest.approx(0.5, abs=1e-15)
        np.testing.assert_allclose(amps.thetas, math.pi / 4, atol=1e-15)

    def test_non_uniform(self):
        assert not amplitudes_from_pair(MixedPathPair([0.5, 0.1], [0.0, 0.0])).uniform

    def test_phases_from_actions(self):
        s = np.array([0.3, 1.1, 2.0])
        c = 2 * math.pi / PLANCK_H
        amps = amplitudes_from_phases(c * s, 0.2)
        np.testing.assert_allclose(np.angle(amps.phis), c * s, atol=1e-15)
        assert c == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=8))
    def test_round_trip(self, comps):
        a, b = map(np.array, zip(*comps))
        amps = amplitudes_from_pair(MixedPathPair(a, b))
        assert np.array_equal(amps.alpha, a) and np.array_equal(amps.beta, b)


class TestPropagator:
    def test_single(self):
        assert propagator_sum(amplitudes_from_phases([0.0], 0.3)) == pytest.approx(0.3)

    def test_destructive(self):
        amps = amplitudes_from_phases([0.0, math.pi], 0.5)
        assert abs(propagator_sum(amps)) < 1e-15
        assert probability(amps) < 1e-30

    def test_coherent(self):
        assert propagator_sum(amplitudes_from_phases([0.0] * 4, 0.25)) == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            propagator_sum(amplitudes_from_phases([], 1.0))

    def test_normalized_pair(self):
        assert probability(equal_component_pair(5)) == pytest.approx(1.0, abs=1e-15)


class TestExpectation:
    X = np.array([[1.0, 2.0], [3.0, 4.0]])

    def test_generic(self):
        e = expectation(equal_component_pair(2), self.X)
        assert e.value == pytest.approx(2.5, abs=1e-15)
        assert e.diagonal + e.interference == pytest.approx(e.value, abs=1e-15)

    def test_identity(self):
        assert expectation(equal_component_pair(2), np.eye(2)).value == pytest.approx(0.5, abs=1e-15)

    def test_imaginary_cross_vanishes(self):
        e = expectation(equal_component_pair(2), self.X)
        assert e.imaginary_cross == 0.0
        assert e.complex_value.imag == pytest.approx(0.0, abs=1e-15)
        assert e.complex_value.real == pytest.approx(e.value, abs=1e-12)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            expectation(equal_component_pair(3), self.X)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31))
    def test_imaginary_part_matches_cross_term(self, seed):
        rng = np.random.default_rng(seed)
        pair = MixedPathPair(*rng.uniform(-1, 1, size=(2, 2)))
        X = rng.normal(size=(2, 2))
        e = expectation(pair, X)
        assert e.complex_value.imag == pytest.approx(e.imaginary_cross, abs=1e-12)
        assert e.complex_value.real == pytest.approx(e.value, abs=1e-12)


def test_conjugation_reverses_beta():
    pair = MixedPathPair([0.2, -0.4], [0.5, 0.1])
    conj = conjugate_amplitudes(amplitudes_from_pair(pair))
    np.testing.assert_array_equal(conj.alpha, pair.alpha)
    np.testing.assert_array_equal(conj.beta, -pair.beta)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31))
def test_probability_two_routes(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    pair = MixedPathPair(*rng.uniform(-1, 1, size=(2, n)))
    assert abs(pair.total_probability - abs(np.sum(pair.alpha + 1j * pair.beta)) ** 2) <= 1e-12 * max(
        1.0, pair.total_probability
    )

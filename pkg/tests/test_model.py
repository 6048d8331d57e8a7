import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from irsbeam.model import (BeamformerState, FeasibleSet, InvalidInstanceError, SystemInstance,
                           combined_channel, discrete_level, in_feasible_set, project, sinr, wsr)


def scalar_instance(h_d=1.0, G=2.0, h_r=1.0, eta=0.25, sigma2=1.0, P_T=1.0):
    return SystemInstance([[h_d]], [[G]], [[h_r]], [1.0], P_T, sigma2, eta)


def two_user(h1, h2, sigma2=1.0):
    return SystemInstance(np.array([h1, h2], complex), np.zeros((0, 2)), np.zeros((2, 0)),
                          [1.0, 1.0], 10.0, sigma2)


def circ_dist(a, b):
    d = abs(a - b) % (2 * np.pi)
    return min(d, 2 * np.pi - d)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
sets = st.one_of(st.just(FeasibleSet.ideal()), st.just(FeasibleSet.continuous()),
                 st.integers(2, 16).map(FeasibleSet.discrete))


class TestCombinedChannel:
    def test_zero_bs_irs_channel_leaves_direct_path(self, rng):
        inst = random_instance(rng)
        inst = SystemInstance(inst.h_d, np.zeros_like(inst.G), inst.h_r, inst.omega,
                              inst.P_T, inst.sigma2, inst.eta)
        np.testing.assert_array_equal(combined_channel(inst, np.ones(inst.N)), inst.h_d)

    def test_zero_theta(self, rng):
        inst = random_instance(rng)
        np.testing.assert_array_equal(combined_channel(inst, np.zeros(inst.N)), inst.h_d)

    def test_scalar_expansion(self):
        assert combined_channel(scalar_instance(), [1.0])[0, 0] == pytest.approx(2.0)

    def test_matches_matrix_form(self, rng):
        inst = random_instance(rng, M=3, K=2, N=5)
        theta = np.exp(1j * rng.random(5))
        Theta = np.sqrt(inst.eta) * np.diag(theta)
        for k in range(inst.K):
            h = combined_channel(inst, theta)[k]
            expect = inst.h_d[k] + inst.G.T.conj() @ (Theta @ inst.h_r[k])
            np.testing.assert_allclose(h, expect, atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(a=complexes, b=complexes, seed=st.integers(0, 2**31))
    def test_linear_in_theta(self, a, b, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, M=3, K=2, N=4)
        t1, t2 = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        lhs = combined_channel(inst, a * t1 + b * t2) - inst.h_d
        rhs = a * (combined_channel(inst, t1) - inst.h_d) + b * (combined_channel(inst, t2) - inst.h_d)
        scale = 1 + abs(a) + abs(b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * scale * 10)

    def test_no_irs(self, rng):
        inst = random_instance(rng).without_irs()
        assert inst.N == 0
        np.testing.assert_array_equal(combined_channel(inst, []), inst.h_d)

    def test_wrong_theta_length(self, rng):
        with pytest.raises(InvalidInstanceError):
            combined_channel(random_instance(rng, N=3), np.zeros(4))


class TestSinrAndRate:
    def test_single_user_no_interference(self):
        P, s2 = 3.0, 0.5
        inst = SystemInstance([[1.0, 0.0]], np.zeros((0, 2)), np.zeros((1, 0)), [1.0], P, s2)
        W = np.array([[np.sqrt(P)], [0.0]])
        assert sinr(inst, W, [])[0] == pytest.approx(P / s2)

    def test_orthogonal_users(self):
        inst = two_user([1, 0], [0, 1])
        np.testing.assert_allclose(sinr(inst, np.eye(2), []), [1.0, 1.0])
        assert wsr(inst, np.eye(2), []) == pytest.approx(2.0)

    def test_full_interference(self):
        inst = two_user([1, 0], [0, 1])
        W = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert sinr(inst, W, [])[0] == pytest.approx(0.5)

    def test_zero_beamformer(self, rng):
        inst = random_instance(rng)
        W = np.zeros((inst.M, inst.K))
        assert wsr(inst, W, np.ones(inst.N)) == 0.0

    def test_weighted_rate(self):
        inst = SystemInstance([[1.0]], np.zeros((0, 1)), np.zeros((1, 0)), [2.0], 3.0, 1.0)
        assert wsr(inst, [[np.sqrt(3.0)]], []) == pytest.approx(4.0)

    def test_rate_nonnegative_and_zero_only_without_signal(self, rng):
        for _ in range(20):
            inst = random_instance(rng)
            W = rng.standard_normal((inst.M, inst.K)) + 0j
            theta = np.exp(1j * rng.random(inst.N))
            g = sinr(inst, W, theta)
            assert np.all(g >= 0) and np.all(np.isfinite(g))
            assert wsr(inst, W, theta) > 0

    def test_shape_check(self, rng):
        inst = random_instance(rng)
        with pytest.raises(InvalidInstanceError):
            sinr(inst, np.zeros((inst.M + 1, inst.K)), np.zeros(inst.N))


class TestProject:
    def test_inside_ball_unchanged(self):
        z = 0.5 * np.exp(1j * np.pi / 4)
        assert project(z, FeasibleSet.ideal()) == z

    def test_radial_projection(self):
        z = 2 * np.exp(1j * np.pi / 4)
        assert project(z, FeasibleSet.ideal()) == pytest.approx(np.exp(1j * np.pi / 4))

    def test_nearest_discrete_level(self):
        out = project(np.exp(0.45j * np.pi), FeasibleSet.discrete(4))
        assert out == pytest.approx(1j)

    def test_continuous(self):
        assert project(3 - 3j, FeasibleSet.continuous()) == pytest.approx(np.exp(-1j * np.pi / 4))

    def test_zero_goes_to_phase_zero(self):
        assert project(0j, FeasibleSet.continuous()) == 1
        assert project(0j, FeasibleSet.discrete(3)) == 1
        assert project(0j, FeasibleSet.ideal()) == 0

    def test_midpoint_takes_smaller_phase(self):
        # pi/4 is equidistant from 0 and pi/2
        assert discrete_level(np.exp(1j * np.pi / 4), 4)[0] == 0
        assert discrete_level(np.exp(3j * np.pi / 4), 4)[0] == 1

    def test_wraps_around(self):
        assert discrete_level(np.exp(-0.01j), 4)[0] == 0
        assert discrete_level(np.exp(1j * (2 * np.pi - 0.3)), 8)[0] == 0
        # the midpoint between the last level and 2*pi goes to level 0
        assert discrete_level(np.exp(1j * 7 * np.pi / 4), 4)[0] == 0

    def test_grid_values_are_bit_exact(self, rng):
        fs = FeasibleSet.discrete(8)
        out = project(rng.standard_normal(100) + 1j * rng.standard_normal(100), fs)
        assert set(out.tolist()) <= set(fs.grid().tolist())
        assert in_feasible_set(out, fs)

    def test_vectorized_matches_scalar(self, rng):
        z = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        for fs in (FeasibleSet.ideal(), FeasibleSet.continuous(), FeasibleSet.discrete(5)):
            np.testing.assert_array_equal(project(z, fs), [project(x, fs) for x in z])

    @settings(max_examples=200, deadline=None)
    @given(z=complexes, fs=sets)
    def test_idempotent(self, z, fs):
        p = project(z, fs)
        assert project(p, fs) == pytest.approx(p, abs=1e-15)
        assert in_feasible_set(p, fs)

    @settings(max_examples=300, deadline=None)
    @given(z=complexes.filter(lambda z: abs(z) > 1e-9), tau=st.integers(2, 16))
    def test_discrete_is_circular_argmin(self, z, tau):
        out = project(z, FeasibleSet.discrete(tau))
        phases = 2 * np.pi * np.arange(tau) / tau
        dists = [circ_dist(np.angle(z), p) for p in phases]
        assert circ_dist(np.angle(out), np.angle(z)) <= min(dists) + 1e-12


class TestFeasibleSet:
    @pytest.mark.parametrize("text,expect", [
        ("ideal", FeasibleSet.ideal()), ("continuous", FeasibleSet.continuous()),
        ("discrete:4", FeasibleSet.discrete(4)), ("F2", FeasibleSet.continuous()),
    ])
    def test_parse(self, text, expect):
        assert FeasibleSet.parse(text) == expect
        assert FeasibleSet.parse(expect.label) == expect

    @pytest.mark.parametrize("text", ["discrete:1", "discrete:x", "circle", "discrete"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            FeasibleSet.parse(text)

    def test_membership_tolerances(self):
        assert in_feasible_set([1 + 5e-10], FeasibleSet.ideal())
        assert not in_feasible_set([1 + 1e-8], FeasibleSet.ideal())
        assert in_feasible_set([1 - 5e-10], FeasibleSet.continuous())
        assert not in_feasible_set([0.5], FeasibleSet.continuous())
        assert not in_feasible_set([np.exp(0.1j)], FeasibleSet.discrete(4))


class TestInstanceValidation:
    def base(self):
        return dict(h_d=np.ones((2, 3)), G=np.ones((4, 3)), h_r=np.ones((2, 4)),
                    omega=[1.0, 1.0], P_T=1.0, sigma2=1.0, eta=0.5)

    @pytest.mark.parametrize("key,value", [
        ("G", np.ones((4, 2))), ("h_r", np.ones((3, 4))), ("omega", [1.0]),
        ("omega", [1.0, 0.0]), ("P_T", 0.0), ("sigma2", -1.0), ("eta", 1.5), ("eta", 0.0),
        ("h_d", np.ones(3)),
    ])
    def test_rejects(self, key, value):
        kw = self.base()
        kw[key] = value
        with pytest.raises(InvalidInstanceError):
            SystemInstance(**kw)

    def test_arrays_are_read_only(self):
        inst = SystemInstance(**self.base())
        with pytest.raises(ValueError):
            inst.h_d[0, 0] = 2

    def test_state_check(self):
        inst = SystemInstance(**self.base())
        ok = BeamformerState(np.ones((3, 2)) / np.sqrt(6), np.ones(4, complex))
        ok.check(inst, FeasibleSet.continuous())
        with pytest.raises(InvalidInstanceError):
            BeamformerState(np.ones((3, 2)), np.ones(4, complex)).check(inst)
        off_grid = BeamformerState(ok.W, np.full(4, np.exp(0.3j)))
        with pytest.raises(InvalidInstanceError):
            off_grid.check(inst, FeasibleSet.discrete(4))

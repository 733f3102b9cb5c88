import math

import numpy as np
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm

from dualerg.averaging import (SchemeSpec, abel_avg, abel_avg_measure, abel_identity_check, abel_identity_sides,
                               abel_matrix, abel_terms, cesaro_avg, cesaro_avg_measure, cesaro_matrix,
                               fixed_point_invariance, orbit_hull_check, scheme_report, semigroup_matrix,
                               time_avg, time_identity_check, time_identity_sides, time_matrix, verify_as1,
                               verify_as3)
from dualerg.core import BoundedFunction, SignedMeasure, StateSpace
from dualerg.kernels import KernelOperator, power
from dualerg.models import IRREDUCIBLE3, build_summing_l1, build_z_infinity

from conftest import random_operator

Q2 = np.array([[-1.0, 1.0], [1.0, -1.0]])


@pytest.fixture
def two():
    return StateSpace.discrete(["0", "1"])


@pytest.fixture
def swap(two):
    return KernelOperator(two, [[0, 1], [1, 0]])


def _time_closed_form(t):
    g = (1 - math.exp(-2 * t)) / (2 * t)
    return np.array([0.5 * (1 + g), 0.5 * (1 - g)])


class TestCesaro:
    def test_examples(self, two, swap):
        f = BoundedFunction(two, [1, 0])
        for n in (1, 5, 100):
            assert np.array_equal(cesaro_avg(KernelOperator.identity(two), n, f).values, f.values)
        assert np.array_equal(cesaro_avg(swap, 2, f).values, [0.5, 0.5])
        m = build_summing_l1(8)
        for n in (1, 2, 4, 7, 50):
            mu = cesaro_avg_measure(m.S, n, SignedMeasure.atom("2"))
            assert mu == SignedMeasure({"1": (n - 1) / n, "2": 1 / n})

    def test_matrix_path_agrees_with_iteration(self, rng):
        S = random_operator(rng, 6)
        f = BoundedFunction(S.space, rng.normal(size=6))
        for n in (1, 3, 17, 100):
            assert np.allclose(cesaro_matrix(S, n) @ f.values, cesaro_avg(S, n, f).values, atol=1e-13)

    def test_recursion(self, rng):
        S = random_operator(rng, 5)
        f = BoundedFunction(S.space, rng.normal(size=5))
        for n in range(1, 40):
            lhs = (n + 1) * cesaro_avg(S, n + 1, f).values
            rhs = n * cesaro_avg(S, n, f).values + power(S, n).matrix @ f.values
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (n + 1)

    def test_markov_preserves_one(self, rng):
        S = random_operator(rng, 7)
        one = BoundedFunction.constant(S.space)
        assert np.allclose(cesaro_avg(S, 33, one).values, 1.0, atol=1e-14)

    def test_rejects_bad_index(self, swap, two):
        with pytest.raises(ValueError):
            cesaro_avg(swap, 0, BoundedFunction(two, [1, 0]))


class TestAbel:
    def test_examples(self, two, swap):
        f = BoundedFunction(two, [1, 0])
        for r in (0.0, 0.5, 0.99):
            assert np.allclose(abel_avg(KernelOperator.identity(two), r, f).values, f.values, atol=1e-11)
        assert np.allclose(abel_avg(swap, 0.5, f).values, [2 / 3, 1 / 3], atol=1e-12)

    def test_near_one_approaches_stationary(self):
        sp = StateSpace.discrete(["0", "1", "2"])
        S = KernelOperator(sp, IRREDUCIBLE3)
        pi = np.array([9, 12, 7]) / 28
        for v in np.eye(3):
            got = abel_avg(S, 0.9999, BoundedFunction(sp, v)).values
            assert np.max(np.abs(got - pi @ v)) <= 1e-4

    def test_series_matches_solve(self, rng):
        S = random_operator(rng, 5)
        for r in (0.3, 0.9, 0.99):
            assert np.allclose(abel_matrix(S, r), abel_matrix(S, r, method="solve"), atol=1e-11)

    def test_terms_and_errors(self, swap, two):
        assert abel_terms(0.5) == math.ceil(math.log(1e-12) / math.log(0.5))
        with pytest.raises(ValueError):
            abel_avg(swap, 1.0, BoundedFunction(two, [1, 0]))
        with pytest.raises(ValueError):
            abel_avg(swap, -0.1, BoundedFunction(two, [1, 0]))

    def test_identity_examples(self, two, swap, rng):
        f = BoundedFunction(two, [1, 0])
        lhs, rhs = abel_identity_sides(swap, 0.5, f)
        assert lhs == pytest.approx(1 / 3, abs=1e-12) and rhs == pytest.approx(1 / 3, abs=1e-12)
        assert abel_identity_sides(swap, 0.5, BoundedFunction.constant(two)) == pytest.approx((0.0, 0.0), abs=1e-12)
        S = random_operator(rng, 4)
        assert abel_identity_check(S, 0.9, BoundedFunction(S.space, rng.normal(size=4))) <= 1e-10

    def test_adjoint_variant(self, rng):
        S = random_operator(rng, 4)
        mu = SignedMeasure.from_vector(S.space.states, rng.normal(size=4))
        got = abel_avg_measure(S, 0.7, mu).vector(S.space.states)
        assert np.allclose(got, mu.vector(S.space.states) @ abel_matrix(S, 0.7), atol=1e-12)


class TestTime:
    def test_zero_rate(self, two):
        f = BoundedFunction(two, [1, 0])
        for t in (0.1, 3.0):
            assert np.allclose(time_avg(np.zeros((2, 2)), t, f).values, f.values, atol=1e-14)

    @pytest.mark.parametrize("method", ["expm", "quadrature"])
    def test_closed_form(self, two, method):
        f = BoundedFunction(two, [1, 0])
        for t in (0.5, 2.0, 7.0):
            got = time_avg(Q2, t, f, method=method).values
            assert np.max(np.abs(got - _time_closed_form(t))) <= 1e-9

    def test_long_time(self, two):
        got = time_avg(Q2, 1e6, BoundedFunction(two, [1, 0])).values
        assert np.max(np.abs(got - 0.5)) <= 1e-6

    def test_quadrature_error_estimate_is_honest(self):
        from dualerg.averaging import time_average_quadrature
        v = np.array([1.0, 0.0])
        for t, panels in ((3.0, 16), (3.0, 64)):
            val, err = time_average_quadrature(Q2, t, v, panels)
            true = np.max(np.abs(val - _time_closed_form(t)))
            assert true <= max(err * 10, 1e-13)

    def test_rejects_non_conservative(self, two):
        with pytest.raises(ValueError):
            time_avg(np.array([[-1.0, 0.5], [1.0, -1.0]]), 1.0, BoundedFunction(two, [1, 0]))

    def test_identity_corrected_sign(self, two, rng):
        f = BoundedFunction(two, [1, 0])
        assert time_identity_check(Q2, 2.0, 1.0, f) <= 1e-8
        assert time_identity_check(np.zeros((2, 2)), 2.0, 1.0, f) == 0.0
        # independent oracle: integrate both sides numerically
        t, s = 2.0, 1.0
        At_oracle = quad_vec(lambda u: expm(u * Q2), 0, t, epsabs=1e-14)[0] / t
        As_oracle = quad_vec(lambda u: expm(u * Q2), 0, s, epsabs=1e-14)[0] / s
        lhs = At_oracle @ expm(s * Q2) @ f.values - At_oracle @ f.values
        rhs = (s / t) * (expm(t * Q2) - np.eye(2)) @ As_oracle @ f.values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12
        got_l, got_r = time_identity_sides(Q2, t, s, f)
        assert np.allclose(got_l, lhs, atol=1e-12) and np.allclose(got_r, rhs, atol=1e-12)

    def test_literal_sign_differs(self, two):
        # (s/t)(I - S(t)) A_s is the negative of the true right-hand side; the
        # norms agree, the vectors do not
        f = BoundedFunction(two, [1, 0])
        lhs, rhs = time_identity_sides(Q2, 2.0, 1.0, f)
        literal = -rhs
        assert np.max(np.abs(lhs - literal)) > 0.1
        assert np.max(np.abs(lhs)) == pytest.approx(np.max(np.abs(literal)), abs=1e-12)

    def test_identity_small_s_linear(self, two):
        f = BoundedFunction(two, [1, 0])
        vals = [np.max(np.abs(time_identity_sides(Q2, 2.0, s, f)[0])) for s in (1e-2, 1e-3, 1e-4)]
        assert vals[0] / vals[1] == pytest.approx(10, rel=0.05)
        assert vals[1] / vals[2] == pytest.approx(10, rel=0.05)

    def test_time_matrix_matches_quadrature_oracle(self):
        Q = np.array([[-3.0, 1.0, 2.0], [0.5, -0.5, 0.0], [1.0, 1.0, -2.0]])
        t = 1.7
        oracle = quad_vec(lambda u: expm(u * Q), 0, t, epsabs=1e-14)[0] / t
        assert np.allclose(time_matrix(Q, t), oracle, atol=1e-12)


class TestAxioms:
    def test_as1_markov(self, rng):
        S = random_operator(rng, 5)
        r = verify_as1(SchemeSpec.cesaro(n_max=256), S)
        assert r["passed"] and r["markov_unit_norm"]

    def test_as1_summing_adjoint_norms(self):
        m = build_summing_l1(16)
        atoms = [SignedMeasure.atom(s) for s in m.space.states]
        r = verify_as1(SchemeSpec.cesaro(n_max=64), m.S, probe_measures=atoms)
        assert r["passed"] and max(r["probe_lower_bounds"]) <= 1.0 + 1e-12

    def test_as1_fails_for_doubling(self, two):
        S = KernelOperator(two, 2 * np.eye(2))
        r = verify_as1(SchemeSpec.abel([0.0, 0.3, 0.45, 0.6]), S, tol=1e-12)
        assert not r["passed"]
        r = verify_as1(SchemeSpec.abel([0.0, 0.3, 0.45, 0.6], M=5.0), S)
        assert not r["passed"]

    def test_as3_swap_example(self, two, swap):
        r = verify_as3(SchemeSpec.cesaro([1, 2, 3]), swap, BoundedFunction(two, [1, 0]))
        assert r["function_decay"][2] == pytest.approx(1 / 3, abs=1e-15)
        assert r["passed"]

    def test_as3_fixed_function_has_no_decay(self, rng):
        S = random_operator(rng, 4)
        r = verify_as3(SchemeSpec.cesaro(n_max=128), S, BoundedFunction.constant(S.space))
        assert max(r["function_decay"]) <= 1e-15

    def test_as3_forward_shift_bound(self):
        m = build_z_infinity(16)
        from dualerg.ergodic import bump
        f = bump(m.space, "0", 0.8)
        r = verify_as3(SchemeSpec.cesaro(n_max=1024), m.S, f, SignedMeasure.atom("-3"))
        assert r["passed"]
        assert all(d <= b + 1e-15 for d, b in zip(r["function_decay"], r["markov_bound"]))

    def test_scheme_report(self, rng):
        S = random_operator(rng, 3)
        f = BoundedFunction(S.space, rng.normal(size=3))
        for spec in (SchemeSpec.cesaro(n_max=64), SchemeSpec.abel(depth=8)):
            rep = scheme_report(spec, S, f, SignedMeasure.atom("s0"))
            assert rep.passed == {"as1": True, "as3": True}
            assert all(v >= 0 for v in rep.as3_function_decay + rep.as3_measure_decay + rep.identity_residuals)
        sp = StateSpace.discrete(["0", "1"])
        rep = scheme_report(SchemeSpec.time(Q2, t_max=64), None, BoundedFunction(sp, [1, 0]))
        assert rep.passed == {"as1": True, "as3": True}


class TestInvariants:
    def test_fixed_points_invariant(self, rng):
        S = random_operator(rng, 4)
        one = BoundedFunction.constant(S.space)
        for spec in (SchemeSpec.cesaro(n_max=512), SchemeSpec.abel(depth=10)):
            assert fixed_point_invariance(spec, S, one) <= 1e-11
        sp = StateSpace.discrete(["0", "1"])
        assert fixed_point_invariance(SchemeSpec.time(Q2, t_max=64), None, BoundedFunction.constant(sp)) <= 1e-12

    def test_orbit_hull(self, rng):
        S = random_operator(rng, 5)
        f = BoundedFunction(S.space, rng.normal(size=5))
        assert orbit_hull_check(S, f, cesaro_avg(S, 20, f), 20)["passed"]
        bad = BoundedFunction(S.space, f.values + 10)
        assert not orbit_hull_check(S, f, bad, 20)["passed"]

    def test_abel_cesaro_consistency(self):
        sp = StateSpace.discrete(["0", "1", "2"])
        S = KernelOperator(sp, IRREDUCIBLE3)
        f = BoundedFunction(sp, [1.0, 0.0, -1.0])
        gaps = [np.max(np.abs(abel_avg(S, 1 - 1 / n, f).values - cesaro_avg(S, n, f).values))
                for n in (10, 100, 1000)]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            SchemeSpec.cesaro([1, 1])
        with pytest.raises(ValueError):
            SchemeSpec.abel([0.5, 1.0])
        with pytest.raises(ValueError):
            SchemeSpec("time", (1.0,))
        with pytest.raises(ValueError):
            SchemeSpec.cesaro([2], M=0)

    def test_semigroup_law(self):
        assert np.allclose(semigroup_matrix(Q2, 1.0) @ semigroup_matrix(Q2, 2.0), semigroup_matrix(Q2, 3.0))

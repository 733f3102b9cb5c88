"""Property-based checks of the algebraic invariants."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualerg.averaging import SchemeSpec, cesaro_avg, fixed_point_invariance
from dualerg.core import (BoundedFunction, SignedMeasure, StateSpace, VanishingWeight, bl_distance, pairing,
                          strict_seminorm, sup_norm, tightness_profile, tv_norm)
from dualerg.kernels import KernelOperator, adjoint_apply, compose, forward_apply, operator_norms, power

from conftest import random_stochastic

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def _space(n):
    return StateSpace.discrete([str(i) for i in range(n)])


@st.composite
def vectors(draw, n):
    return draw(arrays(np.float64, n, elements=finite))


@st.composite
def stochastic(draw, n_min=2, n_max=7):
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return KernelOperator(_space(n), random_stochastic(np.random.default_rng(seed), n, sparsity=0.5))


@st.composite
def geometric_space(draw):
    n = draw(st.integers(2, 6))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    pts = np.random.default_rng(seed).uniform(0, 3, size=(n, 2))
    return StateSpace.from_coordinates([str(i) for i in range(n)], pts)


@SETTINGS
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(*(vectors(n),) * 4, finite, finite)))
def test_pairing_is_bilinear(data):
    f, g, a, b, s, t = data
    sp = _space(len(f))
    F, G = BoundedFunction(sp, f), BoundedFunction(sp, g)
    mu, nu = (SignedMeasure.from_vector(sp.states, v) for v in (a, b))
    lhs = pairing(BoundedFunction(sp, s * f + t * g), mu)
    assert abs(lhs - (s * pairing(F, mu) + t * pairing(G, mu))) <= 1e-9 * (1 + abs(lhs))
    rhs = pairing(F, SignedMeasure.from_vector(sp.states, s * a + t * b))
    assert abs(rhs - (s * pairing(F, mu) + t * pairing(F, nu))) <= 1e-9 * (1 + abs(rhs))


@SETTINGS
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(vectors(n), vectors(n))))
def test_norming_identity(data):
    f, a = data
    sp = _space(len(f))
    F = BoundedFunction(sp, f)
    mu = SignedMeasure.from_vector(sp.states, a)
    # sup over atoms realises the sup norm; sign(mu) realises the variation
    assert max((abs(pairing(F, SignedMeasure.atom(x))) for x in sp.states), default=0.0) == sup_norm(F)
    assert abs(pairing(BoundedFunction(sp, np.sign(a)), mu) - tv_norm(mu)) <= 1e-12 * (1 + tv_norm(mu))


@SETTINGS
@given(geometric_space(), st.integers(0, 2 ** 32 - 1))
def test_bl_metric_axioms(space, seed):
    rng = np.random.default_rng(seed)
    n = len(space)
    ms = [SignedMeasure.from_vector(space.states, rng.random(n) * (rng.random(n) < 0.7)) for _ in range(3)]
    a, b, c = ms
    dab, dbc, dac = bl_distance(a, b, space), bl_distance(b, c, space), bl_distance(a, c, space)
    assert bl_distance(a, a, space) <= 1e-12
    assert abs(dab - bl_distance(b, a, space)) <= 1e-9
    assert dac <= dab + dbc + 1e-9
    assert dab <= tv_norm(a - b) + 1e-9


@SETTINGS
@given(stochastic(), st.integers(0, 12), st.integers(0, 12))
def test_power_semigroup_law(S, m, n):
    assert np.max(np.abs(power(S, m + n).matrix - compose(power(S, m), power(S, n)).matrix)) <= 1e-12


@SETTINGS
@given(stochastic(), stochastic())
def test_composition_is_associative(S, T):
    if S.n != T.n:
        T = KernelOperator(S.space, random_stochastic(np.random.default_rng(S.n), S.n))
    else:
        T = KernelOperator(S.space, T.matrix)
    a = compose(compose(S, T), S).matrix
    b = compose(S, compose(T, S)).matrix
    assert np.max(np.abs(a - b)) <= 1e-13


@SETTINGS
@given(stochastic(), st.integers(0, 2 ** 32 - 1))
def test_adjoint_duality(S, seed):
    rng = np.random.default_rng(seed)
    f = BoundedFunction(S.space, rng.normal(size=S.n))
    mu = SignedMeasure.from_vector(S.space.states, rng.normal(size=S.n))
    lhs = pairing(forward_apply(S, f), mu)
    rhs = pairing(f, adjoint_apply(S, mu))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))
    fwd, adj = operator_norms(S)
    assert abs(fwd - adj) <= 1e-12 and abs(fwd - 1.0) <= 1e-12


@SETTINGS
@given(stochastic(), st.integers(1, 300))
def test_markov_averages_are_contractions(S, n):
    f = BoundedFunction(S.space, np.linspace(-1, 1, S.n))
    assert sup_norm(cesaro_avg(S, n, f)) <= 1.0 + 1e-12


@SETTINGS
@given(stochastic(n_min=2, n_max=5))
def test_fixed_points_survive_averaging(S):
    one = BoundedFunction.constant(S.space, 3.5)
    assert fixed_point_invariance(SchemeSpec.cesaro(n_max=64), S, one) <= 1e-12
    assert fixed_point_invariance(SchemeSpec.abel(depth=6), S, one) <= 1e-11


@SETTINGS
@given(st.integers(3, 12), st.integers(0, 2 ** 32 - 1))
def test_tightness_profile_is_monotone(n, seed):
    rng = np.random.default_rng(seed)
    states = [str(i) for i in range(n)]
    sp = StateSpace.discrete(states, exhaustion=[states[:m] for m in range(1, n + 1)])
    ms = [SignedMeasure.from_vector(states, rng.normal(size=n)) for _ in range(4)]
    prof = tightness_profile(ms, sp)
    assert np.all(np.diff(prof) <= 1e-15)
    assert prof[-1] == 0.0


@SETTINGS
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(vectors(n), arrays(np.float64, n, elements=st.floats(0, 1)))))
def test_strict_seminorm_bounded_by_sup(data):
    f, w = data
    sp = _space(len(f))
    F = BoundedFunction(sp, f)
    assert strict_seminorm(F, VanishingWeight(sp, w)) <= sup_norm(F) * max(float(w.max()), 0.0) + 1e-15

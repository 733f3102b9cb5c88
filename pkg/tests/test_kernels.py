import json

import numpy as np
import pytest

from dualerg.core import BoundedFunction, ResolutionError, SignedMeasure, StateSpace, TailRule, dumps
from dualerg.kernels import (KernelOperator, adjoint_apply, compose, duality_consistency, forward_apply,
                             is_markovian, operator_norms, power)
from dualerg.models import build_cycles_line, build_shift_Z, cycle_indicator

from conftest import random_operator


@pytest.fixture
def two():
    return StateSpace.discrete(["1", "2"])


@pytest.fixture
def swap(two):
    return KernelOperator(two, [[0, 1], [1, 0]])


@pytest.fixture
def lazy(two):
    return KernelOperator(two, [[0.5, 0.5], [0.25, 0.75]])


def test_forward_examples(two, swap, lazy):
    f = BoundedFunction(two, [1, 0])
    assert np.array_equal(forward_apply(KernelOperator.identity(two), f).values, f.values)
    assert np.array_equal(forward_apply(swap, f).values, [0, 1])
    assert np.array_equal(forward_apply(lazy, f).values, [0.5, 0.25])


def test_adjoint_examples(two, swap, lazy):
    mu = SignedMeasure({"1": 0.3, "2": -2})
    assert adjoint_apply(KernelOperator.identity(two), mu) == mu
    assert adjoint_apply(swap, SignedMeasure.atom("1")) == SignedMeasure.atom("2")
    assert adjoint_apply(lazy, SignedMeasure.atom("1")) == SignedMeasure({"1": 0.5, "2": 0.5})


def test_power_examples(swap, lazy, two):
    assert np.array_equal(power(lazy, 0).matrix, np.eye(2))
    assert np.array_equal(power(swap, 2).matrix, np.eye(2))
    assert np.allclose(power(lazy, 2).matrix, [[0.375, 0.625], [0.3125, 0.6875]], atol=1e-15)


def test_markovian_examples(two):
    assert is_markovian(KernelOperator(two, [[0.5, 0.5], [0.25, 0.75]]))
    assert not is_markovian(KernelOperator(two, [[1.5, -0.5], [0, 1]]))
    assert not is_markovian(KernelOperator(two, [[0.999, 0], [0, 1]]))


def test_duality_examples(rng):
    S = random_operator(rng, 5)
    f = BoundedFunction(S.space, rng.normal(size=5))
    mu = SignedMeasure.from_vector(S.space.states, rng.normal(size=5))
    assert duality_consistency(S, f, mu)["passed"]
    m = build_cycles_line(4)
    r = duality_consistency(m.S, cycle_indicator(m.space, 2), SignedMeasure.atom("K2:0"))
    assert r["lhs"] == r["rhs"] == 1.0


def test_ghost_rows_and_leakage():
    m = build_shift_Z(3)
    S = m.S
    assert S.ghosts == ("4",)
    assert S.leakage() == {"3": 1.0}
    assert is_markovian(S)
    f = BoundedFunction(m.space, np.arange(7.0))
    with pytest.raises(ResolutionError, match="'4'"):
        forward_apply(S, f)
    g = BoundedFunction(m.space, np.arange(7.0), TailRule.constant(9.0))
    assert forward_apply(S, g).values[-1] == 9.0
    mu = adjoint_apply(S, SignedMeasure.atom("3"))
    assert mu == SignedMeasure.atom("4")
    # ghost mass stays frozen under further steps
    assert adjoint_apply(S, mu) == mu


def test_point_tail_becomes_constant():
    m = build_shift_Z(2)
    f = BoundedFunction(m.space, [0, 1, 2, 3, 4], TailRule.at_point("0"))
    g = forward_apply(m.S, f)
    assert g.tail.kind == "constant" and g.tail.value == 2.0


def test_compose_aligns_ghosts():
    sp = StateSpace.discrete(["a", "b"])
    S = KernelOperator.from_rows(sp, {"a": {"g1": 1.0}, "b": {"a": 1.0}})
    T = KernelOperator.from_rows(sp, {"a": {"b": 1.0}, "b": {"g2": 1.0}})
    ST = compose(S, T)
    assert set(ST.ghosts) == {"g1", "g2"}
    assert ST.kernel.rows["a"] == SignedMeasure.atom("g1")
    assert ST.kernel.rows["b"] == SignedMeasure.atom("b")


def test_operator_norms_match_bound(rng):
    sp = StateSpace.discrete([str(i) for i in range(5)])
    S = KernelOperator(sp, rng.normal(size=(5, 5)))
    fwd, adj = operator_norms(S)
    assert fwd == pytest.approx(S.bound, abs=1e-12)
    assert adj == pytest.approx(S.bound, abs=1e-12)


def test_kernel_json_roundtrip_bit_exact(rng):
    S = random_operator(rng, 6)
    text = dumps(S.to_dict())
    back = KernelOperator.from_dict(S.space, json.loads(text))
    assert np.array_equal(back.matrix, S.matrix)


def test_validation(two):
    with pytest.raises(ValueError):
        KernelOperator(two, np.eye(3))
    with pytest.raises(ValueError):
        KernelOperator(two, [[np.nan, 0], [0, 1]])
    with pytest.raises(ValueError, match="unknown"):
        KernelOperator.from_rows(two, {"z": {"1": 1.0}})


def test_power_cache_thread_safe(rng):
    from concurrent.futures import ThreadPoolExecutor
    S = random_operator(rng, 8)
    ref = np.linalg.matrix_power(S.matrix, 777)
    with ThreadPoolExecutor(8) as ex:
        outs = list(ex.map(lambda _: power(S, 777).matrix, range(16)))
    for o in outs:
        assert np.allclose(o, ref, atol=1e-13)

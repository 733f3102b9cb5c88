"""Ready-built state spaces, kernels and average schemes.

Counterexamples:

* ``summing_l1``: the summing operator on truncated ``l1`` whose adjoint
  averages converge pointwise to a constant outside ``c0``;
* ``z_infinity``: shifts on ``Z u {inf}`` with a forward and a backward
  Cesaro scheme, only the first having the e-property;
* ``cycles_line``: rotations on finite cycles next to a half-line shift,
  where the fixed spaces separate but ``delta_0`` does not decompose.

Positive controls: ``irreducible3``, ``swap2``, ``shift_Z`` and ``ctmc2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .averaging import SchemeSpec, check_rate_matrix
from .core import BoundedFunction, SignedMeasure, StateSpace
from .kernels import KernelOperator

INF = "inf"
IRREDUCIBLE3 = ((0.5, 0.3, 0.2), (0.2, 0.6, 0.2), (0.3, 0.3, 0.4))
CTMC2 = ((-1.0, 1.0), (2.0, -2.0))


@dataclass(frozen=True, eq=False)
class SchemeBinding:
    """A named scheme: which operator it averages and how."""

    operator: str
    kind: str


@dataclass(eq=False)
class Model:
    """State space, operators, named schemes and the expected-verdict fixture.

    Parameters
    ----------
    name : str
        Registry name.
    params : dict
        Construction parameters (truncation sizes and the like).
    space : StateSpace
    operators : dict
        Name to :class:`KernelOperator`; ``"S"`` is the default.
    schemes : dict
        Name to :class:`SchemeBinding`.
    rate : ndarray, optional
        Rate matrix for continuous-time models.
    fixture : dict
        Expected verdicts loaded from the shipped JSON file, if any.
    probes : dict
        Named functions worth probing beyond the default dictionary.
    """

    name: str
    params: dict
    space: StateSpace
    operators: dict
    schemes: dict
    rate: np.ndarray | None = None
    fixture: dict = field(default_factory=dict)
    probes: dict = field(default_factory=dict)

    @property
    def S(self) -> KernelOperator:
        return self.operators["S"]

    def scheme(self, name="cesaro", n_max=1024, r_grid=None, t_grid=None, grid=None):
        """``(operator, SchemeSpec)`` for a named scheme with optional grid overrides."""
        if name in self.schemes:
            b = self.schemes[name]
        elif name in ("cesaro", "abel", "time"):
            b = SchemeBinding("S", name)
        else:
            raise KeyError(f"model {self.name!r} has no scheme {name!r}; "
                           f"choose from {sorted(set(self.schemes) | {'cesaro', 'abel'})}")
        S = self.operators[b.operator]
        if b.kind == "cesaro":
            spec = SchemeSpec.cesaro(grid, n_max=n_max)
        elif b.kind == "abel":
            spec = SchemeSpec.abel(grid if grid is not None else r_grid)
        else:
            if self.rate is None:
                raise KeyError(f"model {self.name!r} has no rate matrix for a time scheme")
            g = grid if grid is not None else t_grid
            spec = SchemeSpec.time(self.rate, g, t_max=n_max)
        return S, spec

    def to_dict(self):
        return {"name": self.name, "params": self.params, "space": self.space.to_dict(),
                "operators": {k: v.to_dict() for k, v in self.operators.items()},
                "schemes": {k: {"operator": b.operator, "kind": b.kind} for k, b in self.schemes.items()},
                "rate": None if self.rate is None else self.rate.tolist()}


def load_fixture(key):
    """Expected-verdict JSON shipped with the package, or ``{}``."""
    try:
        text = resources.files("dualerg").joinpath("fixtures").joinpath(f"{key}.json").read_text()
    except FileNotFoundError:
        return {}
    return json.loads(text)


# --------------------------------------------------------------------------
# summing operator on l1
# --------------------------------------------------------------------------


def build_summing_l1(N=64) -> Model:
    """Coordinates ``1..N`` with kernel rows ``1 -> 1`` and ``i -> i-1``.

    Measures play the role of ``l1``: the adjoint action sends ``e_1`` to
    ``e_1`` and ``e_i`` to ``e_{i-1}``, i.e. ``(x1, x2, ...) -> (x1+x2, x3, ...)``.
    Functions play the role of ``c0`` / ``l_inf`` with
    ``(Sy) = (y1, y1, y2, ...)``.  All distinct coordinates are at distance
    one; level ``m`` of the exhaustion is ``{1..m}``.
    """
    N = int(N)
    if N < 3:
        raise ValueError("N must be at least 3")
    states = [str(i) for i in range(1, N + 1)]
    space = StateSpace.discrete(states, exhaustion=[states[:m] for m in range(1, N + 1)],
                                truncation_level=N, finite=False)
    S = KernelOperator.from_map(space, lambda s: "1" if s == "1" else str(int(s) - 1))
    return Model("summing_l1", {"N": N}, space, {"S": S}, {"cesaro": SchemeBinding("S", "cesaro")},
                 fixture=load_fixture("summing_l1"))


# --------------------------------------------------------------------------
# shifts on Z u {inf}
# --------------------------------------------------------------------------


def z_coordinate(k):
    """Embedding into the reals: ``k < 0 -> k``, ``k >= 0 -> 1 - 1/(k+1)``, ``inf -> 1``."""
    if k == INF:
        return 1.0
    k = int(k)
    return float(k) if k < 0 else 1.0 - 1.0 / (k + 1)


def build_z_infinity(N=64) -> Model:
    """States ``-N..N`` and ``inf`` with the forward and backward shift.

    The forward shift ``(Sf)(k) = f(k+1)`` sends ``N`` to ``inf``; the
    backward shift ``(Tf)(k) = f(k-1)`` sends ``-N`` to the ghost ``-N-1``.
    ``inf`` is fixed by both.  Level ``m`` of the exhaustion is
    ``{k >= -m} u {inf}``, which is compact because the nonnegative
    integers accumulate at ``inf``.
    """
    N = int(N)
    if N < 2:
        raise ValueError("N must be at least 2")
    ks = list(range(-N, N + 1))
    states = [str(k) for k in ks] + [INF]
    coords = [z_coordinate(k) for k in ks] + [1.0]
    levels = [[str(k) for k in ks if k >= -m] + [INF] for m in range(N + 1)]
    space = StateSpace.from_coordinates(states, coords, exhaustion=levels, infinity_points=[INF],
                                        truncation_level=N, finite=False)

    def fwd(s):
        if s == INF or int(s) == N:
            return INF
        return str(int(s) + 1)

    def bwd(s):
        return INF if s == INF else str(int(s) - 1)

    S = KernelOperator.from_map(space, fwd)
    T = KernelOperator.from_map(space, bwd)
    return Model("z_infinity", {"N": N}, space, {"S": S, "backward_shift": T},
                 {"forward": SchemeBinding("S", "cesaro"), "backward": SchemeBinding("backward_shift", "cesaro")},
                 fixture=load_fixture("z_infinity"), probes={"nonnegative": nonnegative_indicator(space)})


def nonnegative_indicator(space: StateSpace) -> BoundedFunction:
    """Indicator of ``{k >= 0} u {inf}``; zero on ghosts below the truncation."""
    sel = [s for s in space.states if s == INF or int(s) >= 0]
    return BoundedFunction.indicator(space, sel)


# --------------------------------------------------------------------------
# cycles next to a half-line
# --------------------------------------------------------------------------


def cycle_state(n, k):
    return f"K{n}:{k}"


def build_cycles_line(M=8, W=None) -> Model:
    """Cycles ``K_n = {0..n} x {1/n}`` for ``n <= M`` and the window ``{0..W} x {0}``.

    ``phi`` rotates each cycle and shifts the half-line right; ``(W, 0)``
    leaves the truncation through the ghost ``K0:{W+1}``.  Level ``m`` of
    the exhaustion holds the cycles ``n <= m`` and ``{(k, 0) : k <= m}``.
    """
    M = int(M)
    W = 2 * M if W is None else int(W)
    if M < 2:
        raise ValueError("M must be at least 2")
    if W < M:
        raise ValueError("W must be at least M")
    states, coords = [], []
    for n in range(1, M + 1):
        for k in range(n + 1):
            states.append(cycle_state(n, k))
            coords.append((k, 1.0 / n))
    for k in range(W + 1):
        states.append(cycle_state(0, k))
        coords.append((k, 0.0))
    top = max(M, W)
    levels = []
    for m in range(top + 1):
        lv = [cycle_state(n, k) for n in range(1, min(m, M) + 1) for k in range(n + 1)]
        lv += [cycle_state(0, k) for k in range(min(m, W) + 1)]
        levels.append(lv)
    space = StateSpace.from_coordinates(states, coords, exhaustion=levels, truncation_level=M, finite=False)

    def phi(s):
        n, k = (int(p) for p in s[1:].split(":"))
        if n == 0:
            return cycle_state(0, k + 1)
        return cycle_state(n, k + 1 if k < n else 0)

    S = KernelOperator.from_map(space, phi)
    return Model("cycles_line", {"M": M, "W": W}, space, {"S": S}, {"cesaro": SchemeBinding("S", "cesaro")},
                 fixture=load_fixture("cycles_line"))


def cycle_indicator(space: StateSpace, n) -> BoundedFunction:
    return BoundedFunction.indicator(space, [s for s in space.states if s.startswith(f"K{n}:")])


def cycle_measure(space: StateSpace, n) -> SignedMeasure:
    """Counting measure on ``K_n`` normalised to unit mass."""
    return SignedMeasure.uniform([s for s in space.states if s.startswith(f"K{n}:")])


def cycles_total(space: StateSpace) -> BoundedFunction:
    """``1_E``, including the part of the half-line beyond the window."""
    return BoundedFunction.constant(space, 1.0)


def range_term(S: KernelOperator, nu: SignedMeasure, k=1) -> SignedMeasure:
    """``(I - (S')^k) nu``."""
    w = S.measure_vector(nu)
    g = w
    for _ in range(k):
        g = S.adjoint_ext(g)
    return S.measure_from_vector(w - g)


# --------------------------------------------------------------------------
# positive controls
# --------------------------------------------------------------------------


def irreducible_chain(P, name="irreducible_chain") -> Model:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P must be square")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-12):
        raise ValueError("P must be stochastic")
    states = [str(i) for i in range(P.shape[0])]
    space = StateSpace.discrete(states)
    S = KernelOperator(space, P)
    return Model(name, {"P": P.tolist()}, space, {"S": S}, {}, fixture=load_fixture(name))


def build_swap2() -> Model:
    space = StateSpace.discrete(["0", "1"])
    S = KernelOperator(space, [[0.0, 1.0], [1.0, 0.0]])
    return Model("swap2", {}, space, {"S": S}, {}, fixture=load_fixture("swap2"))


def build_shift_Z(N=32, h=1.0) -> Model:
    """Right shift on ``{-N..N}`` with spacing ``h``; ``N`` leaks to the ghost ``N+1``.

    Level ``m`` of the exhaustion is ``[-m, m]``.
    """
    N = int(N)
    if N < 1 or h <= 0:
        raise ValueError("need N >= 1 and h > 0")
    ks = list(range(-N, N + 1))
    states = [str(k) for k in ks]
    levels = [[str(k) for k in ks if abs(k) <= m] for m in range(N + 1)]
    space = StateSpace.from_coordinates(states, [h * k for k in ks], exhaustion=levels,
                                        truncation_level=N, finite=False)
    S = KernelOperator.from_map(space, lambda s: str(int(s) + 1))
    return Model("shift_Z", {"N": N, "h": float(h)}, space, {"S": S}, {}, fixture=load_fixture("shift_Z"))


def build_ctmc(Q, name="ctmc", s_probe=1.0) -> Model:
    """Continuous-time chain; the default operator is ``exp(s_probe Q)``."""
    Q = check_rate_matrix(Q)
    states = [str(i) for i in range(Q.shape[0])]
    space = StateSpace.discrete(states)
    spec = SchemeSpec.time(Q, [1.0], s_probe=s_probe)
    S = spec.semigroup(None, space)
    return Model(name, {"Q": Q.tolist(), "s_probe": s_probe}, space, {"S": S},
                 {"time": SchemeBinding("S", "time")}, rate=Q, fixture=load_fixture(name))


def build_standard(name, **params) -> Model:
    """Positive controls by name: ``irreducible3``, ``irreducible_chain`` (needs ``P``),
    ``swap2``, ``shift_Z`` and ``ctmc2`` / ``ctmc`` (needs ``Q``)."""
    if name == "irreducible3":
        return irreducible_chain(IRREDUCIBLE3, "irreducible3")
    if name == "irreducible_chain":
        return irreducible_chain(params["P"])
    if name == "swap2":
        return build_swap2()
    if name == "shift_Z":
        return build_shift_Z(**params)
    if name == "ctmc2":
        return build_ctmc(CTMC2, "ctmc2", **params)
    if name == "ctmc":
        return build_ctmc(params.pop("Q"), **params)
    raise KeyError(f"unknown standard model {name!r}")


REGISTRY = {
    "summing_l1": build_summing_l1,
    "z_infinity": build_z_infinity,
    "cycles_line": build_cycles_line,
    "irreducible3": lambda **kw: build_standard("irreducible3", **kw),
    "irreducible_chain": lambda **kw: build_standard("irreducible_chain", **kw),
    "swap2": lambda **kw: build_standard("swap2", **kw),
    "shift_Z": build_shift_Z,
    "ctmc2": lambda **kw: build_standard("ctmc2", **kw),
}


def build(name, **params) -> Model:
    """Look up a model by registry name."""
    if name not in REGISTRY:
        raise KeyError(f"unknown model {name!r}; known: {sorted(REGISTRY)}")
    return REGISTRY[name](**params)

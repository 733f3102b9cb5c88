"""State spaces, bounded functions, signed measures and the pairing between them.

Countable state spaces are represented by finite truncations.  States are
string identifiers; anything a kernel row points to that is not an
enumerated state is a *ghost* state, i.e. a state beyond the truncation.
Functions resolve ghost states through their tail rule, measures may carry
ghost mass (which is what leakage out of the truncation looks like).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

ALGEBRA_TOL = 1e-12
PLATEAU_TOL = 1e-6


class ResolutionError(KeyError):
    """A state outside the truncation was met and no tail rule covers it."""


class SolverError(RuntimeError):
    """An LP solve failed."""


# --------------------------------------------------------------------------
# state space
# --------------------------------------------------------------------------


class StateSpace:
    """Finite truncation of a countable metric space with a compact exhaustion.

    Parameters
    ----------
    states : sequence of str
        Ordered state identifiers.
    metric : (n, n) array_like
        Distance matrix.
    exhaustion : sequence of iterables of str, optional
        Nested finite sets ``K_1 <= K_2 <= ...`` covering ``states``.  Defaults
        to the single level ``[states]``.
    infinity_points : iterable of str
        Compactification points; must lie in every exhaustion level.
    truncation_level : int, optional
        Size parameter of the truncation (reported by diagnostics).
    finite : bool
        True if the truncation *is* the space.  For truncated infinite spaces
        the last exhaustion level only exists because the enumeration stops,
        so it never counts as evidence of tightness.
    coords : (n, d) array_like, optional
        Embedding used to build ``metric``; kept for serialization.
    check : bool or None
        Validate metric axioms.  ``None`` checks the triangle inequality only
        for spaces of at most 400 states.
    """

    def __init__(self, states, metric, exhaustion=None, infinity_points=(),
                 truncation_level=None, finite=True, coords=None, check=None):
        self.states = tuple(str(s) for s in states)
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state identifiers")
        self.index = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)
        if n == 0:
            raise ValueError("empty state space")
        d = np.array(metric, dtype=float)
        d.setflags(write=False)
        if d.shape != (n, n):
            raise ValueError(f"metric must be {n}x{n}, got {d.shape}")
        self.metric = d
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        if exhaustion is None:
            exhaustion = [self.states]
        self.exhaustion = tuple(tuple(str(s) for s in level) for level in exhaustion)
        self.infinity_points = tuple(str(s) for s in infinity_points)
        self.truncation_level = n if truncation_level is None else int(truncation_level)
        self.finite = bool(finite)
        self._level_masks = []
        for level in self.exhaustion:
            mask = np.zeros(n, dtype=bool)
            for s in level:
                mask[self.index[s]] = True
            mask.setflags(write=False)
            self._level_masks.append(mask)
        self._validate(check)

    def _validate(self, check):
        d = self.metric
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("metric must be finite and nonnegative")
        if np.any(np.diag(d) != 0):
            raise ValueError("metric(x, x) must be 0")
        if not np.array_equal(d, d.T):
            raise ValueError("metric must be symmetric")
        off = ~np.eye(len(self), dtype=bool)
        if np.any(d[off] <= 0):
            raise ValueError("metric must separate distinct states")
        if check is None:
            check = len(self) <= 400
        if check:
            for k in range(len(self)):
                if np.any(d > d[:, k:k + 1] + d[k:k + 1, :] + 1e-12 * (1 + d.max())):
                    raise ValueError("metric violates the triangle inequality")
        prev = np.zeros(len(self), dtype=bool)
        for m, mask in enumerate(self._level_masks):
            if np.any(prev & ~mask):
                raise ValueError(f"exhaustion level {m} does not contain level {m - 1}")
            prev = mask
        if not prev.all():
            raise ValueError("exhaustion does not cover the truncation")
        for p in self.infinity_points:
            if p not in self.index:
                raise ValueError(f"unknown infinity point {p!r}")
            if not all(mask[self.index[p]] for mask in self._level_masks):
                raise ValueError(f"infinity point {p!r} missing from some exhaustion level")

    @classmethod
    def from_coordinates(cls, states, coords, **kwargs):
        """Build a space whose metric is the Euclidean distance of an embedding."""
        x = np.asarray(coords, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        diff = x[:, None, :] - x[None, :, :]
        d = np.sqrt((diff ** 2).sum(axis=-1))
        kwargs.setdefault("check", False)
        return cls(states, d, coords=x, **kwargs)

    @classmethod
    def discrete(cls, states, **kwargs):
        """All distinct states at distance one."""
        n = len(states)
        return cls(states, 1.0 - np.eye(n), **kwargs)

    def __len__(self):
        return len(self.states)

    def __contains__(self, state):
        return state in self.index

    def __repr__(self):
        return (f"StateSpace(n={len(self)}, levels={len(self.exhaustion)}, "
                f"infinity_points={list(self.infinity_points)})")

    def __eq__(self, other):
        if not isinstance(other, StateSpace):
            return NotImplemented
        return (self.states == other.states and np.array_equal(self.metric, other.metric)
                and self.exhaustion == other.exhaustion
                and self.infinity_points == other.infinity_points)

    __hash__ = object.__hash__

    def level_mask(self, m):
        return self._level_masks[m]

    @property
    def certifying_levels(self):
        """Exhaustion indices that may certify tightness."""
        n = len(self.exhaustion)
        return range(n) if self.finite else range(max(n - 1, 0))

    def level_of(self, state):
        """Smallest exhaustion index containing ``state``."""
        i = self.index[state]
        for m, mask in enumerate(self._level_masks):
            if mask[i]:
                return m
        raise AssertionError("unreachable: exhaustion covers the space")

    def positions(self, states):
        return np.array([self.index[s] for s in states], dtype=int)

    def to_dict(self):
        out = {
            "states": list(self.states),
            "exhaustion": [list(level) for level in self.exhaustion],
            "infinity_points": list(self.infinity_points),
            "truncation_level": self.truncation_level,
            "finite": self.finite,
        }
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        else:
            out["metric"] = self.metric.tolist()
        return out

    @classmethod
    def from_dict(cls, data):
        common = dict(exhaustion=data.get("exhaustion"),
                      infinity_points=data.get("infinity_points", ()),
                      truncation_level=data.get("truncation_level"),
                      finite=data.get("finite", True))
        if "coords" in data:
            return cls.from_coordinates(data["states"], data["coords"], **common)
        return cls(data["states"], data["metric"], **common)


# --------------------------------------------------------------------------
# functions and measures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TailRule:
    """How a function extends beyond the truncation.

    ``kind`` is one of ``"zero"``, ``"constant"`` or ``"point"``; the latter
    copies the value at a compactification point.
    """

    kind: str
    value: float = 0.0
    point: str | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "point"):
            raise ValueError(f"unknown tail rule {self.kind!r}")
        if self.kind == "point" and self.point is None:
            raise ValueError("point tail rule needs a point")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c):
        return cls("constant", float(c))

    @classmethod
    def at_point(cls, state):
        return cls("point", point=str(state))

    def to_dict(self):
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        return {"kind": "point", "point": self.point}

    @classmethod
    def from_dict(cls, data):
        if data is None:
            return None
        return cls(data["kind"], float(data.get("value", 0.0)), data.get("point"))


@dataclass(frozen=True, eq=False)
class BoundedFunction:
    """A bounded function given by its values on the truncation."""

    space: StateSpace
    values: np.ndarray
    tail: TailRule | None = None
    lip_hint: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (len(self.space),):
            raise ValueError(f"expected {len(self.space)} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.tail is not None and self.tail.kind == "point" and self.tail.point not in self.space:
            raise ValueError(f"tail point {self.tail.point!r} is not a state")

    @classmethod
    def constant(cls, space, c=1.0, **kwargs):
        kwargs.setdefault("tail", TailRule.constant(c))
        return cls(space, np.full(len(space), float(c)), **kwargs)

    @classmethod
    def indicator(cls, space, states, **kwargs):
        v = np.zeros(len(space))
        v[space.positions(list(states))] = 1.0
        kwargs.setdefault("tail", TailRule.zero())
        return cls(space, v, **kwargs)

    @classmethod
    def from_mapping(cls, space, mapping, default=0.0, **kwargs):
        v = np.array([float(mapping.get(s, default)) for s in space.states])
        return cls(space, v, **kwargs)

    def __call__(self, state):
        return self.value_at(state)

    def value_at(self, state):
        i = self.space.index.get(state)
        if i is not None:
            return float(self.values[i])
        if self.tail is None:
            raise ResolutionError(f"state {state!r} is outside the truncation and the function has no tail rule")
        if self.tail.kind == "zero":
            return 0.0
        if self.tail.kind == "constant":
            return self.tail.value
        return float(self.values[self.space.index[self.tail.point]])

    def extended(self, ghosts: Sequence[str] = ()):
        """Values on ``space.states + ghosts``."""
        if not ghosts:
            return np.array(self.values)
        return np.concatenate([self.values, [self.value_at(g) for g in ghosts]])

    def with_values(self, values):
        return BoundedFunction(self.space, values, self.tail, None)

    def __add__(self, other):
        return _combine(self, other, 1.0, 1.0)

    def __sub__(self, other):
        return _combine(self, other, 1.0, -1.0)

    def __mul__(self, a):
        a = float(a)
        tail = self.tail
        if tail is not None and tail.kind == "constant":
            tail = TailRule.constant(a * tail.value)
        return BoundedFunction(self.space, a * self.values, tail)

    __rmul__ = __mul__

    def to_dict(self):
        return {
            "values": {s: float(v) for s, v in zip(self.space.states, self.values)},
            "tail": None if self.tail is None else self.tail.to_dict(),
            "lip_hint": self.lip_hint,
        }

    @classmethod
    def from_dict(cls, space, data):
        return cls.from_mapping(space, data["values"], tail=TailRule.from_dict(data.get("tail")),
                                lip_hint=data.get("lip_hint"))


def _combine_tails(t1, t2, a, b):
    if t1 is None or t2 is None:
        return None
    if t1 == t2 and t1.kind == "point":
        return t1
    vals = []
    for t in (t1, t2):
        if t.kind == "zero":
            vals.append(0.0)
        elif t.kind == "constant":
            vals.append(t.value)
        else:
            return None
    c = a * vals[0] + b * vals[1]
    return TailRule.zero() if c == 0 else TailRule.constant(c)


def _combine(f, g, a, b):
    if f.space is not g.space and f.space != g.space:
        raise ValueError("functions live on different spaces")
    return BoundedFunction(f.space, a * f.values + b * g.values, _combine_tails(f.tail, g.tail, a, b))


class SignedMeasure:
    """Finitely supported real measure; weights are a sparse state -> real map."""

    __slots__ = ("_weights",)

    def __init__(self, weights: Mapping[str, float] | Iterable[tuple[str, float]] = ()):
        items = weights.items() if isinstance(weights, Mapping) else weights
        w = {}
        for s, v in items:
            v = float(v)
            if not np.isfinite(v):
                raise ValueError("measure weights must be finite")
            if v != 0.0:
                w[str(s)] = w.get(str(s), 0.0) + v
        self._weights = w

    @classmethod
    def atom(cls, state, mass=1.0):
        return cls({state: mass})

    @classmethod
    def uniform(cls, states):
        states = list(states)
        return cls({s: 1.0 / len(states) for s in states})

    @classmethod
    def from_vector(cls, states, vector):
        return cls((s, v) for s, v in zip(states, np.asarray(vector, dtype=float)) if v != 0.0)

    @property
    def weights(self):
        return dict(self._weights)

    @property
    def support(self):
        return tuple(self._weights)

    def __getitem__(self, state):
        return self._weights.get(state, 0.0)

    def __repr__(self):
        return f"SignedMeasure({self._weights!r})"

    def total_variation(self):
        return float(sum(abs(v) for v in self._weights.values()))

    def mass(self):
        return float(sum(self._weights.values()))

    def positive_part(self):
        return SignedMeasure({s: v for s, v in self._weights.items() if v > 0})

    def negative_part(self):
        return SignedMeasure({s: -v for s, v in self._weights.items() if v < 0})

    def ghost_states(self, space):
        return tuple(s for s in self._weights if s not in space)

    def vector(self, states):
        """Dense weights on ``states``; mass elsewhere is dropped."""
        return np.array([self._weights.get(s, 0.0) for s in states])

    def __add__(self, other):
        out = dict(self._weights)
        for s, v in other._weights.items():
            out[s] = out.get(s, 0.0) + v
        return SignedMeasure(out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, a):
        return SignedMeasure({s: a * v for s, v in self._weights.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        return self._weights == other._weights

    __hash__ = None

    def to_dict(self):
        return {"weights": {s: float(v) for s, v in self._weights.items()}}

    @classmethod
    def from_dict(cls, data):
        return cls(data["weights"])


@dataclass(frozen=True, eq=False)
class VanishingWeight:
    """Nonnegative weight vanishing at infinity, with a decay certificate.

    The certificate maps each ``eps`` of ``eps_grid`` to the first exhaustion
    index ``m`` such that the weight is below ``eps`` outside ``K_m``.
    """

    space: StateSpace
    values: np.ndarray
    eps_grid: tuple = (0.5, 0.1, 0.01)
    certificate: dict = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (len(self.space),):
            raise ValueError("weight has the wrong length")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("weights must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        cert = {}
        for eps in self.eps_grid:
            cert[eps] = None
            for m in range(len(self.space.exhaustion)):
                outside = ~self.space.level_mask(m)
                if not outside.any() or v[outside].max() < eps:
                    cert[eps] = m
                    break
        object.__setattr__(self, "certificate", cert)

    @classmethod
    def indicator(cls, space, states, **kwargs):
        v = np.zeros(len(space))
        v[space.positions(list(states))] = 1.0
        return cls(space, v, **kwargs)

    @classmethod
    def level_indicator(cls, space, m, **kwargs):
        return cls(space, space.level_mask(m).astype(float), **kwargs)

    @classmethod
    def level_decay(cls, space, rate=0.5, **kwargs):
        """``rate ** level(x)``; vanishes along the exhaustion."""
        lv = np.array([space.level_of(s) for s in space.states], dtype=float)
        return cls(space, rate ** lv, **kwargs)


# --------------------------------------------------------------------------
# pairing and norms
# --------------------------------------------------------------------------


def pairing(f: BoundedFunction, mu: SignedMeasure) -> float:
    """Integral of ``f`` against ``mu``."""
    total = 0.0
    for s, w in mu._weights.items():
        total += w * f.value_at(s)
    return float(total)


def sup_norm(f: BoundedFunction) -> float:
    m = float(np.max(np.abs(f.values)))
    if f.tail is not None and f.tail.kind == "constant":
        m = max(m, abs(f.tail.value))
    return m


def tv_norm(mu: SignedMeasure) -> float:
    return mu.total_variation()


def strict_seminorm(f: BoundedFunction, phi: VanishingWeight) -> float:
    """``sup_x phi(x) |f(x)|`` over the truncation."""
    if phi.space is not f.space and phi.space != f.space:
        raise ValueError("weight and function live on different spaces")
    return float(np.max(phi.values * np.abs(f.values)))


def lipschitz_constant(f: BoundedFunction, space: StateSpace | None = None) -> float:
    """Largest difference quotient over enumerated pairs."""
    space = f.space if space is None else space
    n = len(space)
    if n < 2:
        return 0.0
    v = f.values
    num = np.abs(v[:, None] - v[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(np.eye(n, dtype=bool), 0.0, num / space.metric)
    return float(q.max())


def tightness_profile(family: Sequence[SignedMeasure], space: StateSpace) -> np.ndarray:
    """``sup_mu |mu|(E \\ K_m)`` for each exhaustion level ``m``.

    Ghost mass lies outside every level.
    """
    if not family:
        raise ValueError("family must be nonempty")
    prof = np.zeros(len(space.exhaustion))
    for mu in family:
        absw = {s: abs(v) for s, v in mu._weights.items()}
        ghost = sum(v for s, v in absw.items() if s not in space)
        inside = np.zeros(len(space))
        for s, v in absw.items():
            i = space.index.get(s)
            if i is not None:
                inside[i] = v
        for m in range(len(space.exhaustion)):
            out = ghost + inside[~space.level_mask(m)].sum()
            prof[m] = max(prof[m], out)
    return prof


def tight_index(profile, space: StateSpace, eps: float):
    """First certifying exhaustion level where the profile is at most ``eps``."""
    for m in space.certifying_levels:
        if profile[m] <= eps:
            return m
    return None


# --------------------------------------------------------------------------
# bounded-Lipschitz distance
# --------------------------------------------------------------------------


def _bl_lp(diff, dist):
    k = len(diff)
    if k == 0 or not np.any(diff):
        return 0.0
    if k == 1:
        return abs(diff[0])
    ii, jj = np.where(~np.eye(k, dtype=bool))
    rows = np.arange(len(ii))
    a = np.zeros((len(ii), k))
    a[rows, ii] = 1.0
    a[rows, jj] = -1.0
    b = dist[ii, jj]
    res = linprog(-diff, A_ub=a, b_ub=b, bounds=[(-1.0, 1.0)] * k, method="highs")
    if res.status != 0:
        raise SolverError(f"bounded-Lipschitz LP failed: {res.message}")
    return float(-res.fun)


def _bl_parts(mu, nu, space):
    delta = mu - nu
    inside = [s for s in delta.support if s in space]
    ghost = [s for s in delta.support if s not in space]
    return delta, inside, ghost


def bl_distance(mu: SignedMeasure, nu: SignedMeasure, space: StateSpace, method="auto",
                max_lp_support=150) -> float:
    """Dual bounded-Lipschitz (Fortet-Mourier) distance.

    Exact LP over the union of supports.  Ghost states carry no metric
    information, so their test-function values are only bounded by one
    (equivalently, they sit at distance two from everything).

    ``method="bounds"`` (or ``"auto"`` on supports larger than
    ``max_lp_support``) returns the total-variation upper bound instead,
    which never understates the distance; see :func:`bl_bounds`.
    """
    delta, inside, ghost = _bl_parts(mu, nu, space)
    ghost_part = sum(abs(delta[s]) for s in ghost)
    if method == "bounds" or (method == "auto" and len(inside) > max_lp_support):
        return bl_bounds(mu, nu, space)[1]
    if method not in ("auto", "lp"):
        raise ValueError(f"unknown method {method!r}")
    idx = space.positions(inside)
    d = space.metric[np.ix_(idx, idx)]
    return _bl_lp(np.array([delta[s] for s in inside]), d) + ghost_part


def bl_bounds(mu: SignedMeasure, nu: SignedMeasure, space: StateSpace, dictionary=None):
    """Lower/upper bounds on :func:`bl_distance` without an LP.

    The lower bound is the best pairing over a dictionary of functions in the
    bounded-Lipschitz unit ball (default: clipped distance functions to each
    support point, and their negatives); the upper bound is the total
    variation of the difference.
    """
    delta, inside, ghost = _bl_parts(mu, nu, space)
    upper = delta.total_variation()
    w = delta.vector(space.states)
    ghost_part = sum(abs(delta[s]) for s in ghost)
    if dictionary is None:
        # rows are 1-Lipschitz with |g| <= 1
        cands = np.clip(space.metric[space.positions(inside)], 0.0, 2.0) - 1.0
    else:
        cands = np.atleast_2d(np.asarray(dictionary, dtype=float))
    lower = ghost_part
    if len(cands):
        lower += float(np.max(np.abs(cands @ w)))
    return min(lower, upper), upper


# --------------------------------------------------------------------------
# serialization helpers
# --------------------------------------------------------------------------


def profile_csv(values, index=None, header=("index", "value")):
    """CSV text with an ``index,value`` header at full float precision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    values = list(values)
    index = range(len(values)) if index is None else index
    for i, v in zip(index, values):
        w.writerow([i, repr(float(v)) if v is not None else ""])
    return buf.getvalue()


def dumps(obj, **kwargs):
    """Deterministic JSON (sorted keys; floats in shortest round-trip form)."""
    kwargs.setdefault("sort_keys", True)
    kwargs.setdefault("indent", 2)
    return json.dumps(obj, default=_json_default, allow_nan=True, **kwargs)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")

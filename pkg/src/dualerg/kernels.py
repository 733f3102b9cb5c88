"""Bounded kernels, their operators on functions and adjoints on measures.

A :class:`KernelOperator` is stored as a dense matrix over the extended
index ``space.states + ghosts``.  Ghost states are targets beyond the
truncation; their rows are the identity, so mass that leaves the truncation
stays frozen where it left and is valued by the tail rule of whatever
function it is paired with.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import ALGEBRA_TOL, BoundedFunction, SignedMeasure, StateSpace, TailRule, pairing


@dataclass(frozen=True, eq=False)
class Kernel:
    """Row measures ``k(x, .)`` for each enumerated state ``x``."""

    space: StateSpace
    rows: dict

    @property
    def bound(self):
        if not self.rows:
            return 0.0
        return max(mu.total_variation() for mu in self.rows.values())

    def to_dict(self):
        return {x: [{"target": t, "weight": w} for t, w in mu.weights.items()]
                for x, mu in self.rows.items()}


class KernelOperator:
    """Kernel operator ``(Sf)(x) = sum_y k(x, y) f(y)`` with adjoint ``mu -> mu k``."""

    def __init__(self, space: StateSpace, matrix, ghosts=()):
        self.space = space
        self.ghosts = tuple(str(g) for g in ghosts)
        clash = [g for g in self.ghosts if g in space]
        if clash:
            raise ValueError(f"ghost states {clash} are enumerated states")
        n, g = len(space), len(self.ghosts)
        m = np.array(matrix, dtype=float)
        if m.shape == (n, n + g):
            ext = np.zeros((n + g, n + g))
            ext[:n] = m
            ext[n:, n:] = np.eye(g)
            m = ext
        if m.shape != (n + g, n + g):
            raise ValueError(f"matrix shape {m.shape} does not match {n} states and {g} ghosts")
        if not np.all(np.isfinite(m)):
            raise ValueError("kernel weights must be finite")
        if g and not np.array_equal(m[n:], np.hstack([np.zeros((g, n)), np.eye(g)])):
            raise ValueError("ghost rows must be the identity")
        m.setflags(write=False)
        self.matrix = m
        self._powers = {1: m}
        self._lock = threading.Lock()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_rows(cls, space: StateSpace, rows):
        """``rows`` maps state -> {target: weight} or SignedMeasure; missing rows are zero."""
        ghosts = []
        for x, row in rows.items():
            if x not in space:
                raise ValueError(f"row for unknown state {x!r}")
            w = row.weights if isinstance(row, SignedMeasure) else row
            for t in w:
                if t not in space and t not in ghosts:
                    ghosts.append(t)
        ext = space.states + tuple(ghosts)
        col = {s: i for i, s in enumerate(ext)}
        n = len(space)
        m = np.zeros((n, len(ext)))
        for x, row in rows.items():
            w = row.weights if isinstance(row, SignedMeasure) else row
            for t, v in w.items():
                m[space.index[x], col[t]] += float(v)
        return cls(space, m, ghosts)

    @classmethod
    def from_map(cls, space: StateSpace, phi):
        """Deterministic kernel ``k(x, .) = delta_{phi(x)}``."""
        return cls.from_rows(space, {x: {phi(x): 1.0} for x in space.states})

    @classmethod
    def identity(cls, space: StateSpace):
        return cls(space, np.eye(len(space)))

    @property
    def ext_states(self):
        return self.space.states + self.ghosts

    @property
    def n(self):
        return len(self.space)

    @cached_property
    def kernel(self) -> Kernel:
        ext = self.ext_states
        rows = {}
        for i, x in enumerate(self.space.states):
            nz = np.nonzero(self.matrix[i])[0]
            rows[x] = SignedMeasure({ext[j]: self.matrix[i, j] for j in nz})
        return Kernel(self.space, rows)

    def retained(self):
        """Weights among enumerated states only (ghost columns dropped)."""
        return self.matrix[: self.n, : self.n]

    @cached_property
    def bound(self):
        """``sup_x |k|(x, E)``, the operator norm on both sides."""
        return float(np.abs(self.matrix[: self.n]).sum(axis=1).max())

    def leakage(self):
        """Ghost mass of each leaking row."""
        lk = np.abs(self.matrix[: self.n, self.n:]).sum(axis=1)
        return {self.space.states[i]: float(v) for i, v in enumerate(lk) if v > 0}

    @cached_property
    def markovian(self):
        return is_markovian(self)

    def __repr__(self):
        return f"KernelOperator(n={self.n}, ghosts={len(self.ghosts)}, bound={self.bound:.6g})"

    # -- actions ----------------------------------------------------------

    def apply_ext(self, v):
        """Forward action on an extended value vector."""
        return self.matrix @ v

    def adjoint_ext(self, w):
        return w @ self.matrix

    def measure_vector(self, mu: SignedMeasure):
        """``mu`` as an extended weight vector; unknown states raise."""
        idx = {s: i for i, s in enumerate(self.ext_states)}
        w = np.zeros(len(idx))
        for s, v in mu.weights.items():
            if s not in idx:
                raise KeyError(f"measure charges state {s!r} unknown to this operator")
            w[idx[s]] = v
        return w

    def measure_from_vector(self, w):
        return SignedMeasure.from_vector(self.ext_states, w)

    def function_from_ext(self, v, like: BoundedFunction):
        tail = like.tail
        if tail is not None and tail.kind == "point":
            tail = TailRule.constant(like.value_at(tail.point))
        return BoundedFunction(self.space, v[: self.n], tail)

    # -- algebra ----------------------------------------------------------

    def power(self, k):
        return power(self, k)

    def __matmul__(self, other):
        return compose(self, other)

    def to_dict(self):
        return {"states": list(self.space.states), "kernel": self.kernel.to_dict()}

    @classmethod
    def from_dict(cls, space, data):
        rows = data["kernel"] if "kernel" in data else data
        return cls.from_rows(space, {x: {e["target"]: e["weight"] for e in row}
                                     for x, row in rows.items()})


# --------------------------------------------------------------------------


def forward_apply(S: KernelOperator, f: BoundedFunction) -> BoundedFunction:
    """``(Sf)(x) = <f, k(x, .)>``.  Raises if a row reaches a state ``f`` cannot resolve."""
    _check_space(S, f.space)
    return S.function_from_ext(S.apply_ext(f.extended(S.ghosts)), f)


def adjoint_apply(S: KernelOperator, mu: SignedMeasure) -> SignedMeasure:
    """``(S'mu)(A) = sum_x mu(x) k(x, A)``."""
    return S.measure_from_vector(S.adjoint_ext(S.measure_vector(mu)))


def duality_consistency(S: KernelOperator, f: BoundedFunction, mu: SignedMeasure, tol=ALGEBRA_TOL):
    """Compare ``<Sf, mu>`` with ``<f, S'mu>``."""
    lhs = pairing(forward_apply(S, f), mu)
    rhs = pairing(f, adjoint_apply(S, mu))
    scale = max(1.0, S.bound * np.max(np.abs(f.extended(S.ghosts))) * mu.total_variation())
    resid = abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "residual": resid, "tol": tol * scale, "passed": resid <= tol * scale}


def _check_space(S, space):
    if S.space is not space and S.space != space:
        raise ValueError("state-space mismatch")


def _aligned(S: KernelOperator, ghosts):
    """``S.matrix`` re-indexed over ``states + ghosts`` (a superset of S.ghosts)."""
    if S.ghosts == tuple(ghosts):
        return S.matrix
    n = S.n
    ext = S.space.states + tuple(ghosts)
    pos = {s: i for i, s in enumerate(ext)}
    m = np.eye(len(ext))
    cols = np.array([pos[s] for s in S.ext_states])
    m[:n] = 0.0
    m[np.ix_(np.arange(n), cols)] = S.matrix[:n]
    return m


def compose(S: KernelOperator, T: KernelOperator) -> KernelOperator:
    """``ST``; rows ``k_ST(x, .) = sum_y k_S(x, y) k_T(y, .)``."""
    _check_space(S, T.space)
    ghosts = S.ghosts + tuple(g for g in T.ghosts if g not in S.ghosts)
    return KernelOperator(S.space, _aligned(S, ghosts) @ _aligned(T, ghosts), ghosts)


def power(S: KernelOperator, k: int) -> KernelOperator:
    """``S**k`` by repeated squaring; the ``2**j`` powers are cached on ``S``."""
    k = int(k)
    if k < 0:
        raise ValueError("negative power")
    if k == 0:
        return KernelOperator(S.space, np.eye(len(S.ext_states)), S.ghosts)
    return KernelOperator(S.space, power_matrix(S, k), S.ghosts)


def _ladder(S, j):
    """Cached ``S.matrix ** (2**j)``."""
    with S._lock:
        return _ladder_unlocked(S, j)


def _ladder_unlocked(S, j):
    key = 1 << j
    if key not in S._powers:
        prev = _ladder_unlocked(S, j - 1)
        S._powers[key] = prev @ prev
    return S._powers[key]


def power_matrix(S: KernelOperator, k: int):
    out = None
    j = 0
    while k:
        if k & 1:
            p = _ladder(S, j)
            out = p if out is None else out @ p
        k >>= 1
        j += 1
    if out is None:
        return np.eye(len(S.ext_states))
    return out


def is_markovian(S: KernelOperator, tol=ALGEBRA_TOL) -> bool:
    """Rows are probability measures.  Ghost mass counts toward the row mass."""
    rows = S.matrix[: S.n]
    return bool(np.all(rows >= 0) and np.all(np.abs(rows.sum(axis=1) - 1.0) <= tol))


def operator_norms(S: KernelOperator):
    """Forward sup-norm bound and adjoint TV bound, computed separately.

    The forward norm is attained at the sign pattern of the heaviest row; the
    adjoint norm is attained at an atom, ``max_x |S' delta_x|``.  Both equal
    ``S.bound``.
    """
    n = S.n
    rows = S.matrix[:n]
    fwd = 0.0
    for i in range(n):
        v = np.sign(rows[i])
        fwd = max(fwd, abs(rows[i] @ v))
    adj = 0.0
    for i in range(n):
        e = np.zeros(len(S.ext_states))
        e[i] = 1.0
        adj = max(adj, np.abs(e @ S.matrix).sum())
    return float(fwd), float(adj)

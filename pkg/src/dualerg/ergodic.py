"""Fixed spaces, ergodic projections, decomposition residuals and cluster detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .averaging import SchemeSpec
from .core import (PLATEAU_TOL, BoundedFunction, SignedMeasure, StateSpace, TailRule, VanishingWeight,
                   bl_bounds, bl_distance, pairing)
from .kernels import KernelOperator, _aligned

NULL_TOL = 1e-8


# --------------------------------------------------------------------------
# probe dictionaries
# --------------------------------------------------------------------------


def _spread(items, k):
    items = list(items)
    if len(items) <= k:
        return items
    idx = np.unique(np.linspace(0, len(items) - 1, k).round().astype(int))
    return [items[i] for i in idx]


def default_atoms(space: StateSpace, max_atoms=32):
    """Atoms on a middle exhaustion level, spread out, compactification points first."""
    levels = list(space.certifying_levels) or [len(space.exhaustion) - 1]
    level = space.exhaustion[levels[len(levels) // 2]]
    rest = [s for s in level if s not in space.infinity_points]
    pts = [p for p in space.infinity_points if p in level]
    return pts + _spread(rest, max(1, max_atoms - len(pts)))


def bump(space: StateSpace, center, radius):
    """``max(0, 1 - d(center, .)/radius)``: Lipschitz with constant ``1/radius``."""
    d = space.metric[space.index[center]]
    return BoundedFunction(space, np.maximum(0.0, 1.0 - d / radius), TailRule.zero(), lip_hint=1.0 / radius)


def default_function_probes(space: StateSpace, max_probes=16):
    """The constant one plus wide Lipschitz bumps centred at default atoms."""
    probes = [BoundedFunction.constant(space, 1.0, lip_hint=0.0)]
    for c in default_atoms(space, max_probes):
        radius = 0.5 * float(space.metric[space.index[c]].max())
        if radius > 0:
            probes.append(bump(space, c, radius))
    return probes


def default_weights(space: StateSpace, max_levels=8):
    levels = list(space.certifying_levels) or [len(space.exhaustion) - 1]
    ws = [VanishingWeight.level_indicator(space, m) for m in _spread(levels, max_levels)]
    ws.append(VanishingWeight.level_decay(space, 0.5))
    return ws


# --------------------------------------------------------------------------
# fixed spaces
# --------------------------------------------------------------------------


@dataclass
class FixedSpaceBasis:
    """Basis of ``fix(S)`` (functions) or ``fix(S')`` (measures) on the truncation."""

    side: str
    space: StateSpace
    matrix: np.ndarray  # columns are basis vectors on the enumerated states
    residuals: list
    singular_values: list
    threshold: float
    warnings: list = field(default_factory=list)

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def basis(self):
        if self.side == "function":
            return [BoundedFunction(self.space, c, TailRule.zero()) for c in self.matrix.T]
        return [SignedMeasure.from_vector(self.space.states, c) for c in self.matrix.T]

    def to_dict(self):
        return {"side": self.side, "dim": self.dim, "residuals": self.residuals,
                "threshold": self.threshold, "warnings": self.warnings,
                "basis": [dict(zip(self.space.states, map(float, c))) for c in self.matrix.T]}


def _canonical(b, side):
    """Rotate a null-space basis so it is the identity on pivot states.

    Spans of indicators of disjoint sets come out as those indicators;
    measures are then scaled to unit mass (or unit variation if massless).
    """
    d = b.shape[1]
    if d == 0:
        return b
    _, _, piv = scipy.linalg.qr(b.T, pivoting=True)
    c = b @ np.linalg.inv(b[piv[:d]])
    c[np.abs(c) < 1e-13 * np.abs(c).max()] = 0.0
    if side == "measure":
        for j in range(d):
            m = c[:, j].sum()
            c[:, j] /= m if abs(m) > 1e-12 else np.abs(c[:, j]).sum()
    return c


def fixed_space(S: KernelOperator, side="function", tol=NULL_TOL, canonical=True) -> FixedSpaceBasis:
    """Numerical null space of ``I - S`` (functions) or ``I - S'`` (measures).

    Singular values below ``tol * sigma_max`` count as zero.  Mass leaking out
    of the truncation is treated as lost; leaking rows are named in the
    warnings.
    """
    if side not in ("function", "measure"):
        raise ValueError("side is 'function' or 'measure'")
    n = S.n
    a = S.retained()
    m = np.eye(n) - (a if side == "function" else a.T)
    _, s, vt = np.linalg.svd(m)
    thr = tol * (s[0] if len(s) else 0.0)
    rank = int(np.sum(s > thr))
    b = vt[rank:].T
    if canonical:
        b = _canonical(b, side)
    resid = []
    for col in b.T:
        if side == "function":
            ext = np.concatenate([col, np.zeros(len(S.ghosts))])
            resid.append(float(np.max(np.abs(S.apply_ext(ext)[:n] - col))) if n else 0.0)
        else:
            ext = np.concatenate([col, np.zeros(len(S.ghosts))])
            resid.append(float(np.abs(S.adjoint_ext(ext) - ext).sum()))
    warnings = []
    leak = S.leakage()
    if leak:
        warnings.append(f"rows leak mass beyond the truncation at {sorted(leak)[:8]}"
                        f"{' ...' if len(leak) > 8 else ''}; fixed vectors assume zero there")
    sv = list(np.linalg.svd(b, compute_uv=False)) if b.size else []
    return FixedSpaceBasis(side, S.space, b, resid, [float(x) for x in sv], float(thr), warnings)


def separation_test(fun: FixedSpaceBasis, meas: FixedSpaceBasis, tol=1e-10):
    """Rank tests on the pairing matrix ``G_ij = <b_i, m_j>``.

    Fixed measures separate fixed functions iff no nonzero combination of the
    ``b_i`` is annihilated by every ``m_j`` (rank G = dim fix(S)); dually
    for functions separating measures.
    """
    g = fun.matrix.T @ meas.matrix
    df, dm = fun.dim, meas.dim
    sv = np.linalg.svd(g, compute_uv=False) if g.size else np.zeros(0)
    rtol = tol * max(1.0, float(sv[0]) if len(sv) else 1.0)
    rank = int(np.sum(sv > rtol))
    return {
        "gram": g,
        "measures_separate_functions": rank == df,
        "functions_separate_measures": rank == dm,
        "both": rank == df == dm,
        "margin": float(sv[-1]) if len(sv) else 0.0,
        "rank": rank, "dims": (df, dm),
    }


def projection_from_fixed_spaces(fun: FixedSpaceBasis, meas: FixedSpaceBasis):
    """``P = F (M^T F)^{-1} M^T``: the projection onto fix(S) along the annihilator of fix(S')."""
    f, m = fun.matrix, meas.matrix
    g = m.T @ f
    if g.shape[0] != g.shape[1]:
        raise ValueError("fixed spaces have different dimensions")
    return f @ np.linalg.solve(g, m.T)


# --------------------------------------------------------------------------
# ergodic projection
# --------------------------------------------------------------------------


@dataclass
class ProjectionEstimate:
    """Limit of the averages along the grid, with how it was certified.

    ``status`` is ``"certified"`` when the chosen distance between successive
    estimates stayed below ``tol`` over the window and ``P`` passed the
    projection identities; otherwise ``"inconclusive"``.  A plateau is not a
    proof of convergence.
    """

    P: KernelOperator
    status: str
    topology: str
    log: list
    invariants: dict
    scheme: SchemeSpec
    reason: str = ""

    @property
    def certified(self):
        return self.status == "certified"

    def to_dict(self):
        return {"status": self.status, "topology": self.topology, "reason": self.reason,
                "log": self.log, "invariants": self.invariants, "scheme": self.scheme.to_dict(),
                "P": {x: {t: float(v) for t, v in row.weights.items()}
                      for x, row in self.P.kernel.rows.items()},
                "note": "plateau of successive estimates, not a proven limit"}


def _richardson(prev, cur, h_prev, h_cur):
    return (h_prev * cur - h_cur * prev) / (h_prev - h_cur)


class _Distance:
    """Distance between two ext matrices in one of the probe topologies."""

    def __init__(self, S, topology, function_probes, atoms, weights):
        self.S = S
        self.topology = topology
        self.n = S.n
        self.F = np.column_stack([f.extended(S.ghosts) for f in function_probes])
        self.atom_pos = S.space.positions(atoms)
        self.W = np.array([w.values for w in weights]) if weights else None
        self.ext = S.ext_states

    def __call__(self, a, b, tol):
        d = a - b
        if self.topology == "sigma":
            return float(np.max(np.abs(d[self.atom_pos] @ self.F))), "exact"
        if self.topology == "beta0":
            df = np.abs(d[: self.n] @ self.F)  # n x probes
            return float((self.W[:, :, None] * df[None]).max()), "exact"
        if self.topology == "sigma_prime":
            worst, kind = 0.0, "exact"
            for i in self.atom_pos:
                tv = float(np.abs(d[i]).sum())
                if tv < tol:
                    val, k = tv, "upper"
                else:
                    mu = SignedMeasure.from_vector(self.ext, a[i])
                    nu = SignedMeasure.from_vector(self.ext, b[i])
                    lo, _ = bl_bounds(mu, nu, self.S.space)
                    if lo >= tol:
                        val, k = lo, "lower"
                    else:
                        val, k = bl_distance(mu, nu, self.S.space), "exact"
                if val > worst:
                    worst, kind = val, k
            return worst, kind
        raise ValueError(f"unknown topology {self.topology!r}")


def estimate_projection(S: KernelOperator, scheme: SchemeSpec, topology="sigma", function_probes=None,
                        atoms=None, weights=None, tol=PLATEAU_TOL, window=5, extrapolate=True,
                        invariant_tol=1e-8) -> ProjectionEstimate:
    """Run the averages along ``scheme.grid`` until successive estimates plateau.

    With ``extrapolate`` the estimate at each grid point is the Richardson
    combination of the last two averages under the error model
    ``A_alpha = P + C h(alpha)`` (``h = 1/n``, ``1-r`` or ``1/t``).  The
    distance between successive estimates is measured by pairing against
    atoms (``sigma``), by the bounded-Lipschitz distance between adjoint
    rows (``sigma_prime``) or by strict seminorms (``beta0``).  ``P`` is
    assembled row-wise from the last estimate.
    """
    space = S.space
    function_probes = default_function_probes(space) if function_probes is None else function_probes
    atoms = default_atoms(space) if atoms is None else atoms
    weights = default_weights(space) if weights is None else weights
    dist = _Distance(S, topology, function_probes, atoms, weights)
    log = []
    prev_a = prev_e = None
    prev_alpha = None
    run = 0
    est = None
    status, reason = "inconclusive", "grid exhausted before a plateau"
    for alpha in scheme.grid:
        a = scheme.matrix(S, alpha)
        if extrapolate and prev_a is not None:
            est = _richardson(prev_a, a, scheme.step(prev_alpha), scheme.step(alpha))
        else:
            est = a
        entry = {"index": alpha}
        if prev_e is not None:
            d, kind = dist(est, prev_e, tol)
            entry.update(distance=d, bound=kind)
            run = run + 1 if d < tol else 0
        log.append(entry)
        prev_a, prev_e, prev_alpha = a, est, alpha
        if run >= window - 1:
            status, reason = "certified", ""
            break
    if est is None or not np.all(np.isfinite(est)):
        est = np.eye(len(S.ext_states))
        status, reason = "inconclusive", "averages are not finite"
    P = KernelOperator(space, est[: S.n], S.ghosts)
    inv = projection_invariants_check(P, [scheme.semigroup(S)], invariant_tol)
    if status == "certified" and not inv["passed"]:
        status, reason = "inconclusive", "plateau reached but projection identities fail"
    return ProjectionEstimate(P, status, topology, log, inv, scheme, reason)


def _opnorm(m, n):
    return float(np.abs(m[:n]).sum(axis=1).max()) if n else 0.0


def projection_invariants_check(P: KernelOperator, operators, tol=1e-8):
    """Residuals of ``P^2 - P``, ``PS - P`` and ``SP - P`` in operator sup norm."""
    ghosts = list(P.ghosts)
    for S in operators:
        ghosts += [g for g in S.ghosts if g not in ghosts]
    p = _aligned(P, ghosts)
    n = P.n
    out = {"idempotent": _opnorm(p @ p - p, n), "PS": 0.0, "SP": 0.0}
    for S in operators:
        s = _aligned(S, ghosts)
        out["PS"] = max(out["PS"], _opnorm(p @ s - p, n))
        out["SP"] = max(out["SP"], _opnorm(s @ p - p, n))
    out["tol"] = tol
    out["passed"] = all(out[k] <= tol for k in ("idempotent", "PS", "SP"))
    return out


# --------------------------------------------------------------------------
# decomposition and the pairing obstruction
# --------------------------------------------------------------------------


def _exhaustion_order(space):
    order, seen = [], set()
    for level in space.exhaustion:
        for s in level:
            if s not in seen:
                seen.add(s)
                order.append(s)
    return order


def decomposition_check(x, S: KernelOperator, P: KernelOperator | None = None, generator_states=None,
                        powers=(1,), counts=None, tol=1e-8):
    """Least-squares residual of ``x - Px`` against generators ``(I - S^k) e_j``.

    ``x`` is a function (generators ``e_j - S^k e_j``) or a measure
    (generators ``delta_j - (S')^k delta_j``).  The residual is reported in
    the natural norm (sup or total variation) as the number of generators
    grows.  A residual bounded away from zero across truncations is evidence
    that ``x`` is not in ``fix + closure of range(I - S)``.
    """
    n = S.n
    ext = S.ext_states
    size = len(ext)
    states = _exhaustion_order(S.space) if generator_states is None else list(generator_states)
    pos = S.space.positions(states)
    mats = {k: np.linalg.matrix_power(S.matrix, k) for k in powers}
    if P is None:
        P = KernelOperator(S.space, np.zeros((n, size)), S.ghosts)
    p = _aligned(P, S.ghosts)
    if isinstance(x, BoundedFunction):
        v = x.extended(S.ghosts)
        r = (v - p @ v)[:n]
        gens = [(np.eye(size)[:, j] - mats[k][:, j])[:n] for j in pos for k in powers]
        norm = lambda z: float(np.max(np.abs(z))) if len(z) else 0.0  # noqa: E731
        side = "function"
    else:
        w = S.measure_vector(x)
        r = w - w @ p
        gens = [np.eye(size)[j] - mats[k][j] for j in pos for k in powers]
        norm = lambda z: float(np.abs(z).sum())  # noqa: E731
        side = "measure"
    G = np.column_stack(gens) if gens else np.zeros((len(r), 0))
    total = G.shape[1]
    if counts is None:
        counts = [0]
        c = 1
        while c < total:
            counts.append(c)
            c *= 2
        counts.append(total)
    series = []
    for c in counts:
        if c == 0:
            res = r
        else:
            coef, *_ = np.linalg.lstsq(G[:, :c], r, rcond=None)
            res = r - G[:, :c] @ coef
        series.append({"generators": int(c), "residual": norm(res), "l2": float(np.linalg.norm(res))})
    final = series[-1]["residual"]
    return {"side": side, "projection_residual": norm(r), "series": series,
            "final_residual": final, "passed": final <= tol}


def obstruction_witness(candidate: SignedMeasure, fixed_functions, total: BoundedFunction,
                        target: SignedMeasure, tol=1e-9):
    """Pairing test for membership of ``target`` in ``fix(S') + closure range(I - S')``.

    Range terms are annihilated by fixed functions, so any decomposition of
    ``target`` is pinned down on ``fixed_functions``; if matching ``target``
    there forces ``<total, candidate>`` away from ``<total, target>`` the
    decomposition is impossible.
    """
    got = np.array([pairing(f, candidate) for f in fixed_functions])
    want = np.array([pairing(f, target) for f in fixed_functions])
    matches = bool(np.all(np.abs(got - want) <= tol))
    tot = pairing(total, candidate)
    tot_target = pairing(total, target)
    return {"fixed_pairings": got, "target_pairings": want, "matches_on_fixed": matches,
            "total_pairing": tot, "target_total": tot_target,
            "gap": abs(tot - tot_target)}


def decomposition_obstruction(candidate: SignedMeasure, S: KernelOperator, target: SignedMeasure,
                              fun: FixedSpaceBasis | None = None, tol=1e-9):
    """:func:`obstruction_witness` with the fixed functions of ``S`` and ``total = 1``.

    ``1`` is fixed by every Markovian ``S``; its pairing with a candidate
    ``sum a_n zeta_n + range terms`` is ``sum a_n`` because range terms
    carry no mass.
    """
    fun = fixed_space(S, "function") if fun is None else fun
    total = BoundedFunction.constant(S.space, 1.0)
    return obstruction_witness(candidate, fun.basis, total, target, tol)


def obstruction_sweep(S: KernelOperator, target: SignedMeasure, rng, n_matching=1000, max_terms=4,
                      max_power=3, tol=1e-9, max_draws=100000):
    """Random decomposition attempts ``sum a_n m_n + sum_j c_j (I - (S')^{k_j}) nu_j``.

    ``m_n`` runs over the fixed-measure basis and ``nu_j`` over random
    atoms.  Coefficients ``a_n`` are drawn on log-uniform scales in
    ``[1e-14, 1]`` so that some candidates match ``target`` on every fixed
    function and most do not.  Draws continue until ``n_matching``
    candidates match to ``tol``; the report gives the largest total pairing
    among those and the target's.
    """
    fun = fixed_space(S, "function")
    meas = fixed_space(S, "measure")
    basis = meas.basis
    ext = S.ext_states
    total = BoundedFunction.constant(S.space, 1.0)
    target_total = pairing(total, target)
    worst, matched, draws = 0.0, 0, 0
    gaps = []
    while matched < n_matching and draws < max_draws:
        draws += 1
        scale = 10.0 ** rng.uniform(-14, 0)
        w = np.zeros(len(ext))
        for m in basis:
            w += scale * rng.uniform(-1, 1) * S.measure_vector(m)
        for _ in range(rng.integers(1, max_terms + 1)):
            j = rng.integers(len(S.space))
            k = int(rng.integers(1, max_power + 1))
            e = np.zeros(len(ext))
            e[j] = rng.normal()
            g = e
            for _ in range(k):
                g = S.adjoint_ext(g)
            w += e - g
        rep = decomposition_obstruction(SignedMeasure.from_vector(ext, w), S, target, fun, tol)
        if rep["matches_on_fixed"]:
            matched += 1
            worst = max(worst, abs(rep["total_pairing"]))
            gaps.append(rep["gap"])
    return {"draws": draws, "matching": matched, "max_abs_total_pairing": worst,
            "target_total": target_total, "min_gap": float(min(gaps)) if gaps else None,
            "obstructed": matched > 0 and worst < 0.5 * abs(target_total)}


# --------------------------------------------------------------------------
# cluster detection
# --------------------------------------------------------------------------


@dataclass
class ClusterVerdict:
    status: str  # "convergent", "clusters-multiple-limits" or "escapes"
    witnesses: list
    net_profile: list
    fixed_residuals: list = field(default_factory=list)
    decay_ratio: float | None = None
    projected_movement: float | None = None

    @property
    def in_fixed_space(self):
        return bool(self.fixed_residuals) and all(r["passed"] for r in self.fixed_residuals)

    def to_dict(self):
        return {"status": self.status, "n_witnesses": len(self.witnesses),
                "net_profile": self.net_profile, "fixed_residuals": self.fixed_residuals,
                "decay_ratio": self.decay_ratio, "projected_movement": self.projected_movement}


def _as_vector(item, states):
    if isinstance(item, BoundedFunction):
        return item.values
    if isinstance(item, SignedMeasure):
        return item.vector(states)
    return np.asarray(item, dtype=float)


def _metric_for(topology, space, kind, weights, atoms):
    if topology == "sup":
        return lambda a, b: float(np.max(np.abs(a - b)))
    if topology == "beta0":
        W = np.array([w.values for w in (weights or default_weights(space))])
        return lambda a, b: float(np.max(W * np.abs(a - b)[None, :]))
    if topology == "sigma":
        if kind == "measure":
            raise ValueError("sigma topology is for functions; use sigma_prime for measures")
        pos = space.positions(atoms or default_atoms(space))
        return lambda a, b: float(np.max(np.abs(a[pos] - b[pos])))
    if topology in ("sigma_prime", "bl"):
        def bl(a, b):
            mu = SignedMeasure.from_vector(space.states, a)
            nu = SignedMeasure.from_vector(space.states, b)
            return bl_distance(mu, nu, space)
        return bl
    raise ValueError(f"unknown topology {topology!r}")


def _greedy_net(vectors, dist, eps):
    centers = []
    for v in vectors:
        if all(dist(v, c) > eps for c in centers):
            centers.append(v)
    return centers


def _settling(dists):
    """Geometric decay ratio of consecutive distances and the projected remaining movement."""
    d = np.asarray(dists, dtype=float)
    if len(d) < 3:
        return None, None
    if np.all(d == 0):
        return 0.0, 0.0
    if np.any(d <= 0):
        return None, None
    rho = float(np.exp(np.polyfit(np.arange(len(d)), np.log(d), 1)[0]))
    if rho >= 0.9:
        return rho, None
    return rho, float(d[-1] * rho / (1.0 - rho))


def cluster_detector(sequence, topology, space: StateSpace, eps=1e-3, operator: KernelOperator | None = None,
                     fixed_tol=1e-8, weights=None, atoms=None):
    """Classify a finite sample of a sequence by epsilon-nets on its tail.

    The tail is the second half of the sample.  It is ``convergent`` when a
    single net point covers it, or when consecutive distances decay
    geometrically and the projected remaining movement is below ``eps``; the
    witness is then the geometric extrapolation of the last two samples.  It
    ``escapes`` when every tail point is ``eps``-separated from the others
    and the separation does not shrink.  Otherwise the sequence clusters at
    several points.  When an operator is supplied every witness is tested
    for membership in its fixed space.
    """
    seq = list(sequence)
    if not seq:
        raise ValueError("empty sequence")
    kind = "measure" if isinstance(seq[0], SignedMeasure) else "function"
    vecs = [_as_vector(x, space.states) for x in seq]
    dist = _metric_for(topology, space, kind, weights, atoms)
    L = len(vecs)
    profile = []
    for frac in (0.25, 0.5, 1.0):
        end = max(1, int(round(frac * L)))
        seg = vecs[end // 2:end]
        profile.append({"length": end, "net_size": len(_greedy_net(seg, dist, eps))})
    tail = vecs[L // 2:]
    tail_net = _greedy_net(tail, dist, eps)
    steps = [dist(a, b) for a, b in zip(tail, tail[1:])]
    rho, remaining = _settling(steps)
    if len(tail_net) == 1:
        status, witnesses = "convergent", [vecs[-1]]
    elif remaining is not None and remaining <= eps:
        # geometric tail: extrapolate to the limit rather than report the last sample
        status = "convergent"
        witnesses = [vecs[-1] + (vecs[-1] - vecs[-2]) * rho / (1.0 - rho)]
    elif len(tail) >= 4 and len(tail_net) == len(tail) and steps[-1] >= 0.5 * steps[0]:
        status, witnesses = "escapes", []
    else:
        status, witnesses = "clusters-multiple-limits", tail_net
    fixed = []
    if operator is not None:
        for w in witnesses:
            ext = np.concatenate([w, np.zeros(len(operator.ghosts))])
            if kind == "function":
                r = float(np.max(np.abs(operator.apply_ext(ext)[: operator.n] - w)))
            else:
                r = float(np.abs(operator.adjoint_ext(ext) - ext).sum())
            fixed.append({"residual": r, "passed": r <= fixed_tol})
    return ClusterVerdict(status, witnesses, profile, fixed, rho, remaining)


def sum_directness(fun: FixedSpaceBasis, S: KernelOperator, powers=(1,)):
    """Smallest principal angle between fix(S) and span{(I - S^k) e_j} (functions)."""
    n = S.n
    if fun.dim == 0:
        return float(np.pi / 2)
    mats = [np.linalg.matrix_power(S.retained(), k) for k in powers]
    gens = np.column_stack([np.eye(n) - m for m in mats])
    rng = scipy.linalg.orth(gens, rcond=1e-10)
    if rng.shape[1] == 0:
        return float(np.pi / 2)
    angles = scipy.linalg.subspace_angles(fun.matrix, rng)
    return float(np.min(angles))


def fixed_point_residual(S: KernelOperator, f: BoundedFunction):
    v = f.extended(S.ghosts)
    return float(np.max(np.abs(S.apply_ext(v)[: S.n] - f.values))) if S.n else 0.0


__all__ = [
    "FixedSpaceBasis", "ProjectionEstimate", "ClusterVerdict", "fixed_space", "separation_test",
    "projection_from_fixed_spaces", "estimate_projection", "projection_invariants_check",
    "decomposition_check", "obstruction_witness", "decomposition_obstruction", "obstruction_sweep", "cluster_detector", "default_atoms",
    "default_function_probes", "default_weights", "bump", "sum_directness", "fixed_point_residual",
]

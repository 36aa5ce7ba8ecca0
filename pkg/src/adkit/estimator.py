"""Windowed asymptotic dimension values and growth-preorder comparisons.

ad(lam; D) over a window is the minimum cover multiplicity minus one, over
covers with Lebesgue number >= lam and mesh <= D. The solver uses the clique
reduction: optimal covers are (up to no loss) partitions of the maximal
cliques of the lam-threshold graph into groups whose unions stay within
diameter D, minimizing the max point incidence. Feasibility per multiplicity
level is decided by depth-first search with forced-move and containment
pruning; level 1 reduces to a connectivity argument and is solved directly.

Every upper bound is witnessed by a concrete cover; every lower bound is a
refuted feasibility level or a sub-window exact value.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cover import Budget, Cover, lebesgue_refutation
from .errors import (
    BudgetExhaustedError,
    CertificateError,
    InsufficientRangeError,
    NonIntegerMetricError,
    PreconditionError,
)
from .metric import (
    FiniteMetricSpace,
    PointSet,
    ball,
    diam,
    outer_neighborhood,
)

DEFAULT_SEARCH_BUDGET = 2_000_000


@dataclass(frozen=True)
class WindowPolicy:
    """Scale policy: diameter budget D(lam) and ambient radius R(lam).

    Statistics are evaluated on the interior window B_{R-D}(basepoint) while
    cover sets may use all of B_R, so boundary truncation cannot fake a good
    Lebesgue number.
    """

    d_factor: int = 4
    r_factor: int = 5

    def __post_init__(self):
        if self.d_factor < 1:
            raise PreconditionError("D(lam) must be >= lam", d_factor=self.d_factor)
        if self.r_factor < 2:
            raise PreconditionError("R(lam) must be >= 2 D(lam)", r_factor=self.r_factor)

    def D(self, lam: int) -> int:
        return self.d_factor * lam

    def R(self, lam: int) -> int:
        return self.r_factor * self.D(lam)

    def window_radius(self, lam: int) -> int:
        return self.R(lam) - self.D(lam)


@dataclass(frozen=True)
class CurveSample:
    lam: int
    lower: int
    upper: Optional[int]
    method: str
    seconds: float


@dataclass(frozen=True)
class DimCurve:
    subject: str
    policy: WindowPolicy
    samples: tuple

    def __post_init__(self):
        lams = [s.lam for s in self.samples]
        if lams != sorted(set(lams)):
            raise PreconditionError("sample lams must be strictly increasing")
        for s in self.samples:
            if s.lower < 0 or (s.upper is not None and s.lower > s.upper):
                raise PreconditionError("sample bounds out of order", lam=s.lam)

    def upper_step_at(self, x) -> int:
        """Upper envelope at x via step-from-below interpolation; values
        beyond the last sample clamp to it (monotone extension)."""
        usable = [s for s in self.samples if s.upper is not None]
        if not usable or x < usable[0].lam:
            raise InsufficientRangeError(
                "curve does not reach the evaluation point", x=x,
                first_sample=usable[0].lam if usable else None)
        val = usable[0].upper
        for s in usable:
            if s.lam <= x:
                val = s.upper
            else:
                break
        return val


@dataclass(frozen=True)
class Subject:
    """A family of window instances indexed by scale, e.g. a group's balls."""

    name: str
    build: Callable  # lam, policy -> WindowInstance


@dataclass(frozen=True)
class WindowInstance:
    space: FiniteMetricSpace
    window: PointSet
    hints: tuple = ()
    note: str = ""


@dataclass(frozen=True)
class Estimate:
    lower: int
    upper: Optional[int]
    witness: Optional[Cover]
    method: str

    @property
    def exact(self) -> bool:
        return self.upper is not None and self.lower == self.upper


@dataclass(frozen=True)
class DominationResult:
    holds: bool
    k: int
    witness_lam: Optional[int] = None


# ---------------------------------------------------------------------------
# clique machinery


def _window_submatrix(X: FiniteMetricSpace, window: PointSet):
    wpts = window.as_sorted()
    idx = np.fromiter(wpts, dtype=np.intp)
    return wpts, X.int_matrix[np.ix_(idx, idx)]


def _adjacency_masks(subD: np.ndarray, thr: int) -> list:
    close = subD <= thr
    np.fill_diagonal(close, False)
    adj = []
    for i in range(close.shape[0]):
        row = 0
        for j in np.nonzero(close[i])[0]:
            row |= 1 << int(j)
        adj.append(row)
    return adj


def _enumerate_maximal_cliques(adj: list, budget: Budget) -> list:
    """All maximal cliques as bitmasks, Bron-Kerbosch with pivoting."""
    w = len(adj)
    out = []
    # iterative stack of (R, P, X, candidates-to-branch)
    full = (1 << w) - 1

    def pick_pivot(p, x):
        pool = p | x
        best_u, best = -1, -1
        while pool:
            u = (pool & -pool).bit_length() - 1
            score = (p & adj[u]).bit_count()
            if score > best:
                best_u, best = u, score
            pool &= pool - 1
        return best_u

    stack = [(0, full, 0, None)]
    while stack:
        r, p, x, cand = stack.pop()
        budget.spend("maximal clique enumeration")
        if cand is None:
            if not p and not x:
                out.append(r)
                continue
            cand = p & ~adj[pick_pivot(p, x)]
        if not cand:
            continue
        vbit = cand & -cand
        v = vbit.bit_length() - 1
        stack.append((r, p & ~vbit, x | vbit, cand & ~vbit))
        stack.append((r | vbit, p & adj[v], x & adj[v], None))
    return out


def _canonical_clique_order(cliques: list) -> list:
    def key(mask):
        members = []
        m = mask
        while m:
            members.append((m & -m).bit_length() - 1)
            m &= m - 1
        return (-len(members), tuple(members))
    return sorted(cliques, key=key)


# ---------------------------------------------------------------------------
# feasibility per multiplicity level


def _level_one(subD: np.ndarray, lam: int, D: int) -> Optional[list]:
    """P1 decision by connectivity: components of the lam-threshold graph
    must each fit in one set. Returns component masks or None."""
    w = subD.shape[0]
    close = subD <= lam
    seen = np.zeros(w, dtype=bool)
    comps = []
    for s in range(w):
        if seen[s]:
            continue
        frontier = np.zeros(w, dtype=bool)
        frontier[s] = True
        comp = np.zeros(w, dtype=bool)
        while frontier.any():
            comp |= frontier
            reach = close[frontier].any(axis=0) & ~comp
            frontier = reach
        seen |= comp
        idxs = np.nonzero(comp)[0]
        if subD[np.ix_(idxs, idxs)].max() > D:
            return None
        mask = 0
        for i in idxs:
            mask |= 1 << int(i)
        comps.append(mask)
    return comps


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask &= mask - 1


def _decision_search(cliques: list, far: list, w: int, m: int,
                     budget: Budget) -> Optional[list]:
    """Is there an assignment of the cliques to groups with every group
    union of diameter <= D (encoded in far masks) and point incidence <= m?

    Returns group union masks, or None. Iterative DFS; groups are opened in
    canonical (restricted-growth) order; cliques fully inside an existing
    union are placed there for free, which dominates every alternative.
    """
    n = len(cliques)
    counts = [0] * w
    unions: list = []     # per group: union mask
    forbidden: list = []  # per group: OR of far[] over union points
    sizes: list = []      # per group: clique count, for undo of empty groups

    NEW = -1
    frames = []  # (ci, options, pos)
    journal = []  # per applied option: (group, new_bits, prev_forbidden, opened)

    def feasible_new_bits(c_mask, g):
        nb = c_mask & ~unions[g]
        for p in _bits(nb):
            if counts[p] + 1 > m:
                return None
        return nb

    def apply(ci, g):
        c_mask = cliques[ci]
        if g == NEW:
            nb = c_mask
            for p in _bits(nb):
                counts[p] += 1
            fb = 0
            for p in _bits(c_mask):
                fb |= far[p]
            unions.append(c_mask)
            forbidden.append(fb)
            sizes.append(1)
            journal.append((len(unions) - 1, nb, 0, True))
            return
        nb = c_mask & ~unions[g]
        prev_fb = forbidden[g]
        for p in _bits(nb):
            counts[p] += 1
        unions[g] |= c_mask
        for p in _bits(nb):
            forbidden[g] |= far[p]
        sizes[g] += 1
        journal.append((g, nb, prev_fb, False))

    def undo():
        g, nb, prev_fb, opened = journal.pop()
        for p in _bits(nb):
            counts[p] -= 1
        if opened:
            unions.pop()
            forbidden.pop()
            sizes.pop()
        else:
            unions[g] &= ~nb
            forbidden[g] = prev_fb
            sizes[g] -= 1

    def options_for(ci) -> list:
        c_mask = cliques[ci]
        for g in range(len(unions)):
            if c_mask & ~unions[g] == 0:
                return [g]  # forced: free placement dominates everything
        opts = []
        for g in range(len(unions)):
            if c_mask & forbidden[g]:
                continue
            if feasible_new_bits(c_mask, g) is None:
                continue
            opts.append(g)
        ok_new = all(counts[p] + 1 <= m for p in _bits(c_mask))
        if ok_new:
            opts.append(NEW)
        return opts

    ci = 0
    while True:
        if ci == n:
            return list(unions)
        budget.spend("ad decision search")
        opts = options_for(ci)
        frames.append((ci, opts, 0))
        # descend into first option or backtrack
        while frames:
            fci, fopts, pos = frames[-1]
            if pos < len(fopts):
                frames[-1] = (fci, fopts, pos + 1)
                apply(fci, fopts[pos])
                ci = fci + 1
                break
            frames.pop()
            if not frames:
                return None
            undo()
        else:
            return None


# ---------------------------------------------------------------------------
# upper-bound constructions used as incumbents


def _ball_cover(X: FiniteMetricSpace, lam: int, D: int,
                window: PointSet) -> Optional[Cover]:
    """One ball of radius D//2 per window point: Lebesgue >= lam whenever
    2 lam <= D, mesh <= D. Crude multiplicity, but always certified."""
    r = D // 2
    if lam > r:
        return None
    wpts = window.as_sorted()
    idx = np.fromiter(wpts, dtype=np.intp)
    m = X.int_matrix
    sets = []
    for p in wpts:
        near = np.nonzero(m[p, idx] <= r)[0]
        sets.append(PointSet(X, frozenset(int(idx[i]) for i in near)))
    return Cover(X, tuple(sets), window)


def _greedy_groups(cliques: list, far: list) -> list:
    """First-fit partition by canonical order, diameter constraint only."""
    unions, forbidden = [], []
    for c in cliques:
        placed = False
        for g in range(len(unions)):
            if c & forbidden[g] == 0:
                unions[g] |= c
                for p in _bits(c):
                    forbidden[g] |= far[p]
                placed = True
                break
        if not placed:
            fb = 0
            for p in _bits(c):
                fb |= far[p]
            unions.append(c)
            forbidden.append(fb)
    return unions


def _groups_to_cover(X: FiniteMetricSpace, window: PointSet, wpts: tuple,
                     groups: list) -> Cover:
    sets = []
    for mask in groups:
        sets.append(PointSet(X, frozenset(wpts[i] for i in _bits(mask))))
    return Cover(X, tuple(sets), window)


def _cover_multiplicity_on(window: PointSet, cover: Cover) -> int:
    counts = {p: 0 for p in window.members}
    for s in cover.sets:
        for p in s.members & window.members:
            counts[p] += 1
    return max(counts.values())


def _validated_upper(cover: Cover, X, lam, D, window,
                     budget: Budget) -> Optional[tuple]:
    """Restrict a candidate cover to the window and certify it; returns
    (multiplicity, restricted cover) or None if it misses a requirement."""
    sets = tuple(PointSet(X, s.members & window.members) for s in cover.sets)
    sets = tuple(s for s in sets if s.members)
    cand = Cover(X, sets, window)
    if cand.uncovered():
        return None
    for s in sets:
        if diam(s) > D:
            return None
    if lebesgue_refutation(cand, lam, budget) is not None:
        return None
    return _cover_multiplicity_on(window, cand), cand


# ---------------------------------------------------------------------------
# the estimator


def _estimate(X: FiniteMetricSpace, lam: int, D: int, window: PointSet,
              budget: Optional[Budget] = None, hints: Sequence[Cover] = (),
              ) -> Estimate:
    if not X.is_integer:
        raise NonIntegerMetricError("ad estimation needs an integer metric")
    if lam < 0 or lam > D:
        raise PreconditionError("need 0 <= lam <= D", lam=lam, D=D)
    if window.space is not X:
        raise PreconditionError("window must belong to the space")
    if not window.members:
        raise PreconditionError("window must be nonempty")
    if budget is None:
        budget = Budget(DEFAULT_SEARCH_BUDGET)

    if diam(window) <= D:
        witness = Cover(X, (PointSet(X, window.members),), window)
        return Estimate(0, 0, witness, "exact:degenerate-window")

    wpts, subD = _window_submatrix(X, window)
    w = len(wpts)

    # upper candidates: hints, then the ball cover
    upper_candidates = []
    for h in hints:
        got = _validated_upper(h, X, lam, D, window, budget)
        if got is not None:
            upper_candidates.append(got + ("hint",))
    bc = _ball_cover(X, lam, D, window)
    if bc is not None:
        upper_candidates.append(
            (_cover_multiplicity_on(window, bc), bc, "balls"))

    cliques = None
    far = None

    def ensure_cliques():
        nonlocal cliques, far
        if cliques is not None:
            return
        adj = _adjacency_masks(subD, lam)
        raw = _enumerate_maximal_cliques(adj, budget)
        cliques = _canonical_clique_order(raw)
        far = []
        for i in range(w):
            mask = 0
            for j in np.nonzero(subD[i] > D)[0]:
                mask |= 1 << int(j)
            far.append(mask)
        greedy = _greedy_groups(cliques, far)
        gcov = _groups_to_cover(X, window, wpts, greedy)
        upper_candidates.append(
            (_cover_multiplicity_on(window, gcov), gcov, "greedy"))

    if not upper_candidates:
        ensure_cliques()

    m = 1
    while True:
        best_mult, best_cover, best_tag = min(
            upper_candidates, key=lambda t: (t[0], t[2]))
        if m == best_mult:
            return Estimate(m - 1, m - 1, best_cover,
                            f"exact:scan|upper:{best_tag}")
        if m == 1:
            comps = _level_one(subD, lam, D)
            if comps is not None:
                witness = _groups_to_cover(X, window, wpts, comps)
                return Estimate(0, 0, witness, "exact:components")
            m = 2
            continue
        try:
            ensure_cliques()
            groups = _decision_search(cliques, far, w, m, budget)
        except BudgetExhaustedError:
            return Estimate(m - 1, best_mult - 1, best_cover,
                            f"lower:refuted({m - 1})|upper:{best_tag}")
        if groups is not None:
            witness = _groups_to_cover(X, window, wpts, groups)
            return Estimate(m - 1, m - 1, witness, "exact:scan")
        m += 1


def ad_exact(X: FiniteMetricSpace, lam: int, D: int, window: PointSet,
             budget: Optional[Budget] = None,
             hints: Sequence[Cover] = ()) -> int:
    """Exact windowed ad value; raises budget-exhausted when the decision
    scan cannot finish (use ad_bounds for a certified sandwich instead)."""
    est = _estimate(X, lam, D, window, budget=budget, hints=hints)
    if not est.exact:
        raise BudgetExhaustedError(
            "decision scan ran out of budget",
            lower=est.lower, upper=est.upper)
    return est.lower


def ad_bounds(X: FiniteMetricSpace, lam: int, D: int, window: PointSet,
              budget: Optional[Budget] = None, hints: Sequence[Cover] = (),
              subwindows: Sequence[PointSet] = ()) -> tuple:
    """Certified (lower, upper). The upper is witnessed by a concrete cover
    (None when the budget dies before any candidate is validated); the lower
    is the deepest refuted multiplicity level, improved by exact values on
    optional sub-windows (restriction monotonicity). Each sub-window scan
    gets a fresh budget of the same limit, since the main scan typically
    stops by exhausting its own."""
    try:
        est = _estimate(X, lam, D, window, budget=budget, hints=hints)
    except BudgetExhaustedError:
        est = Estimate(0, None, None, "error:budget-exhausted")
    lower = est.lower
    if not est.exact:
        limit = budget.limit if budget is not None else DEFAULT_SEARCH_BUDGET
        for sub in subwindows:
            if not sub.members <= window.members:
                raise PreconditionError("subwindow must sit inside the window")
            try:
                got = ad_exact(X, lam, D, sub, budget=Budget(limit))
            except BudgetExhaustedError:
                continue
            lower = max(lower, got)
    return lower, est.upper


def ad_witness(X: FiniteMetricSpace, lam: int, D: int, window: PointSet,
               budget: Optional[Budget] = None,
               hints: Sequence[Cover] = ()) -> Estimate:
    """Rich result: bounds plus the witnessing cover and method tags."""
    return _estimate(X, lam, D, window, budget=budget, hints=hints)


# ---------------------------------------------------------------------------
# constructive covers


def _coords_of(space: FiniteMetricSpace, dim: int) -> dict:
    coords = {}
    for p in range(space.n):
        lab = space.label_of(p)
        if dim == 1:
            c = (lab,) if isinstance(lab, int) else tuple(lab)
        else:
            c = tuple(lab)
        if len(c) != dim or not all(isinstance(v, int) for v in c):
            raise PreconditionError(
                "points must carry integer lattice coordinates", point=p)
        coords[p] = c
    return coords


def brick_cover(dim: int, lam: int, side: int, window: PointSet,
                verify: bool = True) -> Cover:
    """Staggered brick cover of a lattice window.

    side is the per-axis span of a finished brick: disjoint cores of span
    side - 2 lam tile the lattice (consecutive core bands staggered by half
    a core), then each core grows by the metric lam-neighborhood. Any set of
    diameter <= lam lies in B_lam of any of its points, hence inside the
    enlarged core of that point: Lebesgue >= lam by construction.

    Coverage and the Lebesgue claim are re-measured on every call; the
    dim+1 multiplicity claim is asserted only on parameter ranges where it
    actually holds (cores at least 2(dim)lam wide, or the small proven
    cases), since thin cores legitimately produce higher multiplicity.
    """
    if lam < 0 or dim < 1:
        raise PreconditionError("need lam >= 0 and dim >= 1")
    core = side - 2 * lam
    if core < 1:
        raise PreconditionError("side too small for this lam",
                                side=side, required=2 * lam + 1)
    mult_claim = None
    if (side >= 2 * (dim + 1) * lam
            or (dim == 1 and core >= 2 * lam)
            or (dim == 2 and lam == 1 and core >= 2)):
        mult_claim = dim + 1
    X = window.space
    coords = _coords_of(X, dim)
    by_coord = {coords[p]: p for p in coords}
    los = [min(c[a] for c in coords.values()) for a in range(dim)]
    his = [max(c[a] for c in coords.values()) for a in range(dim)]
    shift_unit = core // 2

    def core_index(c):
        # peel off axes from the last to the first, undoing the stagger of
        # each axis by the band index of the previous one
        idx = []
        prev_band = 0
        for a in range(dim):
            v = c[a] - los[a] - shift_unit * prev_band
            band = v // core
            idx.append(band)
            prev_band = band
        return tuple(idx)

    buckets = {}
    for p, c in coords.items():
        buckets.setdefault(core_index(c), []).append(p)
    sets = []
    for key in sorted(buckets):
        core_pts = PointSet(X, frozenset(buckets[key]))
        enlarged = outer_neighborhood(core_pts, lam) if lam else core_pts
        if enlarged.members & window.members:
            sets.append(enlarged)
    cov = Cover(X, tuple(sets), window)
    if verify:
        _verify_construction(cov, lam, need_mult=mult_claim)
    return cov


def tree_cover(T: FiniteMetricSpace, lam: int, window: PointSet,
               verify: bool = True) -> Cover:
    """Cover of a rooted tree window by overlapping depth bands.

    For every vertex v at depth lam*j, one set holds the descendants of v
    within depths [lam*j, lam*j + 2 lam - 1]. Any 2 lam consecutive depths
    contain exactly two multiples of lam, so multiplicity <= 2; a set of
    diameter <= lam sits under a single anchor inside one band, so the
    Lebesgue number is >= lam; sets span under 2 lam depth, so mesh
    <= 4 lam - 2.
    """
    if T is not window.space:
        raise PreconditionError("window must belong to the tree space")
    root = T.basepoint if T.basepoint is not None else 0
    n = T.n
    mat = T.int_matrix
    deg_edges = int((mat == 1).sum()) // 2
    if deg_edges != n - 1:
        raise PreconditionError("input space is not a tree",
                                edges=deg_edges, points=n)
    depth = mat[root]
    if lam == 0:
        sets = tuple(PointSet(T, frozenset({p})) for p in window.as_sorted())
        cov = Cover(T, sets, window)
        if verify:
            _verify_construction(cov, 0, need_mult=1)
        return cov
    # descendant test: u is under v iff depth(u) = depth(v) + d(v, u)
    sets = []
    order = sorted(range(n), key=lambda v: (int(depth[v]), v))
    for v in order:
        dv = int(depth[v])
        if dv % lam != 0:
            continue
        under = np.nonzero((depth == depth[v] + mat[v])
                           & (depth <= dv + 2 * lam - 1))[0]
        members = frozenset(int(u) for u in under)
        if members & window.members:
            sets.append(PointSet(T, members))
    cov = Cover(T, tuple(sets), window)
    if verify:
        _verify_construction(cov, lam, need_mult=2)
    return cov


def _verify_construction(cov: Cover, lam: int, need_mult: Optional[int]):
    missing = cov.uncovered()
    if missing:
        raise CertificateError("constructed cover misses the window",
                               witness=min(missing))
    if lam > 0:
        bad = lebesgue_refutation(cov, lam)
        if bad is not None:
            raise CertificateError("constructed cover has a small Lebesgue set",
                                   witness=bad.as_sorted())
    if need_mult is not None:
        got = _cover_multiplicity_on(cov.window, cov)
        if got > need_mult:
            raise CertificateError("constructed cover exceeds its multiplicity",
                                   got=got, expected=need_mult)


# ---------------------------------------------------------------------------
# curves and the growth preorder


def dim_curve(subject: Subject, lam_samples: Sequence[int],
              policy: Optional[WindowPolicy] = None,
              budget_limit: int = DEFAULT_SEARCH_BUDGET) -> DimCurve:
    """Sampled lam -> (lower, upper) for one subject. Per-sample errors are
    recorded as gap samples instead of aborting the sweep."""
    policy = policy or WindowPolicy()
    samples = []
    for lam in sorted(set(lam_samples)):
        start = time.perf_counter()
        D = policy.D(lam)
        try:
            inst = subject.build(lam, policy)
            est = _estimate(inst.space, lam, D, inst.window,
                            budget=Budget(budget_limit), hints=inst.hints)
            lower, upper, method = est.lower, est.upper, est.method
        except (BudgetExhaustedError, PreconditionError,
                NonIntegerMetricError) as e:
            lower, upper, method = 0, None, f"error:{e.code}"
        samples.append(CurveSample(lam, lower, upper, method,
                                   time.perf_counter() - start))
    return DimCurve(subject.name, policy, tuple(samples))


def dominates(f: DimCurve, g: DimCurve, k: int) -> DominationResult:
    """Empirical growth-preorder check at the sampled scales: holds iff
    every f sample satisfies upper_f(lam) <= k * upper_g(k lam + k) + k,
    comparing upper envelopes with step interpolation."""
    if k < 1:
        raise PreconditionError("k must be >= 1", k=k)
    for s in f.samples:
        if s.upper is None:
            continue
        gval = g.upper_step_at(k * s.lam + k)
        if s.upper > k * gval + k:
            return DominationResult(False, k, s.lam)
    return DominationResult(True, k)


def find_min_k(f: DimCurve, g: DimCurve, k_max: int) -> Optional[int]:
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1", k_max=k_max)
    for k in range(1, k_max + 1):
        if dominates(f, g, k).holds:
            return k
    return None

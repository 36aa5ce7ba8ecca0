"""Covers of finite windows and their exact statistics.

Multiplicity and k-multiplicity are definition scans. The Lebesgue number
uses the fact that subsets of diameter <= lam are exactly the cliques of the
threshold graph at lam, so "every small set fits in a cover element" reduces
to maximal-clique containment, enumerated under a node budget.

Statistics are always evaluated on the declared window; cover sets may stick
out beyond it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BudgetExhaustedError,
    NonIntegerMetricError,
    NotACoverError,
    PreconditionError,
)
from .metric import FiniteMetricSpace, PointSet, diam

DEFAULT_CLIQUE_BUDGET = 500_000


class AllSubsets:
    """Sentinel: some cover set contains the entire window, so every subset
    of every diameter is contained and no finite Lebesgue number applies."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "AllSubsets"


ALL_SUBSETS = AllSubsets()


class Budget:
    """Mutable node counter shared across the stages of one bounded search."""

    def __init__(self, limit: int):
        self.limit = int(limit)
        self.spent = 0

    def spend(self, context: str = "search"):
        self.spent += 1
        if self.spent > self.limit:
            raise BudgetExhaustedError(
                f"{context} exceeded its node budget",
                limit=self.limit, context=context)

    def remaining(self) -> int:
        return self.limit - self.spent


@dataclass(frozen=True)
class Cover:
    """An indexed family of point sets expected to cover a window.

    Construction does not verify coverage (operations diagnose it with a
    witness), but it does pin every set and the window to one space.
    """

    space: FiniteMetricSpace
    sets: tuple
    window: PointSet

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        for s in self.sets:
            if s.space is not self.space:
                raise PreconditionError("cover set from a different space")
        if self.window.space is not self.space:
            raise PreconditionError("window from a different space")
        if not self.window.members:
            raise PreconditionError("window must be nonempty")

    @classmethod
    def from_lists(cls, space: FiniteMetricSpace, sets: Sequence,
                   window=None) -> "Cover":
        ps = [PointSet(space, frozenset(s)) for s in sets]
        win = window if isinstance(window, PointSet) else (
            space.full_set() if window is None
            else PointSet(space, frozenset(window)))
        return cls(space, tuple(ps), win)

    def uncovered(self) -> frozenset:
        hit = frozenset().union(*(s.members for s in self.sets)) if self.sets else frozenset()
        return self.window.members - hit

    def check_covers(self):
        missing = self.uncovered()
        if missing:
            raise NotACoverError("window point not covered",
                                 witness=min(missing))

    def restricted(self, window: PointSet) -> "Cover":
        """Same sets intersected with a smaller window."""
        if not window.members <= self.window.members:
            raise PreconditionError("restriction window must shrink the window")
        sets = tuple(PointSet(self.space, s.members & window.members)
                     for s in self.sets)
        return Cover(self.space, sets, window)


@dataclass(frozen=True)
class CoverStats:
    multiplicity: int
    k_multiplicity: dict
    lebesgue: "int | AllSubsets"
    mesh: object

    def lebesgue_at_least(self, lam) -> bool:
        return isinstance(self.lebesgue, AllSubsets) or self.lebesgue >= lam


# ---------------------------------------------------------------------------
# incidence plumbing


def _window_points(cover: Cover) -> tuple:
    return cover.window.as_sorted()


def _incidence_masks(cover: Cover, wpts: tuple) -> list:
    """For each window point, the bitmask of cover sets containing it."""
    masks = [0] * len(wpts)
    where = {p: i for i, p in enumerate(wpts)}
    for si, s in enumerate(cover.sets):
        bit = 1 << si
        for p in s.members:
            i = where.get(p)
            if i is not None:
                masks[i] |= bit
    return masks


# ---------------------------------------------------------------------------
# statistics


def multiplicity(cover: Cover) -> int:
    """Max over window points of how many sets contain the point."""
    cover.check_covers()
    wpts = _window_points(cover)
    masks = _incidence_masks(cover, wpts)
    return max(m.bit_count() for m in masks)


def k_multiplicity(cover: Cover, k) -> int:
    """Max over window points x of the number of sets met by B_k(x).

    Balls are taken in the ambient space, so sets lying outside the window
    still count once the radius reaches them.
    """
    if k < 0:
        raise PreconditionError("k must be >= 0", k=k)
    cover.check_covers()
    wpts = _window_points(cover)
    sp = cover.space
    counts = [0] * len(wpts)
    if sp.is_integer:
        m = sp.int_matrix
        widx = np.fromiter(wpts, dtype=np.intp)
        for s in cover.sets:
            if not s.members:
                continue
            sidx = np.fromiter(s.as_sorted(), dtype=np.intp)
            near = m[np.ix_(widx, sidx)].min(axis=1) <= k
            for i in np.nonzero(near)[0]:
                counts[i] += 1
    else:
        for s in cover.sets:
            if not s.members:
                continue
            for i, x in enumerate(wpts):
                if any(sp.d(x, a) <= k for a in s.members):
                    counts[i] += 1
    return max(counts)


def lebesgue_refutation(cover: Cover, lam: int,
                        budget: Optional[Budget] = None) -> Optional[PointSet]:
    """None if every window subset of diameter <= lam fits in some cover set;
    otherwise a witness subset (a maximal threshold clique) fitting in none.

    Exact for integer metrics. Runs budgeted Bron-Kerbosch with pivoting;
    subtrees whose whole candidate range already fits inside one set are
    pruned, which is what keeps near-degenerate covers cheap.
    """
    cover.check_covers()
    if not cover.space.is_integer:
        raise NonIntegerMetricError(
            "Lebesgue computation needs an integer metric")
    if lam < 0:
        raise PreconditionError("lam must be >= 0", lam=lam)
    wpts = _window_points(cover)
    w = len(wpts)
    incidence = _incidence_masks(cover, wpts)
    if budget is None:
        budget = Budget(DEFAULT_CLIQUE_BUDGET)
    widx = np.fromiter(wpts, dtype=np.intp)
    sub = cover.space.int_matrix[np.ix_(widx, widx)]
    close = sub <= lam
    np.fill_diagonal(close, False)
    adj = []
    for i in range(w):
        row = 0
        for j in np.nonzero(close[i])[0]:
            row |= 1 << int(j)
        adj.append(row)
    full = (1 << w) - 1
    all_sets = (1 << len(cover.sets)) - 1

    def bk(r_inc: int, r_mask: int, p: int, x: int):
        budget.spend("lebesgue clique enumeration")
        inc = r_inc
        m = p
        while m and inc:
            v = (m & -m).bit_length() - 1
            inc &= incidence[v]
            m &= m - 1
        if inc:
            return None  # R and all candidates fit inside one set together
        if not p and not x:
            return r_mask if not r_inc else None
        pivot_pool = p | x
        best_u, best_score = -1, -1
        mm = pivot_pool
        while mm:
            u = (mm & -mm).bit_length() - 1
            score = (p & adj[u]).bit_count()
            if score > best_score:
                best_u, best_score = u, score
            mm &= mm - 1
        cand = p & ~adj[best_u]
        while cand:
            vbit = cand & -cand
            v = vbit.bit_length() - 1
            res = bk(r_inc & incidence[v], r_mask | vbit,
                     p & adj[v], x & adj[v])
            if res is not None:
                return res
            p &= ~vbit
            x |= vbit
            cand &= ~vbit
        return None

    witness_mask = bk(all_sets, 0, full, 0)
    if witness_mask is None:
        return None
    members = frozenset(wpts[i] for i in range(w) if witness_mask >> i & 1)
    return PointSet(cover.space, members)


def lebesgue_number(cover: Cover, budget: Optional[Budget] = None):
    """Largest lam such that every window subset of diameter <= lam lies in
    a single cover set; AllSubsets sentinel when a set contains the window."""
    cover.check_covers()
    win = cover.window.members
    if any(win <= s.members for s in cover.sets):
        return ALL_SUBSETS
    if budget is None:
        budget = Budget(DEFAULT_CLIQUE_BUDGET)
    lam = 1
    while True:
        if lebesgue_refutation(cover, lam, budget) is not None:
            return lam - 1
        lam += 1


def lebesgue_lower_bound_balls(cover: Cover) -> int:
    """Sound lower bound on the Lebesgue number, no clique enumeration.

    Any A realizing its diameter at the pair (x, y) with r = d(x, y) sits
    inside B_r(x) & B_r(y) & window, so if that intersection fits in a cover
    set for every pair at distance <= lam, then L >= lam. Scans pair
    distances upward and stops at the first failure.
    """
    cover.check_covers()
    win = cover.window.members
    wpts = _window_points(cover)
    cap = (diam(cover.window) if len(wpts) > 1 else 0) + 1
    if any(win <= s.members for s in cover.sets):
        return cap
    incidence = _incidence_masks(cover, wpts)
    sp = cover.space
    w = len(wpts)
    widx = np.fromiter(wpts, dtype=np.intp)
    if sp.is_integer:
        sub = sp.int_matrix[np.ix_(widx, widx)]
        distances = sorted(set(sub[np.triu_indices(w, 1)].tolist()))
    else:
        sub = [[sp.d(a, b) for b in wpts] for a in wpts]
        distances = sorted({sub[i][j] for i in range(w) for j in range(i + 1, w)})
    for r in distances:
        for i in range(w):
            for j in range(i + 1, w):
                if sub[i][j] != r:
                    continue
                inc = incidence[i] & incidence[j]
                if not inc:
                    return _floor_below(r)
                for t in range(w):
                    if sub[i][t] <= r and sub[j][t] <= r:
                        inc &= incidence[t]
                        if not inc:
                            return _floor_below(r)
    return cap


def _floor_below(r) -> int:
    """Largest integer strictly below r for ints, floor otherwise handles
    rational pair distances."""
    if isinstance(r, int):
        return r - 1
    import math
    f = math.floor(r)
    return f if f < r else f - 1


def validate(cover: Cover, ks: Sequence = (0,),
             budget: Optional[Budget] = None) -> CoverStats:
    """Bundle multiplicity, requested k-multiplicities, the exact Lebesgue
    number and the mesh. Deterministic."""
    cover.check_covers()
    mult = multiplicity(cover)
    kmult = {k: k_multiplicity(cover, k) for k in ks}
    leb = lebesgue_number(cover, budget=budget)
    nonempty = [s for s in cover.sets if s.members]
    mesh = max((diam(s) for s in nonempty), default=0)
    return CoverStats(mult, kmult, leb, mesh)

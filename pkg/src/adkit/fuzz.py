"""Seeded fuzz generators and the property suites behind `verify`.

Each suite replays one combinator or oracle contract on randomized
instances whose preconditions are constructed to hold, then re-measures
the claimed postconditions independently of the combinator's own
certificate. Instances are generated from a single `random.Random(seed)`
stream, so a failure is reproducible from (suite, seed, index) alone.

The naive ad reference here is the package's ground truth for tiny
windows. It reduces a minimum-multiplicity cover search to partitioning
the maximal lam-cliques into groups of bounded union diameter, which is
lossless: any valid cover shrinks, set by set, onto the cliques it is
forced to contain, without raising multiplicity, mesh, or dropping the
Lebesgue floor below lam.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional

from .cover import (Cover, k_multiplicity, lebesgue_lower_bound_balls,
                    lebesgue_number, lebesgue_refutation, multiplicity,
                    AllSubsets)
from .errors import PreconditionError
from .estimator import ad_bounds, ad_exact
from .metric import (FiniteMetricSpace, PointSet, cycle_space, diam,
                     grid_space, inner_neighborhood, outer_neighborhood,
                     path_space, set_distance, space_from_graph)
from .transport import UniformFamily, shrink, union_transport


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    count: int
    failures: tuple
    seconds: float

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        extra = "" if self.passed else f" ({len(self.failures)} failing)"
        return (f"{self.suite}: {verdict} on {self.count} instances"
                f"{extra} [{self.seconds:.1f}s]")


_MAX_REPORTED = 5


class _Failures:
    def __init__(self):
        self.rows = []

    def add(self, index: int, what: str, **detail):
        if len(self.rows) < _MAX_REPORTED:
            self.rows.append((index, what, detail))

    def tuple(self):
        return tuple(self.rows)


# ---------------------------------------------------------------------------
# generators


def fuzz_space(rng: random.Random, n_lo: int = 6,
               n_hi: int = 14) -> FiniteMetricSpace:
    """A small connected integer metric space of varied shape."""
    n = rng.randint(n_lo, n_hi)
    kind = rng.choice(("path", "cycle", "grid", "graph"))
    if kind == "path":
        return path_space(n)
    if kind == "cycle":
        return cycle_space(max(3, n))
    if kind == "grid":
        w = rng.randint(2, max(2, int(math.isqrt(n))))
        h = max(2, n // w)
        return grid_space(w, h)
    edges = [(i, rng.randrange(i)) for i in range(1, n)]  # random tree
    for _ in range(rng.randint(0, n // 2)):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.append((u, v))
    return space_from_graph(n, edges)


def fuzz_blob_cover(rng: random.Random, space: FiniteMetricSpace,
                    window: Optional[PointSet] = None) -> Cover:
    """Random ball-grown sets patched to cover the window. No Lebesgue
    guarantee; suites that need one use the ladder generator."""
    win = window if window is not None else space.full_set()
    pts = sorted(win.members)
    m = space.int_matrix
    n_sets = rng.randint(2, max(2, len(pts) // 3))
    sets = []
    for _ in range(n_sets):
        c = rng.choice(pts)
        r = rng.randint(0, 3)
        sets.append(set(p for p in pts if m[c, p] <= r))
    covered = set().union(*sets)
    for p in pts:
        if p not in covered:
            rng.choice(sets).add(p)
    return Cover(space, tuple(PointSet(space, frozenset(s)) for s in sets),
                 win)


def fuzz_ladder_cover(rng: random.Random,
                      min_lebesgue: int = 4) -> tuple:
    """An interval ladder on a path: overlapping windows of one width on
    a line have a guaranteed positive Lebesgue number. Returns
    (cover, measured lebesgue)."""
    B = rng.randint(min_lebesgue + 2, min_lebesgue + 10)
    step = rng.randint(1, max(1, (B - min_lebesgue) // 2))
    n = rng.randint(3 * B, 6 * B)
    space = path_space(n)
    starts = sorted(set(list(range(0, n - B, step)) + [n - 1 - B]))
    sets = tuple(PointSet(space, frozenset(range(x, x + B + 1)))
                 for x in starts)
    cover = Cover(space, sets, space.full_set())
    L = lebesgue_number(cover)
    if isinstance(L, AllSubsets):
        L = diam(cover.window)
    return cover, L


def fuzz_union_instance(rng: random.Random, max_points: int = 14) -> tuple:
    """Two interval-covered blocks on a line, more than 3B apart.

    Returns (family, lam, D); the whole window has at most max_points
    points so the exact estimator stays cheap.
    """
    B = rng.randint(2, 4)
    lam = rng.randint(1, B)
    width = rng.randint(B, max(B, (max_points - 2) // 2 - 1))
    gap = 3 * B + rng.randint(1, 3)
    n = 2 * (width + 1) + gap
    space = path_space(n)

    def block_cover(lo, hi):
        step = max(1, B - lam)
        starts = sorted(set(list(range(lo, hi - B + 1, step)) + [hi - B])) \
            if hi - lo >= B else [lo]
        sets = tuple(PointSet(space,
                              frozenset(range(x, min(x + B, hi) + 1)))
                     for x in starts)
        region = PointSet(space, frozenset(range(lo, hi + 1)))
        return region, Cover(space, sets, region)

    a = block_cover(0, width)
    b = block_cover(width + 1 + gap, n - 1)
    mult = max(multiplicity(a[1]), multiplicity(b[1]))
    family = UniformFamily(members=(a, b), mesh_bound=B,
                           lebesgue_floor=lam, multiplicity_bound=mult)
    return family, lam, B


# ---------------------------------------------------------------------------
# the naive reference


def naive_ad_reference(X: FiniteMetricSpace, lam: int, D: int,
                       window: Optional[PointSet] = None) -> int:
    """Exhaustive windowed ad value for tiny windows.

    Enumerates the maximal lam-cliques by brute force, then searches every
    partition of them into groups whose unions have diameter <= D,
    minimizing the pointwise group count. Exponential; refuses windows
    with more than 12 points.
    """
    win = window if window is not None else X.full_set()
    pts = sorted(win.members)
    if len(pts) > 12:
        raise PreconditionError("reference is exhaustive; window too big",
                                points=len(pts))
    if lam < 0 or D < lam:
        raise PreconditionError("need 0 <= lam <= D", lam=lam, D=D)
    m = X.int_matrix

    def diameter(s) -> int:
        return max((int(m[a, b]) for a, b in combinations(s, 2)), default=0)

    cliques = []
    for size in range(1, len(pts) + 1):
        for sub in combinations(pts, size):
            if diameter(sub) <= lam:
                cliques.append(frozenset(sub))
    cliques = [c for c in cliques
               if not any(c < other for other in cliques)]
    cliques.sort(key=lambda c: (-len(c), sorted(c)))

    best = len(cliques) + 1

    def mult_of(groups) -> int:
        return max(sum(1 for g in groups if p in g) for p in pts)

    def search(i, groups):
        nonlocal best
        if groups and mult_of(groups) >= best:
            # group counts only grow as cliques are added
            return
        if i == len(cliques):
            best = min(best, mult_of(groups))
            return
        c = cliques[i]
        for gi in range(len(groups)):
            u = groups[gi] | c
            if diameter(u) <= D:
                saved = groups[gi]
                groups[gi] = u
                search(i + 1, groups)
                groups[gi] = saved
        groups.append(c)
        search(i + 1, groups)
        groups.pop()

    search(0, [])
    return best - 1


# ---------------------------------------------------------------------------
# suites


def run_shrink(count: int = 300, seed: int = 0) -> SuiteReport:
    """Shrink contract: with 4k <= L(U), the certificate passes and the
    three bounds are reproduced by direct measurement."""
    rng = random.Random(seed)
    fails = _Failures()
    t0 = time.perf_counter()
    for i in range(count):
        cover, L = fuzz_ladder_cover(rng, min_lebesgue=4)
        k = rng.randint(1, L // 4)
        try:
            out, cert = shrink(cover, k)
        except Exception as e:
            fails.add(i, f"shrink raised {type(e).__name__}: {e}",
                      lebesgue=L, k=k)
            continue
        if not cert.passed:
            fails.add(i, "certificate failed", k=k)
            continue
        if out.uncovered():
            fails.add(i, "shrunken cover misses the window", k=k)
        if L - 2 * k > 0 and \
                lebesgue_refutation(out, L - 2 * k) is not None:
            fails.add(i, "Lebesgue floor L-2k refuted by re-measurement",
                      lebesgue=L, k=k)
        if k_multiplicity(out, k) > multiplicity(cover):
            fails.add(i, "k-multiplicity exceeds input multiplicity", k=k)
        if any(v.members - u.members
               for v, u in zip(out.sets, cover.sets)):
            fails.add(i, "a shrunken set left its parent", k=k)
    return SuiteReport("shrink", count, fails.tuple(),
                       time.perf_counter() - t0)


def run_union(count: int = 200, seed: int = 0) -> SuiteReport:
    """Union contract on separated blocks, plus the finite-union sandwich
    max(ad_A, ad_B) <= ad_{A u B} <= m_A + m_B - 1 checked exactly."""
    rng = random.Random(seed)
    fails = _Failures()
    t0 = time.perf_counter()
    for i in range(count):
        family, lam, B = fuzz_union_instance(rng)
        try:
            out, cert = union_transport(family, None, lam)
        except Exception as e:
            fails.add(i, f"union_transport raised {type(e).__name__}: {e}",
                      lam=lam, B=B)
            continue
        if not cert.passed:
            fails.add(i, "certificate failed", lam=lam, B=B)
            continue
        X = family.space
        (ra, ca), (rb, cb) = family.members
        try:
            ad_a = ad_exact(X, lam, B, ra)
            ad_b = ad_exact(X, lam, B, rb)
            ad_u = ad_exact(X, lam, B, out.window, hints=(out,))
        except Exception as e:
            fails.add(i, f"exact estimate raised {type(e).__name__}: {e}",
                      lam=lam, B=B)
            continue
        if not max(ad_a, ad_b) <= ad_u:
            fails.add(i, "union ad fell below a block's ad",
                      blocks=(ad_a, ad_b), union=ad_u)
        if not ad_u <= multiplicity(ca) + multiplicity(cb) - 1:
            fails.add(i, "union ad exceeds m_A + m_B - 1",
                      union=ad_u, mults=(multiplicity(ca),
                                         multiplicity(cb)))
    return SuiteReport("union", count, fails.tuple(),
                       time.perf_counter() - t0)


def run_lebesgue_bounds(count: int = 500, seed: int = 0) -> SuiteReport:
    """The cheap ball-containment floor never exceeds the exact subset
    Lebesgue number."""
    rng = random.Random(seed)
    fails = _Failures()
    t0 = time.perf_counter()
    for i in range(count):
        space = fuzz_space(rng)
        cover = fuzz_blob_cover(rng, space)
        lo = lebesgue_lower_bound_balls(cover)
        exact = lebesgue_number(cover)
        if isinstance(exact, AllSubsets):
            continue
        if lo > exact:
            fails.add(i, "ball floor exceeds exact Lebesgue number",
                      floor=lo, exact=exact, n=space.n)
    return SuiteReport("lebesgue-bounds", count, fails.tuple(),
                       time.perf_counter() - t0)


def run_metric_duality(count: int = 500, seed: int = 0) -> SuiteReport:
    """Set-distance against neighborhoods: dist(A,B) <= r iff the outer
    r-neighborhood of A meets B, and the inner neighborhood is the
    complement of the outer neighborhood of the complement."""
    rng = random.Random(seed)
    fails = _Failures()
    t0 = time.perf_counter()
    for i in range(count):
        space = fuzz_space(rng)
        pts = list(range(space.n))
        A = PointSet(space, frozenset(rng.sample(
            pts, rng.randint(1, space.n))))
        B = PointSet(space, frozenset(rng.sample(
            pts, rng.randint(1, space.n))))
        if set_distance(A, B) != set_distance(B, A):
            fails.add(i, "set distance is not symmetric")
            continue
        r = rng.randint(0, int(diam(space.full_set())))
        meets = bool(outer_neighborhood(A, r).members & B.members)
        if (set_distance(A, B) <= r) != meets:
            fails.add(i, "distance threshold disagrees with neighborhood",
                      r=r, dist=set_distance(A, B))
        comp = PointSet(space, frozenset(pts) - A.members)
        inner = inner_neighborhood(A, r).members
        outer_c = outer_neighborhood(comp, r).members if comp.members \
            else frozenset()
        if inner != frozenset(pts) - outer_c:
            fails.add(i, "inner/outer duality fails", r=r)
    return SuiteReport("metric-duality", count, fails.tuple(),
                       time.perf_counter() - t0)


def run_ad_reference(count: int = 60, seed: int = 0) -> SuiteReport:
    """ad_exact against the exhaustive reference on <= 10 points, and
    ad_bounds ordering on the same instances."""
    rng = random.Random(seed)
    fails = _Failures()
    t0 = time.perf_counter()
    for i in range(count):
        space = fuzz_space(rng, n_lo=4, n_hi=10)
        full = space.full_set()
        lam = rng.randint(1, 3)
        D = rng.randint(lam, lam + 4)
        try:
            want = naive_ad_reference(space, lam, D, full)
            got = ad_exact(space, lam, D, full)
        except Exception as e:
            fails.add(i, f"estimate raised {type(e).__name__}: {e}",
                      lam=lam, D=D, n=space.n)
            continue
        if got != want:
            fails.add(i, "ad_exact disagrees with exhaustive reference",
                      exact=got, reference=want, lam=lam, D=D, n=space.n)
        lo, up = ad_bounds(space, lam, D, full)
        if up is not None and lo > up:
            fails.add(i, "ad_bounds came back out of order",
                      lower=lo, upper=up)
    return SuiteReport("ad-reference", count, fails.tuple(),
                       time.perf_counter() - t0)


SUITES: dict = {
    "shrink": (run_shrink, 300),
    "union": (run_union, 200),
    "lebesgue-bounds": (run_lebesgue_bounds, 500),
    "metric-duality": (run_metric_duality, 500),
    "ad-reference": (run_ad_reference, 60),
}


def run_suite(name: str, count: Optional[int] = None,
              seed: int = 0) -> SuiteReport:
    if name not in SUITES:
        raise PreconditionError("unknown verify suite", suite=name,
                                known=tuple(sorted(SUITES)))
    fn, default = SUITES[name]
    return fn(count if count is not None else default, seed)

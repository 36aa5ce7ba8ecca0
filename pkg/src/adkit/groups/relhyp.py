"""Relative word metrics: peripheral subgroups glued into the alphabet.

A peripheral subgroup H turns every nonidentity element of H into a
length-one letter on top of the generating set S. A finite window can
only approximate the resulting metric from above (a short path may
detour through points outside any fixed ball), so the builder prefers an
exact length oracle when the instance carries one, and falls back to a
graph search on a doubled compute radius whose output is flagged as
truncation-dependent.

The shipped instances are free groups relative to cyclic subgroups
generated by single letters. There the exact length has a closed form:
reading the reduced word, each letter outside every peripheral alphabet
costs one, and each maximal run of one peripheral's letters costs one.
The closed form is cross-checked against the graph search on a small
window at build time instead of being trusted.

relhyp_ball_decompose materializes the nested-ball decomposition
  B(n) = (union of B(n-1)*H_l) + (union of B(n-1)*s)
on a window, tags each B(n-1)*H_l into cosets, removes the union of
short right translates of B(n-1), and measures how far apart the
trimmed cosets sit in the plain word metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..cover import Budget
from ..errors import (CertificateError, PreconditionError,
                      WindowTooSmallError)
from ..metric import FiniteMetricSpace, PointSet, family_separation
from .models import GroupModel, free_group
from .windows import ball_map, cayley_window


@dataclass(frozen=True)
class Peripheral:
    """One peripheral subgroup, given by exact predicates on normal forms.

    contains decides membership; strip maps g to the canonical
    representative of the left coset g*H (so strip(g*h) == strip(g) for
    h in H, and strip(rep) == rep).
    """

    name: str
    contains: Callable
    strip: Callable


@dataclass(frozen=True)
class RelHypData:
    group: GroupModel
    peripherals: tuple
    rh_length: Optional[Callable] = None
    label: str = ""

    def validate(self, R: int = 2):
        """Window-checked sanity: each peripheral is a subgroup where
        representable, representatives are canonical, and the length
        oracle (when present) is a symmetric length."""
        G = self.group
        if not self.peripherals:
            raise PreconditionError("need at least one peripheral subgroup")
        window = list(ball_map(G, R))
        for p in self.peripherals:
            if not p.contains(G.identity):
                raise CertificateError(
                    "peripheral subgroup misses the identity",
                    subgroup=p.name)
            members = [g for g in window if p.contains(g)]
            for g in members:
                if not p.contains(G.invert(g)):
                    raise CertificateError(
                        "peripheral set is not inverse-closed",
                        subgroup=p.name, element=G.label(g))
                for h in members:
                    if not p.contains(G.combine(g, h)):
                        raise CertificateError(
                            "peripheral set is not product-closed",
                            subgroup=p.name, element=G.label(G.combine(g, h)))
            for g in window:
                rep = p.strip(g)
                if not p.contains(G.combine(G.invert(rep), g)):
                    raise CertificateError(
                        "representative leaves its coset",
                        subgroup=p.name, element=G.label(g))
                if p.strip(rep) != rep:
                    raise CertificateError(
                        "coset representative is not canonical",
                        subgroup=p.name, element=G.label(g))
        if self.rh_length is not None:
            if self.rh_length(G.identity) != 0:
                raise CertificateError("relative length of e must be 0")
            for g in window:
                v = self.rh_length(g)
                if v != self.rh_length(G.invert(g)):
                    raise CertificateError(
                        "relative length is not symmetric",
                        element=G.label(g))
                if g != G.identity and v < 1:
                    raise CertificateError(
                        "relative length vanishes off the identity",
                        element=G.label(g))


def free_rel_cyclic(k: int, gens) -> RelHypData:
    """Free group F_k relative to the cyclic subgroups of named letters."""
    G = free_group(k)
    gens = tuple(gens)
    if len(set(gens)) != len(gens):
        raise PreconditionError("repeated peripheral letter", letters=gens)
    pairs = []
    for name in gens:
        if name not in G.letters or name.endswith("-"):
            raise PreconditionError(
                "peripheral letter must be a positive generator",
                letter=name)
        pairs.append((name, G.inverse_letter[name]))

    def strip_tail(g, pair):
        i = len(g)
        while i and g[i - 1] in pair:
            i -= 1
        return g[:i]

    peris = tuple(
        Peripheral(
            name=f"<{name}>",
            contains=lambda g, pair=pair: all(s in pair for s in g),
            strip=lambda g, pair=pair: strip_tail(g, pair))
        for name, pair in zip(gens, pairs))

    def rh_length(g, pairs=tuple(pairs)):
        total = 0
        run = -1  # which peripheral the current letter run belongs to
        for s in g:
            owner = -1
            for i, pair in enumerate(pairs):
                if s in pair:
                    owner = i
                    break
            if owner < 0:
                total += 1
                run = -1
            elif owner != run:
                total += 1
                run = owner
        return total

    rh = RelHypData(G, peris, rh_length,
                    label=f"relhyp:f{k}|{','.join(gens)}")
    rh.validate()
    return rh


def f2_rel_a() -> RelHypData:
    return free_rel_cyclic(2, ("a",))


def relhyp_by_name(spec: str) -> RelHypData:
    """Registry: 'relhyp:f2|a' or 'f2|a,b' style names."""
    name = spec[len("relhyp:"):] if spec.startswith("relhyp:") else spec
    base, sep, tail = name.partition("|")
    if not sep:
        raise PreconditionError(
            "relative metric names look like f2|a", spec=spec)
    if not (len(base) > 1 and base[0] == "f" and base[1:].isdigit()):
        raise PreconditionError(
            "only free groups take a peripheral alphabet here", group=base)
    letters = tuple(t for t in tail.split(",") if t)
    if not letters:
        raise PreconditionError("no peripheral letters named", spec=spec)
    return free_rel_cyclic(int(base[1:]), letters)


# ---------------------------------------------------------------------------
# the relative metric on a window


def _letter_elements(G: GroupModel) -> dict:
    return {s: G.step(G.identity, s) for s in G.letters}


def _graph_distances(rh: RelHypData, report_R: int, compute_R: int,
                     budget: Optional[Budget]) -> tuple:
    """Relative distances between all pairs of B_{report_R} points via
    breadth-first search over the S-and-peripheral edge graph on
    B_{compute_R}. Returns (matrix, elements of the report ball)."""
    G = rh.group
    depth = ball_map(G, compute_R, budget)
    elems = sorted(depth, key=lambda g: (depth[g], G.label(g)))
    index = {g: i for i, g in enumerate(elems)}
    m = len(elems)

    adj = [[] for _ in range(m)]
    letter = _letter_elements(G)
    for i, g in enumerate(elems):
        for s in G.letters:
            j = index.get(G.combine(g, letter[s]))
            if j is not None and j != i:
                adj[i].append(j)
    for p in rh.peripherals:
        cosets = {}
        for i, g in enumerate(elems):
            cosets.setdefault(p.strip(g), []).append(i)
        for members in cosets.values():
            for a in members:
                for b in members:
                    if a != b:
                        adj[a].append(b)

    report = [i for i, g in enumerate(elems) if depth[g] <= report_R]
    if report != list(range(len(report))):
        raise CertificateError("window ordering is not depth-sorted")
    nr = len(report)
    mat = np.full((nr, nr), -1, dtype=np.int32)
    for src in range(nr):
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                du = dist[u]
                for v in adj[u]:
                    if v not in dist:
                        dist[v] = du + 1
                        nxt.append(v)
            frontier = nxt
        for t in range(nr):
            if t not in dist:
                raise CertificateError(
                    "combined edge graph is disconnected on the window")
            mat[src, t] = dist[t]
    return mat, tuple(elems[:nr])


def relhyp_metric(rh: RelHypData, R: int,
                  budget: Optional[Budget] = None) -> FiniteMetricSpace:
    """The relative word metric on the radius-R ball.

    With an exact length oracle the matrix is exact and the oracle is
    cross-checked against the edge-graph search on a small subwindow.
    Without one, distances come from the edge graph computed on radius
    2R and reported on radius R; those values can still overestimate
    the true metric when geodesics leave the compute window, so the
    result carries may_truncate=True.
    """
    if R < 0:
        raise PreconditionError("radius must be >= 0", R=R)
    G = rh.group
    base = cayley_window(G, R, budget)
    elems = base.meta["elements"]
    n = base.n

    if rh.rh_length is not None:
        mat = np.zeros((n, n), dtype=np.int32)
        for i in range(n):
            gi_inv = G.invert(elems[i])
            for j in range(i + 1, n):
                d = rh.rh_length(G.combine(gi_inv, elems[j]))
                mat[i, j] = mat[j, i] = d
        check_R = min(R, 2)
        if check_R >= 1:
            probe, probe_elems = _graph_distances(rh, check_R, 2 * check_R,
                                                  budget)
            k = len(probe_elems)
            if probe_elems != elems[:k]:
                raise CertificateError("window ordering is not reproducible")
            if not np.array_equal(probe, mat[:k, :k]):
                bad = np.argwhere(probe != mat[:k, :k])[0]
                raise CertificateError(
                    "length oracle disagrees with the edge-graph metric",
                    pair=(G.label(elems[bad[0]]), G.label(elems[bad[1]])),
                    oracle=int(mat[bad[0], bad[1]]),
                    graph=int(probe[bad[0], bad[1]]))
        method = "closed-form"
        compute_radius = R
        may_truncate = False
    else:
        mat, got = _graph_distances(rh, R, 2 * R, budget)
        if got != elems:
            raise CertificateError("window ordering is not reproducible")
        method = "graph-bfs"
        compute_radius = 2 * R
        may_truncate = True

    meta = {
        "group": G.name,
        "relhyp": rh.label or rh.group.name,
        "radius": R,
        "compute_radius": compute_radius,
        "metric": f"rel-word:{method}",
        "may_truncate": may_truncate,
        "peripherals": tuple(p.name for p in rh.peripherals),
        "elements": elems,
        "depth": base.meta["depth"],
    }
    return FiniteMetricSpace(mat, labels=base.labels,
                             basepoint=base.basepoint, meta=meta)


# ---------------------------------------------------------------------------
# ball decomposition


@dataclass(frozen=True)
class PeripheralFamily:
    """Coset pieces of one B(n-1)*H_l, before and after trimming."""

    name: str
    reps: tuple
    piece_sizes: tuple
    trimmed_sizes: tuple
    separation: object
    passed: bool


@dataclass(frozen=True)
class BallDecomposition:
    n: int
    r: int
    radius: int
    ball_sizes: tuple
    letter_piece_sizes: tuple
    families: tuple
    y_size: int
    passed: bool

    def family(self, name: str) -> PeripheralFamily:
        for f in self.families:
            if f.name == name:
                return f
        raise KeyError(name)


def relhyp_ball_decompose(rh: RelHypData, n: int, r: int,
                          R: Optional[int] = None,
                          space: Optional[FiniteMetricSpace] = None,
                          budget: Optional[Budget] = None
                          ) -> BallDecomposition:
    """Materialize and audit the relative-ball decomposition on a window.

    Checks, exhaustively on the window: the n-ball equals the union of
    peripheral pieces and letter translates; same-family pieces are
    disjoint with genuinely distinct cosets; and after removing
    Y_r (the union of B(n-1)*x over short x) the surviving pieces of
    each family are more than r apart in the plain word metric.
    """
    if n < 1:
        raise PreconditionError("ball index must be >= 1", n=n)
    if r < 0:
        raise PreconditionError("trim radius must be >= 0", r=r)
    if rh.rh_length is None:
        raise PreconditionError(
            "ball decomposition needs an exact relative length oracle")
    G = rh.group
    if R is None:
        R = 2 * n + r
    if space is None:
        space = cayley_window(G, R, budget)
    elems = space.meta.get("elements")
    depth = space.meta.get("depth")
    if elems is None or depth is None:
        raise PreconditionError("window does not carry group bookkeeping")
    index = {g: i for i, g in enumerate(elems)}
    rhl = [rh.rh_length(g) for g in elems]
    ball_sizes = tuple(sum(1 for v in rhl if v <= k) for k in range(n + 1))
    bn = frozenset(i for i in range(space.n) if rhl[i] <= n)

    letter = _letter_elements(G)
    letter_sets = []
    for s in G.letters:
        s_inv = G.invert(letter[s])
        members = frozenset(
            i for i in range(space.n)
            if rh.rh_length(G.combine(elems[i], s_inv)) <= n - 1)
        if not members <= bn:
            raise CertificateError(
                "letter translate of the smaller ball leaves the ball",
                letter=s)
        letter_sets.append(members)

    short = [i for i in range(space.n) if depth[i] <= r]
    y_members = set()
    for i in range(space.n):
        gi = elems[i]
        for j in short:
            if rh.rh_length(G.combine(gi, G.invert(elems[j]))) <= n - 1:
                y_members.add(i)
                break

    families = []
    covered = set()
    for p in rh.peripherals:
        cosets = {}
        for i, g in enumerate(elems):
            cosets.setdefault(p.strip(g), []).append(i)
        keys = [k for k in cosets if rh.rh_length(k) <= n - 1]
        for k in keys:
            if k not in index:
                norm = G.word_norm(k) if G.word_norm else None
                raise WindowTooSmallError(
                    "coset representative escapes the window",
                    subgroup=p.name, required_radius_at_least=norm)
        keys.sort(key=lambda k: (depth[index[k]], G.label(k)))
        pieces = [frozenset(cosets[k]) for k in keys]
        for a in range(len(keys)):
            inv_a = G.invert(keys[a])
            for b in range(a + 1, len(keys)):
                if p.contains(G.combine(inv_a, keys[b])):
                    raise CertificateError(
                        "two representatives name the same coset",
                        subgroup=p.name,
                        pair=(G.label(keys[a]), G.label(keys[b])))
        seen = set()
        for q in pieces:
            if q & seen:
                raise CertificateError(
                    "tagged coset pieces overlap", subgroup=p.name)
            seen |= q
            if not q <= bn:
                raise CertificateError(
                    "coset piece leaves the ball", subgroup=p.name)
        covered |= seen
        trimmed = [frozenset(q - y_members) for q in pieces]
        live = [PointSet(space, t) for t in trimmed if t]
        if len(pieces) >= 2 and len(live) < 2:
            deepest = max(depth[index[k]] for k in keys)
            raise WindowTooSmallError(
                "trimmed cosets vanish inside the removed region",
                subgroup=p.name,
                required_radius_at_least=deepest + n + r + 1)
        sep = family_separation(live)
        families.append(PeripheralFamily(
            name=p.name,
            reps=tuple(G.label(k) for k in keys),
            piece_sizes=tuple(len(q) for q in pieces),
            trimmed_sizes=tuple(len(t) for t in trimmed),
            separation=sep,
            passed=bool(sep > r)))

    union = covered.union(*letter_sets) if letter_sets else covered
    if union != bn:
        missing = bn - union
        extra = union - bn
        raise CertificateError(
            "ball decomposition does not reproduce the ball",
            missing=tuple(sorted(G.label(elems[i]) for i in missing)[:5]),
            extra=tuple(sorted(G.label(elems[i]) for i in extra)[:5]))

    return BallDecomposition(
        n=n, r=r, radius=space.meta.get("radius", R),
        ball_sizes=ball_sizes,
        letter_piece_sizes=tuple(len(s) for s in letter_sets),
        families=tuple(families),
        y_size=len(y_members),
        passed=all(f.passed for f in families))

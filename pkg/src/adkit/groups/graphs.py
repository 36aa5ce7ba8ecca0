"""Graph-of-groups structure on zoo groups: word strata, coset separation
audits, and Bass-Serre tree windows with the left-multiplication action.

Two schemas are supported, matching the classical one-edge cases:

  * amalgam A *_C B, driven by the alternating syllable normal form (free
    products have C = 1; the central double <x,y | x^p = y^q> has C = <x^p>)
  * HNN over Z, i.e. BS(1, m), whose tree is built from affine coset keys

Strata follow the word-path picture: K_j holds the window elements whose
normal form needs j edge crossings starting from the base vertex (side 0).
Every K_{j+1} element factors as (K_j element) * (vertex group element);
the factoring is re-multiplied and checked, never assumed. The affine HNN
engine does not expose Britton syllables, so strata and separation audits
are amalgam-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from ..cover import Cover, lebesgue_refutation, multiplicity
from ..errors import (CertificateError, PreconditionError,
                      WindowTooSmallError)
from ..metric import (FiniteMetricSpace, PointSet, family_separation,
                      tree_space_from_parents)
from ..transport import ActionWindow
from .models import (GroupModel, baumslag_solitar, central_double,
                     cyclic_group, free_product, integers)
from .windows import ball_map, ball_sizes, cayley_window


# ---------------------------------------------------------------------------
# schemas


@dataclass(frozen=True)
class AmalgamSchema:
    """Normal-form callbacks for A *_C B.

    Elements are the fundamental group's canonical forms; sides are 0 (the
    base vertex group A) and 1 (B). coset_key(g, side) is a perfect
    invariant of the coset g G_side, and coset_elem turns a key back into
    the canonical shortest coset member.
    """

    sides_of: Callable          # g -> tuple of syllable sides
    in_vertex: Callable         # (side, g) -> bool
    in_edge: Callable           # g -> bool, membership in the C image
    strip_last: Callable        # g -> (head, side, syllable element)
    coset_key: Callable         # (g, side) -> hashable
    coset_elem: Callable        # key -> element
    transversal: Callable       # (side, bound) -> tuple of elements
    complete: tuple             # per side: transversal covers every coset,
                                # i.e. the edge group has finite index there


@dataclass(frozen=True)
class HnnSchema:
    m: int
    coset_key: Callable         # g -> (k, u mod m^k)
    coset_elem: Callable
    neighbors: Callable         # g -> tuple of adjacent-coset elements


@dataclass(frozen=True)
class GraphOfGroups:
    kind: str                   # "amalgam" | "hnn"
    group: GroupModel
    label: str
    amalgam: Optional[AmalgamSchema] = None
    hnn: Optional[HnnSchema] = None

    def validate(self, R: int = 3) -> None:
        """Spot-check the schema against the group on a small ball: edge
        membership implies membership in both vertex groups, vertex
        membership matches the syllable picture, and transversal reps are
        pairwise in distinct C-cosets."""
        G = self.group
        if self.kind == "hnn":
            H = self.hnn
            a = G.step(G.identity, "a")
            t = G.step(G.identity, "t")
            lhs = G.combine(t, G.combine(a, G.invert(t)))
            rhs = G.identity
            for _ in range(H.m):
                rhs = G.combine(rhs, a)
            if lhs != rhs:
                raise CertificateError("stable letter does not conjugate "
                                       "a to a^m", m=H.m)
            return
        A = self.amalgam
        for g in ball_map(G, R):
            sides = A.sides_of(g)
            if A.in_edge(g):
                if not (A.in_vertex(0, g) and A.in_vertex(1, g)):
                    raise CertificateError(
                        "edge-group element missing from a vertex group",
                        element=G.label(g))
            for s in (0, 1):
                if A.in_vertex(s, g) != (len(sides) <= 1 and
                                         all(x == s for x in sides)):
                    raise CertificateError(
                        "vertex membership disagrees with syllables",
                        element=G.label(g), side=s)
        for s in (0, 1):
            reps = A.transversal(s, 2)
            for i, u in enumerate(reps):
                for v in reps[i + 1:]:
                    if A.in_edge(G.combine(G.invert(u), v)):
                        raise CertificateError(
                            "transversal contains one coset twice",
                            side=s, pair=(G.label(u), G.label(v)))


# ---------------------------------------------------------------------------
# factories


_FINITE_PROBE = 64


def _finite_diameter(F: GroupModel) -> Optional[int]:
    # saturation probe; None means "treat as infinite"
    sizes = ball_sizes(F, _FINITE_PROBE)
    for i in range(_FINITE_PROBE):
        if sizes[i] == sizes[i + 1]:
            return i
    return None


def _factor_elements(F: GroupModel, bound: int) -> tuple:
    depth = ball_map(F, bound)
    return tuple(sorted(depth, key=lambda v: (depth[v], F.label(v))))


def amalgam_gog(A: GroupModel, B: GroupModel,
                name: Optional[str] = None) -> GraphOfGroups:
    """Free product A * B as a graph of groups with trivial edge group."""
    G = free_product(A, B, name=name)
    factors = (A, B)
    diam = tuple(_finite_diameter(F) for F in factors)

    def sides_of(g):
        return tuple(s for s, _ in g)

    def in_vertex(side, g):
        return not g or (len(g) == 1 and g[0][0] == side)

    def in_edge(g):
        return g == ()

    def strip_last(g):
        side, v = g[-1]
        return g[:-1], side, ((side, v),)

    def coset_key(g, side):
        return g[:-1] if g and g[-1][0] == side else g

    def transversal(side, bound):
        F = factors[side]
        if diam[side] is not None:
            bound = diam[side]
        elif bound is None:
            raise PreconditionError(
                "vertex group is infinite; coset enumeration needs an "
                "explicit representative bound", side=side)
        return tuple(((side, v),) if v != F.identity else ()
                     for v in _factor_elements(F, bound))

    schema = AmalgamSchema(
        sides_of=sides_of, in_vertex=in_vertex, in_edge=in_edge,
        strip_last=strip_last, coset_key=coset_key,
        coset_elem=lambda key: key, transversal=transversal,
        complete=tuple(d is not None for d in diam))
    return GraphOfGroups("amalgam", G, name or G.name, amalgam=schema)


def trefoil_gog(p: int = 2, q: int = 3) -> GraphOfGroups:
    """<x, y | x^p = y^q> as Z *_Z Z; the edge group is the center <x^p>."""
    G = central_double(p, q)
    mods = (p, q)

    def sides_of(g):
        return tuple(s for s, _ in g[1])

    def in_vertex(side, g):
        syls = g[1]
        return not syls or (len(syls) == 1 and syls[0][0] == side)

    def in_edge(g):
        return g[1] == ()

    def strip_last(g):
        side, r = g[1][-1]
        # alternation means no carry happens, so dropping the tuple tail
        # is the exact left factor
        return (g[0], g[1][:-1]), side, (0, ((side, r),))

    def coset_key(g, side):
        syls = g[1]
        return syls[:-1] if syls and syls[-1][0] == side else syls

    def transversal(side, bound):
        return tuple((0, ()) if r == 0 else (0, ((side, r),))
                     for r in range(mods[side]))

    schema = AmalgamSchema(
        sides_of=sides_of, in_vertex=in_vertex, in_edge=in_edge,
        strip_last=strip_last, coset_key=coset_key,
        coset_elem=lambda key: (0, key), transversal=transversal,
        complete=(True, True))
    return GraphOfGroups("amalgam", G, f"trefoil({p},{q})", amalgam=schema)


def hnn_gog(m: int) -> GraphOfGroups:
    """BS(1, m) as an HNN extension of Z over Z; tree vertices are the
    cosets g<a> keyed by (t-exponent, translation part mod m^k)."""
    G = baumslag_solitar(m)
    base = Fraction(m)
    t_up = [(Fraction(i), 1) for i in range(m)]     # a^i t
    t_down = (Fraction(0), -1)                       # t^-1

    def coset_key(g):
        u, k = g
        mk = base ** k
        return (k, u - mk * math.floor(u / mk))

    def neighbors(g):
        out = [G.combine(g, w) for w in t_up]
        out.append(G.combine(g, t_down))
        return tuple(out)

    schema = HnnSchema(m=m, coset_key=coset_key,
                       coset_elem=lambda key: (key[1], key[0]),
                       neighbors=neighbors)
    return GraphOfGroups("hnn", G, f"bs:1,{m}", hnn=schema)


def gog_by_name(spec: str) -> GraphOfGroups:
    """Graph-of-groups registry mirroring the zoo's group names."""
    kind, _, arg = spec.partition(":")
    if kind == "amalgam":
        left, _, right = arg.partition("*")
        return amalgam_gog(_vertex_group(left), _vertex_group(right),
                           name=spec)
    if kind == "trefoil":
        return trefoil_gog()
    if kind == "bs":
        one, _, m = arg.partition(",")
        if one != "1":
            raise PreconditionError("only ascending HNN over Z is modeled",
                                    spec=spec)
        return hnn_gog(int(m))
    raise PreconditionError("no graph-of-groups structure for this name",
                            spec=spec)


def _vertex_group(tag: str) -> GroupModel:
    if tag == "z":
        return integers((1,))
    if tag.startswith("z") and tag[1:].isdigit():
        return cyclic_group(int(tag[1:]))
    raise PreconditionError("unknown vertex group", tag=tag)


# ---------------------------------------------------------------------------
# word strata


def _amalgam_schema(gog: GraphOfGroups) -> AmalgamSchema:
    if gog.kind != "amalgam" or gog.amalgam is None:
        raise PreconditionError(
            "strata need the alternating normal form; the affine HNN "
            "engine does not expose Britton syllables", kind=gog.kind)
    return gog.amalgam


def _window_elements(space: FiniteMetricSpace) -> tuple:
    elems = space.meta.get("elements")
    if elems is None:
        raise PreconditionError(
            "window must come from cayley_window; canonical elements "
            "are missing from its metadata")
    return elems


def path_length(gog: GraphOfGroups, g) -> int:
    """Edge crossings needed to spell g starting from the base vertex:
    0 for base vertex group elements, and each syllable after the first
    base-side one costs a crossing."""
    sides = _amalgam_schema(gog).sides_of(g)
    if not sides:
        return 0
    return len(sides) - (1 if sides[0] == 0 else 0)


@dataclass(frozen=True)
class Stratification:
    space: FiniteMetricSpace
    strata: tuple               # PointSet for j = 0 .. j_max
    factored: int               # elements that passed the factoring audit

    def sizes(self) -> tuple:
        return tuple(len(s.members) for s in self.strata)


def stratify_words(gog: GraphOfGroups, space: FiniteMetricSpace,
                   j_max: int) -> Stratification:
    """Partition a Cayley window by path length, with a factoring audit.

    Every stratum-(j+1) element must refactor, after stripping its last
    syllable, as head * syllable with the head exactly one stratum down;
    a failure is a normal-form bug and raises CertificateError.
    """
    A = _amalgam_schema(gog)
    if j_max < 0:
        raise PreconditionError("j_max must be >= 0", j_max=j_max)
    elems = _window_elements(space)
    pl = [path_length(gog, g) for g in elems]
    deepest = max(pl)
    if deepest > j_max:
        raise PreconditionError(
            "window reaches deeper strata than j_max",
            j_max=j_max, required=deepest)
    buckets = [[] for _ in range(j_max + 1)]
    for i, j in enumerate(pl):
        buckets[j].append(i)

    G = gog.group
    checked = 0
    for i, g in enumerate(elems):
        if pl[i] == 0:
            continue
        head, side, syl = A.strip_last(g)
        if G.combine(head, syl) != g:
            raise CertificateError(
                "stripping the last syllable does not refactor the element",
                element=space.labels[i])
        if not A.in_vertex(side, syl):
            raise CertificateError(
                "stripped syllable is not a vertex group element",
                element=space.labels[i], side=side)
        got = path_length(gog, head)
        if got != pl[i] - 1:
            raise CertificateError(
                "factored head lands in the wrong stratum",
                element=space.labels[i], expected=pl[i] - 1, got=got)
        checked += 1
    strata = tuple(PointSet(space, frozenset(b)) for b in buckets)
    return Stratification(space, strata, checked)


# ---------------------------------------------------------------------------
# coset separation audit


@dataclass(frozen=True)
class SeparationReport:
    j: int
    side: int
    r: int
    reps: tuple                 # labels of the chosen coset representatives
    piece_sizes: tuple
    trimmed_sizes: tuple
    separation: object          # integer, or math.inf when < 2 pieces remain
    distinct_pairs: int
    same_coset_pairs: int
    passed: bool
    vacuous: bool = False       # finite edge-group index absorbed every coset


def separation_audit(gog: GraphOfGroups, space: FiniteMetricSpace,
                     j: int, side: int, r: int):
    """Check the r-disjointness of the stratum-(j+1) coset family.

    The family is {x G_side} over stratum-j words x not ending in a
    G_side syllable. Y_r collects, per coset, the points within r of the
    translated edge-group image; the trimmed pieces must then be more
    than r apart. Distinct representatives are also checked to differ by
    no edge-group element (same-coset duplicates must, conversely, be
    edge-equivalent).
    """
    A = _amalgam_schema(gog)
    if r < 0:
        raise PreconditionError("r must be >= 0", r=r)
    expected = (j + 1) % 2
    if side != expected:
        raise PreconditionError(
            "stratum j feeds cosets of the opposite-parity vertex group",
            j=j, side=side, expected=expected)
    elems = _window_elements(space)
    G = gog.group
    pl = [path_length(gog, g) for g in elems]

    pieces = {}
    for i, g in enumerate(elems):
        if pl[i] not in (j, j + 1):
            continue
        key = A.coset_key(g, side)
        if path_length(gog, A.coset_elem(key)) != j:
            continue
        pieces.setdefault(key, []).append(i)

    if not pieces:
        raise WindowTooSmallError(
            "window contains no stratum-j coset at all", j=j,
            radius=space.meta.get("radius"))

    depth = space.meta["depth"]
    order = sorted(pieces, key=lambda k: min(
        (depth[i], space.labels[i]) for i in pieces[k]))
    reps = []
    for key in order:
        members = pieces[key]
        x = min((i for i in members if pl[i] == j),
                key=lambda i: (depth[i], space.labels[i]))
        reps.append(x)

    # coset identity criterion, both directions
    distinct_pairs = 0
    same_pairs = 0
    for a in range(len(reps)):
        xa_inv = G.invert(elems[reps[a]])
        for b in range(a + 1, len(reps)):
            if A.in_edge(G.combine(xa_inv, elems[reps[b]])):
                raise CertificateError(
                    "two representatives with distinct keys are "
                    "edge-equivalent", pair=(space.labels[reps[a]],
                                             space.labels[reps[b]]))
            distinct_pairs += 1
    for key, members in pieces.items():
        level = [i for i in members if pl[i] == j]
        x_inv = G.invert(elems[level[0]])
        for i in level[1:]:
            if not A.in_edge(G.combine(x_inv, elems[i])):
                raise CertificateError(
                    "same-coset words are not edge-equivalent",
                    pair=(space.labels[level[0]], space.labels[i]))
            same_pairs += 1

    mat = space.int_matrix
    trimmed = []
    removed = set()
    piece_sizes = []
    trimmed_sizes = []
    for key, x in zip(order, reps):
        members = pieces[key]
        x_inv = G.invert(elems[x])
        core = [i for i in members
                if A.in_edge(G.combine(x_inv, elems[i]))]
        rows = mat[np.ix_(members, core)]
        near = [m for m, row in zip(members, rows) if row.min() <= r]
        keep = frozenset(members) - frozenset(near)
        removed.update(near)
        piece_sizes.append(len(members))
        trimmed_sizes.append(len(keep))
        if keep:
            trimmed.append(PointSet(space, keep))

    vacuous = False
    if len(pieces) >= 2 and len(trimmed) < 2:
        if A.complete[side] and not trimmed:
            # finite edge-group index: the whole vertex group lies within
            # bounded distance of the C image, so for large enough r the
            # neighborhood legitimately swallows every coset and the
            # r-disjointness claim is about an empty family
            vacuous = True
        else:
            need = max(depth[x] for x in reps) + r + 1
            raise WindowTooSmallError(
                "trimming at this r empties the cosets; widen the window",
                r=r, required_radius_at_least=need)

    sep = family_separation(trimmed) if trimmed else math.inf
    report = SeparationReport(
        j=j, side=side, r=r,
        reps=tuple(space.labels[x] for x in reps),
        piece_sizes=tuple(piece_sizes),
        trimmed_sizes=tuple(trimmed_sizes),
        separation=sep,
        distinct_pairs=distinct_pairs,
        same_coset_pairs=same_pairs,
        passed=bool(sep > r),
        vacuous=vacuous)
    return PointSet(space, frozenset(removed)), report


# ---------------------------------------------------------------------------
# Bass-Serre tree windows and the left-multiplication action


@dataclass(frozen=True)
class GroupAction:
    """A group window acting on a finite space by isometries.

    apply takes a canonical element and a point index and returns the
    image index, or None when the image leaves the space. realize() packs
    the action into the index-level form the transport layer consumes.
    """

    group: GroupModel
    group_space: FiniteMetricSpace
    elements: tuple
    space: FiniteMetricSpace
    basepoint: int
    apply: Callable
    mu: int

    def element_index(self, g) -> Optional[int]:
        return self._index.get(g)

    @property
    def _index(self):
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {g: i for i, g in enumerate(self.elements)}
            self.__dict__["_index_cache"] = idx
        return idx

    def realize(self, interior: Optional[PointSet] = None) -> ActionWindow:
        orbit = []
        for g in self.elements:
            p = self.apply(g, self.basepoint)
            if p is None:
                raise WindowTooSmallError(
                    "orbit of the basepoint leaves the target window",
                    element=self.group.label(g))
            orbit.append(p)
        index = self._index
        combine = self.group.combine
        elements = self.elements

        def mul(i, j):
            return index.get(combine(elements[i], elements[j]))

        return ActionWindow(
            group_space=self.group_space,
            identity=self.group_space.basepoint,
            radius=self.group_space.meta["radius"], target=self.space,
            orbit_map=tuple(orbit), mul=mul, mu=self.mu, interior=interior)


def make_action(group: GroupModel, group_space: FiniteMetricSpace,
                space: FiniteMetricSpace, basepoint: int,
                apply: Callable, sample: int = 64) -> GroupAction:
    """Audited action constructor.

    Checks, for every window element: the identity acts trivially, the
    action is isometric on its defined pairs, and composition with each
    generator commutes with apply on a deterministic point sample. mu is
    measured as the largest basepoint displacement of a generator.
    """
    elements = _window_elements(group_space)
    if group_space.meta.get("group") != group.name:
        raise PreconditionError("group window was built for another group",
                                expected=group.name,
                                got=group_space.meta.get("group"))
    n = space.n
    pts = np.arange(n)
    tm = space.int_matrix
    for x in range(n):
        if apply(group.identity, x) != x:
            raise PreconditionError("identity must act trivially", point=x)

    images = {}
    for g in elements:
        img = np.array([-1 if (y := apply(g, x)) is None else y
                        for x in range(n)], dtype=np.intp)
        images[g] = img
        mask = img >= 0
        src = pts[mask]
        dst = img[mask]
        if len(set(dst.tolist())) != len(dst):
            raise PreconditionError("action identifies two points",
                                    element=group.label(g))
        if not np.array_equal(tm[np.ix_(src, src)], tm[np.ix_(dst, dst)]):
            raise PreconditionError(
                "action fails the isometry audit", element=group.label(g))

    probe = [x for x in range(0, n, max(1, n // sample))][:sample]
    letter_elems = [group.step(group.identity, s) for s in group.letters]
    eset = set(elements)
    for g in elements:
        for le in letter_elems:
            h = group.combine(g, le)
            if h not in eset:
                continue
            for x in probe:
                inner = apply(le, x)
                if inner is None:
                    continue
                via = apply(g, inner)
                direct = apply(h, x)
                if via is not None and direct != via:
                    raise PreconditionError(
                        "action is not compatible with group "
                        "multiplication", element=group.label(h), point=x)

    mu = 0
    for le in letter_elems:
        p = apply(le, basepoint)
        if p is None:
            raise WindowTooSmallError(
                "a generator already moves the basepoint out of the "
                "target window")
        mu = max(mu, int(tm[p, basepoint]))
    return GroupAction(group=group, group_space=group_space,
                       elements=elements, space=space, basepoint=basepoint,
                       apply=apply, mu=mu)


def bass_serre_tree_window(gog: GraphOfGroups, depth: int,
                           rep_bound: Optional[int] = None,
                           group_radius: Optional[int] = None):
    """Tree ball of coset vertices plus the left-multiplication action.

    The tree is grown by breadth-first coset enumeration to the given
    depth and audited on the way: re-meeting a visited vertex through a
    new edge is a cycle and a hard error; for amalgams the two vertex
    types must strictly alternate; on fully enumerated sides, interior
    degrees must equal the edge-group index.
    """
    if depth < 1:
        raise PreconditionError("depth must be >= 1", depth=depth)
    G = gog.group

    if gog.kind == "amalgam":
        A = gog.amalgam
        root = (0, A.coset_key(G.identity, 0))

        def expand(node):
            side, key = node
            base = A.coset_elem(key)
            other = 1 - side
            out = []
            for t in A.transversal(side, rep_bound):
                h = G.combine(base, t)
                out.append((other, A.coset_key(h, other)))
            return out

        def vertex_label(node):
            side, key = node
            return f"{'AB'[side]}:{G.label(A.coset_elem(key))}"

        expected_degree = [
            len(A.transversal(s, rep_bound)) if A.complete[s] else None
            for s in (0, 1)]
    else:
        H = gog.hnn
        root = (0, H.coset_key(G.identity))

        def expand(node):
            _, key = node
            base = H.coset_elem(key)
            return [(0, H.coset_key(h)) for h in H.neighbors(base)]

        def vertex_label(node):
            _, (k, u) = node
            return f"v:{k}|{u}"

        expected_degree = [H.m + 1, H.m + 1]

    level = {root: 0}
    parent = {root: None}
    children = {root: 0}
    queue = [root]
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        d = level[v]
        if d == depth:
            continue
        seen_here = set()
        for w in expand(v):
            if w == v:
                raise CertificateError("coset adjacency has a loop",
                                       vertex=vertex_label(v))
            if w in seen_here:
                raise CertificateError(
                    "transversal produced one neighbor twice",
                    vertex=vertex_label(v))
            seen_here.add(w)
            if w in level:
                if w != parent[v]:
                    raise CertificateError(
                        "coset incidence is not acyclic",
                        vertex=vertex_label(w))
                continue
            level[w] = d + 1
            parent[w] = v
            children[w] = 0
            children[v] += 1
            queue.append(w)

    if gog.kind == "amalgam":
        for v, d in level.items():
            if (d % 2 == 0) != (v[0] == 0):
                raise CertificateError("tree is not bipartite by side",
                                       vertex=vertex_label(v))
        if depth >= 1 and not any(v[0] == 1 for v in level):
            raise CertificateError("quotient misses the second vertex type")
    degree_checked = 0
    for v, d in level.items():
        if d >= depth:
            continue
        want = expected_degree[v[0]]
        if want is None:
            continue
        got = children[v] + (0 if v == root else 1)
        if got != want:
            raise CertificateError(
                "interior vertex degree differs from the edge-group index",
                vertex=vertex_label(v), expected=want, got=got)
        degree_checked += 1

    nodes = sorted(level, key=lambda v: (level[v], vertex_label(v)))
    vindex = {v: i for i, v in enumerate(nodes)}
    parents = [vindex[parent[v]] if parent[v] is not None else -1
               for v in nodes]
    labels = tuple(vertex_label(v) for v in nodes)
    plain = tree_space_from_parents(parents)
    meta = {
        "gog": gog.label,
        "depth": depth,
        "rep_bound": rep_bound,
        "degree_checked": degree_checked,
        "vertex_depth": tuple(level[v] for v in nodes),
        "sides": tuple(v[0] for v in nodes),
        "parents": tuple(parents),
    }
    tree = FiniteMetricSpace(plain.int_matrix, labels=labels,
                             basepoint=vindex[root], meta=meta,
                             validate=False)

    if gog.kind == "amalgam":
        def apply(g, vidx):
            side, key = nodes[vidx]
            moved = G.combine(g, A.coset_elem(key))
            return vindex.get((side, A.coset_key(moved, side)))
    else:
        def apply(g, vidx):
            _, key = nodes[vidx]
            moved = G.combine(g, H.coset_elem(key))
            return vindex.get((0, H.coset_key(moved)))

    gr = group_radius if group_radius is not None else max(1, depth // 2)
    gspace = cayley_window(G, gr)
    action = make_action(G, gspace, tree, vindex[root], apply)
    return tree, action


def one_type_action(tree: FiniteMetricSpace, act: GroupAction,
                    side: int = 0) -> GroupAction:
    """Restrict an amalgam tree action to one vertex type, halving the metric.

    Edges alternate vertex types, so distances between same-type vertices
    are even and every generator moves such a vertex an even distance.
    Halving the restricted metric keeps it an integer metric and makes the
    generators 1-Lipschitz, which doubles what a given group window can
    afford in the transport margins.
    """
    sides = tree.meta.get("sides")
    parents = tree.meta.get("parents")
    depths = tree.meta.get("vertex_depth")
    if sides is None or parents is None or depths is None:
        raise PreconditionError(
            "space does not carry coset tree bookkeeping")
    if sides[tree.basepoint] != side:
        raise PreconditionError("basepoint is not of the requested type",
                                side=side)
    keep = [i for i in range(tree.n) if sides[i] == side]
    sub = tree.int_matrix[np.ix_(keep, keep)]
    if (sub % 2).any():
        raise PreconditionError(
            "same-type distances are not all even; the tree does not "
            "alternate types", side=side)
    half_index = {v: j for j, v in enumerate(keep)}

    def up(i):
        p = parents[i]
        return parents[p] if p >= 0 else -1

    meta = {
        "collapsed": tree.meta.get("gog"),
        "side": side,
        "level": tuple(depths[i] // 2 for i in keep),
        "up": tuple(half_index[up(i)] if up(i) >= 0 else -1 for i in keep),
    }
    space = FiniteMetricSpace(sub // 2,
                              labels=tuple(tree.labels[i] for i in keep),
                              basepoint=half_index[tree.basepoint],
                              meta=meta, validate=False)

    def apply(g, j):
        hit = act.apply(g, keep[j])
        return None if hit is None else half_index.get(hit)

    return make_action(act.group, act.group_space, space,
                       space.basepoint, apply)


def level_band_cover(space: FiniteMetricSpace, ell: int,
                     window: Optional[PointSet] = None) -> Cover:
    """Cover a collapsed tree window by overlapping ancestor bands.

    Band j holds the vertices whose level lies in [ell*j, ell*j+2*ell-1],
    split by their ancestor at level ell*j. Consecutive bands overlap by
    ell levels, so each point sits in at most two pieces while any set of
    diameter <= ell lands inside one piece. Both facts are measured on
    the result, not trusted.
    """
    if ell < 1:
        raise PreconditionError("band width must be positive", ell=ell)
    levels = space.meta.get("level")
    up = space.meta.get("up")
    if levels is None or up is None:
        raise PreconditionError("space does not carry level bookkeeping")
    win = window if window is not None else space.full_set()

    def ancestor(i, lvl):
        while levels[i] > lvl:
            i = up[i]
            if i < 0:
                raise CertificateError("level bookkeeping is inconsistent")
        return i

    pieces = {}
    for i in sorted(win.members):
        d = levels[i]
        j_lo = max(0, -((2 * ell - 1 - d) // ell))
        for j in range(j_lo, d // ell + 1):
            key = (j, ancestor(i, ell * j))
            pieces.setdefault(key, set()).add(i)
    cov = Cover.from_lists(space, [pieces[k] for k in sorted(pieces)], win)
    cov.check_covers()
    m = multiplicity(cov)
    if m > 2:
        raise CertificateError("band pieces overlap more than twice",
                               multiplicity=m)
    bad = lebesgue_refutation(cov, ell)
    if bad is not None:
        raise CertificateError(
            "a small-diameter subset escapes every band piece",
            witness=tuple(sorted(bad.members)), required=ell)
    return cov

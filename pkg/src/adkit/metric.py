"""Exact finite metric spaces and the point-set primitives built on them.

Integer distance matrices (every graph metric) ride a vectorized numpy path;
anything rational falls back to Fraction rows. No floats enter the metric
layer: math.inf appears only as the separation sentinel for families with
fewer than two nonempty members.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptySetError, NonIntegerMetricError, PreconditionError

Rational = int | Fraction

# Full O(n^3) triangle validation is cheap below this size; above it we
# sample triples so huge Cayley windows stay constructible.
_FULL_VALIDATE_LIMIT = 600
_SAMPLED_TRIPLES = 20000


class FiniteMetricSpace:
    """Points 0..n-1 with an exact symmetric metric.

    labels are optional per-point opaque tags (group normal forms, grid
    coordinates); basepoint is an optional distinguished index; meta is a
    free-form dict recording provenance such as a subspace's parent indices.
    """

    def __init__(self, dist, labels=None, basepoint: Optional[int] = None,
                 meta: Optional[dict] = None, validate: bool = True):
        mat, rows = _normalize_matrix(dist)
        self._mat = mat            # numpy int matrix, or None
        self._rows = rows          # tuple of Fraction tuples, or None
        self.n = mat.shape[0] if mat is not None else len(rows)
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.n:
            raise PreconditionError("labels length must match point count",
                                    expected=self.n, got=len(self.labels))
        if basepoint is not None and not (0 <= basepoint < self.n):
            raise PreconditionError("basepoint out of range", basepoint=basepoint)
        self.basepoint = basepoint
        self.meta = dict(meta) if meta else {}
        if validate:
            self.validate()

    @property
    def is_integer(self) -> bool:
        return self._mat is not None

    @property
    def int_matrix(self) -> np.ndarray:
        if self._mat is None:
            raise NonIntegerMetricError(
                "this operation needs an integer metric")
        return self._mat

    def d(self, i: int, j: int) -> Rational:
        if self._mat is not None:
            return int(self._mat[i, j])
        return self._rows[i][j]

    def points(self) -> range:
        return range(self.n)

    def full_set(self) -> "PointSet":
        return PointSet(self, frozenset(range(self.n)))

    def point_set(self, members: Iterable[int]) -> "PointSet":
        return PointSet(self, frozenset(members))

    def label_of(self, i: int):
        return self.labels[i] if self.labels is not None else i

    def validate(self, full: Optional[bool] = None) -> None:
        """Check the metric axioms; raises on the first violation found.

        Triangle inequality is verified exhaustively up to a size cutoff and
        on random triples beyond it (constructors that build metrics from
        graphs are correct by construction, so sampling is a safety net, not
        the proof).
        """
        n = self.n
        if self._mat is not None:
            m = self._mat
            if m.shape != (n, n):
                raise PreconditionError("distance matrix must be square", shape=m.shape)
            if np.any(np.diagonal(m) != 0):
                i = int(np.nonzero(np.diagonal(m))[0][0])
                raise PreconditionError("nonzero diagonal entry", point=i)
            if np.any(m < 0):
                raise PreconditionError("negative distance present")
            if np.any(m != m.T):
                i, j = map(int, np.argwhere(m != m.T)[0])
                raise PreconditionError("matrix not symmetric", pair=(i, j))
            do_full = full if full is not None else n <= _FULL_VALIDATE_LIMIT
            if do_full:
                wide = m.astype(np.int64)
                for k in range(n):
                    slack = wide[:, k, None] + wide[None, k, :]
                    if np.any(wide > slack):
                        i, j = map(int, np.argwhere(wide > slack)[0])
                        raise PreconditionError("triangle inequality fails",
                                                triple=(i, k, j))
            else:
                rng = random.Random(0)
                for _ in range(_SAMPLED_TRIPLES):
                    i, j, k = (rng.randrange(n) for _ in range(3))
                    if self.d(i, j) > self.d(i, k) + self.d(k, j):
                        raise PreconditionError("triangle inequality fails",
                                                triple=(i, k, j))
        else:
            rows = self._rows
            for i in range(n):
                if len(rows[i]) != n:
                    raise PreconditionError("distance matrix must be square", row=i)
                if rows[i][i] != 0:
                    raise PreconditionError("nonzero diagonal entry", point=i)
                for j in range(i):
                    if rows[i][j] != rows[j][i]:
                        raise PreconditionError("matrix not symmetric", pair=(i, j))
                    if rows[i][j] < 0:
                        raise PreconditionError("negative distance present", pair=(i, j))
            for i in range(n):
                for j in range(n):
                    dij = rows[i][j]
                    for k in range(n):
                        if dij > rows[i][k] + rows[k][j]:
                            raise PreconditionError("triangle inequality fails",
                                                    triple=(i, k, j))

    def __repr__(self):
        kind = "int" if self.is_integer else "frac"
        return f"FiniteMetricSpace(n={self.n}, {kind})"


def _normalize_matrix(dist):
    """Return (numpy_int_matrix, None) or (None, fraction_rows)."""
    if isinstance(dist, np.ndarray):
        if not np.issubdtype(dist.dtype, np.integer):
            raise PreconditionError(
                "numpy matrices must be integer dtype; use Fractions otherwise",
                dtype=str(dist.dtype))
        m = np.ascontiguousarray(dist, dtype=np.int32 if dist.max(initial=0) < 2**31 else np.int64)
        m.setflags(write=False)
        return m, None
    rows = [tuple(r) for r in dist]
    if all(isinstance(v, int) and not isinstance(v, bool) for r in rows for v in r):
        m = np.array(rows, dtype=np.int64)
        m.setflags(write=False)
        return m, None
    frac_rows = tuple(tuple(Fraction(v) for v in r) for r in rows)
    return None, frac_rows


@dataclass(frozen=True)
class PointSet:
    """A subset of a space's point indices. Immutable and hashable."""

    space: FiniteMetricSpace
    members: frozenset

    def __post_init__(self):
        if not isinstance(self.members, frozenset):
            object.__setattr__(self, "members", frozenset(self.members))
        bad = [p for p in self.members if not (0 <= p < self.space.n)]
        if bad:
            raise PreconditionError("point index out of range", witness=min(bad))

    def __len__(self):
        return len(self.members)

    def __contains__(self, p):
        return p in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def as_sorted(self) -> tuple:
        return tuple(sorted(self.members))

    def complement(self) -> "PointSet":
        return PointSet(self.space, frozenset(range(self.space.n)) - self.members)

    def union(self, other: "PointSet") -> "PointSet":
        _same_space(self, other)
        return PointSet(self.space, self.members | other.members)

    def intersection(self, other: "PointSet") -> "PointSet":
        _same_space(self, other)
        return PointSet(self.space, self.members & other.members)


def _same_space(a: PointSet, b: PointSet):
    if a.space is not b.space:
        raise PreconditionError("point sets live in different spaces")


@dataclass(frozen=True)
class QuasiIsometryData:
    """A point map with distortion constants and an optional quasi-inverse.

    mapping[i] is the target index of source point i; alpha >= 1 bounds the
    multiplicative distortion, epsilon >= 0 the additive one, and C the
    coarse-surjectivity net radius (also the round-trip displacement bound
    when a quasi-inverse is supplied).
    """

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    mapping: tuple
    alpha: Fraction
    epsilon: Fraction
    C: Fraction
    quasi_inverse: Optional["QuasiIsometryData"] = None

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(self.mapping))
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(self, "C", Fraction(self.C))
        if len(self.mapping) != self.source.n:
            raise PreconditionError("mapping must be total on source points",
                                    expected=self.source.n, got=len(self.mapping))
        if any(not (0 <= t < self.target.n) for t in self.mapping):
            raise PreconditionError("mapping hits an out-of-range target index")
        if self.alpha < 1:
            raise PreconditionError("alpha must be >= 1", alpha=self.alpha)
        if self.epsilon < 0 or self.C < 0:
            raise PreconditionError("epsilon and C must be >= 0")

    def apply(self, i: int) -> int:
        return self.mapping[i]


@dataclass(frozen=True)
class QIReport:
    valid: bool
    distortion_violations: tuple
    surjectivity_violations: tuple
    inverse_violations: tuple
    pairs_checked: int


# ---------------------------------------------------------------------------
# operations


def diam(A: PointSet) -> Rational:
    """Max pairwise distance; 0 for singletons; error on the empty set."""
    pts = A.as_sorted()
    if not pts:
        raise EmptySetError("diameter of the empty set is undefined")
    if len(pts) == 1:
        return 0
    sp = A.space
    if sp.is_integer:
        idx = np.fromiter(pts, dtype=np.intp)
        return int(sp.int_matrix[np.ix_(idx, idx)].max())
    return max(sp.d(x, y) for i, x in enumerate(pts) for y in pts[i + 1:])


def outer_neighborhood(A: PointSet, k: Rational) -> PointSet:
    """{x : dist(x, A) <= k}. Contains A; empty A gives the empty set."""
    _check_radius(k)
    sp = A.space
    if not A.members:
        return PointSet(sp, frozenset())
    if sp.is_integer:
        # integer metric: d <= k is d <= floor(k) for rational k
        thr = _floor_rational(k)
        idx = np.fromiter(A.as_sorted(), dtype=np.intp)
        near = sp.int_matrix[:, idx].min(axis=1) <= thr
        return PointSet(sp, frozenset(np.nonzero(near)[0].tolist()))
    members = set()
    for x in range(sp.n):
        if any(sp.d(x, a) <= k for a in A.members):
            members.add(x)
    return PointSet(sp, frozenset(members))


def inner_neighborhood(A: PointSet, k: Rational) -> PointSet:
    """{y in A : B_k(y) subset of A}; equals X minus N_k(X minus A)."""
    _check_radius(k)
    sp = A.space
    comp = frozenset(range(sp.n)) - A.members
    if not comp:
        return A
    if not A.members:
        return A
    if sp.is_integer:
        thr = _floor_rational(k)
        cidx = np.fromiter(sorted(comp), dtype=np.intp)
        aidx = np.fromiter(A.as_sorted(), dtype=np.intp)
        safe = sp.int_matrix[np.ix_(aidx, cidx)].min(axis=1) > thr
        return PointSet(sp, frozenset(aidx[safe].tolist()))
    members = {y for y in A.members if all(sp.d(y, x) > k for x in comp)}
    return PointSet(sp, frozenset(members))


def set_distance(A: PointSet, B: PointSet) -> Rational | float:
    """Min pairwise distance between two sets; inf if either is empty."""
    _same_space(A, B)
    if not A.members or not B.members:
        return math.inf
    sp = A.space
    if sp.is_integer:
        ai = np.fromiter(A.as_sorted(), dtype=np.intp)
        bi = np.fromiter(B.as_sorted(), dtype=np.intp)
        return int(sp.int_matrix[np.ix_(ai, bi)].min())
    return min(sp.d(a, b) for a in A.members for b in B.members)


def family_separation(family: Sequence[PointSet]) -> Rational | float:
    """Min set-distance over distinct nonempty pairs; inf when fewer than
    two members are nonempty."""
    nonempty = [s for s in family if s.members]
    for s in nonempty[1:]:
        _same_space(nonempty[0], s)
    if len(nonempty) < 2:
        return math.inf
    best = math.inf
    for i in range(len(nonempty)):
        for j in range(i + 1, len(nonempty)):
            d = set_distance(nonempty[i], nonempty[j])
            if d < best:
                best = d
    return best


def check_quasi_isometry(q: QuasiIsometryData) -> QIReport:
    """Exhaustively verify the distortion, net and round-trip conditions.

    Returns a report rather than raising: callers decide whether an invalid
    map is an error. Violation lists are complete, not truncated.
    """
    src, tgt = q.source, q.target
    alpha, eps, C = q.alpha, q.epsilon, q.C
    distortion = []
    pairs = 0
    for x in range(src.n):
        fx = q.mapping[x]
        for y in range(x + 1, src.n):
            pairs += 1
            ds = src.d(x, y)
            dt = tgt.d(fx, q.mapping[y])
            # lower QI bound rearranged to avoid division: d_s <= a*d_t + a*e
            if dt > alpha * ds + eps or ds > alpha * dt + alpha * eps:
                distortion.append((x, y, ds, dt))
    image = set(q.mapping)
    surjectivity = []
    for t in range(tgt.n):
        if all(tgt.d(t, im) > C for im in image):
            surjectivity.append(t)
    inverse = []
    if q.quasi_inverse is not None:
        inv = q.quasi_inverse
        if inv.source is not tgt or inv.target is not src:
            raise PreconditionError("quasi-inverse must map target back to source")
        for y in range(tgt.n):
            if tgt.d(q.mapping[inv.mapping[y]], y) > C:
                inverse.append(("target-roundtrip", y))
        for x in range(src.n):
            if src.d(inv.mapping[q.mapping[x]], x) > C:
                inverse.append(("source-roundtrip", x))
    valid = not distortion and not surjectivity and not inverse
    return QIReport(valid, tuple(distortion), tuple(surjectivity),
                    tuple(inverse), pairs)


def subspace(X: FiniteMetricSpace, S: PointSet) -> FiniteMetricSpace:
    """Restriction of the ambient metric to S (never intrinsic recomputation).

    meta['parent_index'] maps new indices to old; labels and basepoint carry
    over where applicable.
    """
    if S.space is not X:
        raise PreconditionError("S must be a subset of X's points")
    pts = S.as_sorted()
    if not pts:
        raise PreconditionError("cannot take the subspace on an empty set")
    labels = [X.label_of(p) for p in pts] if X.labels is not None else None
    base = pts.index(X.basepoint) if X.basepoint in S.members else None
    meta = {"parent_index": pts}
    if X.is_integer:
        idx = np.fromiter(pts, dtype=np.intp)
        sub = X.int_matrix[np.ix_(idx, idx)].copy()
        return FiniteMetricSpace(sub, labels=labels, basepoint=base,
                                 meta=meta, validate=False)
    rows = [[X.d(a, b) for b in pts] for a in pts]
    return FiniteMetricSpace(rows, labels=labels, basepoint=base,
                             meta=meta, validate=False)


def ball(X: FiniteMetricSpace, center: int, r: Rational) -> PointSet:
    """Closed ball around a point index."""
    _check_radius(r)
    if X.is_integer:
        thr = _floor_rational(r)
        near = X.int_matrix[center] <= thr
        return PointSet(X, frozenset(np.nonzero(near)[0].tolist()))
    return PointSet(X, frozenset(p for p in range(X.n) if X.d(center, p) <= r))


def _check_radius(k):
    if k < 0:
        raise PreconditionError("radius must be >= 0", k=k)


def _floor_rational(k) -> int:
    if isinstance(k, int):
        return k
    return math.floor(k)


# ---------------------------------------------------------------------------
# builders


def path_space(n: int) -> FiniteMetricSpace:
    """Path graph metric on 0..n-1: d(i,j) = |i-j|."""
    if n < 1:
        raise PreconditionError("need at least one point", n=n)
    idx = np.arange(n)
    return FiniteMetricSpace(np.abs(idx[:, None] - idx[None, :]), validate=False)


def cycle_space(n: int) -> FiniteMetricSpace:
    """Cycle graph metric: d(i,j) = min(|i-j|, n-|i-j|)."""
    if n < 1:
        raise PreconditionError("need at least one point", n=n)
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    return FiniteMetricSpace(np.minimum(gap, n - gap), validate=False)


def grid_space(width: int, height: int) -> FiniteMetricSpace:
    """Grid graph metric on width x height points; labels are (row, col),
    index = row*width + col."""
    if width < 1 or height < 1:
        raise PreconditionError("grid needs positive dimensions")
    rows = np.arange(height * width) // width
    cols = np.arange(height * width) % width
    m = (np.abs(rows[:, None] - rows[None, :])
         + np.abs(cols[:, None] - cols[None, :]))
    labels = [(int(r), int(c)) for r, c in zip(rows, cols)]
    return FiniteMetricSpace(m, labels=labels, validate=False)


def space_from_graph(n: int, edges: Iterable[tuple], labels=None) -> FiniteMetricSpace:
    """Shortest-path metric of an undirected connected graph."""
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    m = np.full((n, n), -1, dtype=np.int32)
    for s in range(n):
        m[s, s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            du = m[s, u]
            for v in adj[u]:
                if m[s, v] < 0:
                    m[s, v] = du + 1
                    q.append(v)
    if np.any(m < 0):
        s, t = map(int, np.argwhere(m < 0)[0])
        raise PreconditionError("graph must be connected", witness=(s, t))
    return FiniteMetricSpace(m, labels=labels, validate=False)


def tree_space_from_parents(parents: Sequence[int], labels=None) -> FiniteMetricSpace:
    """Tree metric from a parent array (root has parent -1).

    Runs the parent-row recurrence d(v,.) = d(parent,.) + 1, minus 2 inside
    v's subtree, over a DFS preorder so subtrees are contiguous slices; this
    is O(n^2) with vectorized rows instead of n BFS passes.
    """
    n = len(parents)
    roots = [i for i, p in enumerate(parents) if p < 0]
    if len(roots) != 1:
        raise PreconditionError("exactly one root required", roots=roots)
    children = [[] for _ in range(n)]
    for i, p in enumerate(parents):
        if p >= 0:
            if not (0 <= p < n):
                raise PreconditionError("parent index out of range", point=i)
            children[p].append(i)
    order = []
    stack = [roots[0]]
    while stack:
        v = stack.pop()
        order.append(v)
        for c in reversed(children[v]):
            stack.append(c)
    if len(order) != n:
        raise PreconditionError("parent array contains a cycle")
    pos = [0] * n
    for p, v in enumerate(order):
        pos[v] = p
    sub_size = [1] * n
    for v in reversed(order):
        p = parents[v]
        if p >= 0:
            sub_size[p] += sub_size[v]
    D = np.zeros((n, n), dtype=np.int32)
    depth = np.zeros(n, dtype=np.int32)
    for p, v in enumerate(order[1:], start=1):
        depth[p] = depth[pos[parents[v]]] + 1
    D[0, :] = depth
    for p, v in enumerate(order[1:], start=1):
        pp = pos[parents[v]]
        D[p, :] = D[pp, :] + 1
        D[p, p:p + sub_size[v]] -= 2
    perm = np.fromiter(pos, dtype=np.intp)
    M = D[np.ix_(perm, perm)]
    return FiniteMetricSpace(M, labels=labels, validate=False)

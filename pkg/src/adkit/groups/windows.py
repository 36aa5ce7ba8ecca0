"""Finite metric windows cut out of group Cayley graphs.

``cayley_window`` materializes the ball B_R(e) as a FiniteMetricSpace whose
metric is the restriction of the word metric of the whole group, not the
induced path metric of the ball: geodesics may travel outside the window, so
every entry is the true global distance. Strategies, in order of preference:

  * ``coords``:    l1 coordinates, one vectorized matrix (abelian engines)
  * ``tree_like``: BFS parents plus the tree recurrence
  * ``word_norm``: d(g, h) = |g^-1 h| from the engine's exact length
  * fallback:      BFS out to 2R and read d(g, h) = depth(g^-1 h); pairs
                   inside B_R are at distance <= 2R, so this is still exact

Points are sorted by (distance from identity, label) so window layouts are
deterministic across runs; index 0 is always the identity.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..cover import Budget
from ..errors import BudgetExhaustedError, PreconditionError
from ..estimator import Subject, WindowInstance, tree_cover
from ..metric import FiniteMetricSpace, PointSet, ball, tree_space_from_parents
from .models import GroupModel


def _bfs(G: GroupModel, R: int, budget: Optional[Budget]):
    """Breadth-first ball scan; returns ({element: depth}, {element: parent}).

    The depth dict preserves discovery order. A budget charges one unit per
    discovered element and reports the last fully enumerated radius when it
    runs out.
    """
    if R < 0:
        raise PreconditionError("radius must be >= 0", radius=R)
    depth = {G.identity: 0}
    parent = {G.identity: None}
    queue = [G.identity]
    head = 0
    while head < len(queue):
        g = queue[head]
        head += 1
        d = depth[g]
        if d == R:
            continue
        for s in G.letters:
            h = G.step(g, s)
            if h in depth:
                continue
            if budget is not None:
                try:
                    budget.spend("group-ball")
                except BudgetExhaustedError:
                    # levels <= d are complete before any depth-d node is
                    # scanned, so d is an honest achieved radius
                    raise BudgetExhaustedError(
                        "group ball walk ran out of budget",
                        group=G.name, radius=R, achieved_radius=d,
                        points=len(depth))
            depth[h] = d + 1
            parent[h] = g
            queue.append(h)
    return depth, parent


def ball_map(G: GroupModel, R: int,
             budget: Optional[Budget] = None) -> dict:
    """Elements of B_R(e) mapped to their word length, in discovery order."""
    depth, _ = _bfs(G, R, budget)
    return depth


def ball_sizes(G: GroupModel, R: int,
               budget: Optional[Budget] = None) -> tuple:
    """Cumulative ball cardinalities |B_0|, |B_1|, .., |B_R|."""
    depth = ball_map(G, R, budget)
    out = [0] * (R + 1)
    for d in depth.values():
        out[d] += 1
    total = 0
    sizes = []
    for c in out:
        total += c
        sizes.append(total)
    return tuple(sizes)


def cayley_window(G: GroupModel, R: int,
                  budget: Optional[Budget] = None) -> FiniteMetricSpace:
    """The ball B_R(e) of G with the exact word metric.

    meta records the group name, the radius, each point's distance from the
    identity (``depth``), and which strategy produced the matrix
    (``metric``). basepoint is the identity.
    """
    depth, parent = _bfs(G, R, budget)
    elems = sorted(depth, key=lambda g: (depth[g], G.label(g)))
    index = {g: i for i, g in enumerate(elems)}
    labels = tuple(G.label(g) for g in elems)
    n = len(elems)
    meta = {
        "group": G.name,
        "radius": R,
        "depth": tuple(depth[g] for g in elems),
        # canonical elements in index order; in-memory plumbing for the
        # strata and tree layers, dropped by serializers
        "elements": tuple(elems),
    }

    if G.coords is not None:
        arr = np.asarray([G.coords(g) for g in elems], dtype=np.int64)
        mat = np.abs(arr[:, None, :] - arr[None, :, :]).sum(axis=2)
        meta["metric"] = "l1"
        return FiniteMetricSpace(mat.astype(np.int32), labels=labels,
                                 basepoint=index[G.identity], meta=meta,
                                 validate=False)

    if G.tree_like:
        parents = [index[parent[g]] if parent[g] is not None else -1
                   for g in elems]
        tree = tree_space_from_parents(parents)
        meta["metric"] = "tree"
        return FiniteMetricSpace(tree.int_matrix, labels=labels,
                                 basepoint=index[G.identity], meta=meta,
                                 validate=False)

    if G.word_norm is not None:
        mat = np.zeros((n, n), dtype=np.int32)
        for i, g in enumerate(elems):
            gi = G.invert(g)
            for j in range(i + 1, n):
                v = G.word_norm(G.combine(gi, elems[j]))
                mat[i, j] = v
                mat[j, i] = v
        meta["metric"] = "word-norm"
        return FiniteMetricSpace(mat, labels=labels,
                                 basepoint=index[G.identity], meta=meta)

    # no closed form: walk to 2R once, then look every quotient up
    table, _ = _bfs(G, 2 * R, budget)
    mat = np.zeros((n, n), dtype=np.int32)
    for i, g in enumerate(elems):
        gi = G.invert(g)
        for j in range(i + 1, n):
            v = table.get(G.combine(gi, elems[j]))
            if v is None:
                raise PreconditionError(
                    "group engine is inconsistent: a quotient of two ball "
                    "elements left the doubled ball",
                    pair=(labels[i], labels[j]))
            mat[i, j] = v
            mat[j, i] = v
    meta["metric"] = "bfs-double"
    return FiniteMetricSpace(mat, labels=labels,
                             basepoint=index[G.identity], meta=meta)


def subject_for(G: GroupModel,
                ball_budget: Optional[int] = None) -> Subject:
    """Dimension-curve subject sampling windows of G at each scale.

    For tree-shaped groups the ambient ball B_{2 lam + 1} is its own window
    and comes with the banded tree cover as an upper-bound hint; multiplicity
    there is a property of the tree, so no interior margin is needed. Other
    groups use the policy's margin: ambient ball B_R, window B_{R - D}.
    """
    def build(lam, policy):
        budget = Budget(ball_budget) if ball_budget is not None else None
        if G.tree_like:
            space = cayley_window(G, 2 * lam + 1, budget)
            window = space.full_set()
            hint = tree_cover(space, lam, window)
            return WindowInstance(space, window, (hint,), note="tree ball")
        R = policy.R(lam)
        D = policy.D(lam)
        space = cayley_window(G, R, budget)
        window = ball(space, space.basepoint, R - D)
        return WindowInstance(space, window, (),
                              note=f"ball {R - D} inside ball {R}")
    return Subject(G.name, build)


def stabilizer_window(act, R) -> PointSet:
    """W_R(e) = group elements moving the action basepoint at most R.

    Contains the identity by definition and is closed under inverses
    because the action is isometric; the transport layer checks the parts
    it needs, this helper only guards the identity.
    """
    W = act.wr_window(R)
    if act.identity not in W.members:
        raise PreconditionError(
            "action basepoint does not fix itself within R; the orbit map "
            "or target metric is inconsistent", radius=R)
    return W

"""Metric layer: frozen examples plus randomized axioms."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adkit.errors import EmptySetError, PreconditionError
from adkit.metric import (
    FiniteMetricSpace,
    PointSet,
    QuasiIsometryData,
    ball,
    check_quasi_isometry,
    cycle_space,
    diam,
    family_separation,
    grid_space,
    inner_neighborhood,
    outer_neighborhood,
    path_space,
    set_distance,
    space_from_graph,
    subspace,
    tree_space_from_parents,
)


def _pset(space, members):
    return PointSet(space, frozenset(members))


def test_diam_singleton_is_zero():
    sp = path_space(10)
    assert diam(_pset(sp, {5})) == 0


def test_diam_path_prefix():
    sp = path_space(10)
    assert diam(_pset(sp, {0, 1, 2, 3})) == 3


def test_diam_empty_set_errors():
    sp = path_space(4)
    with pytest.raises(EmptySetError):
        diam(_pset(sp, set()))


def test_diam_matches_pair_scan_on_grid():
    sp = grid_space(8, 8)
    rng = random.Random(7)
    for _ in range(20):
        pts = rng.sample(range(sp.n), 6)
        expect = max(sp.d(a, b) for i, a in enumerate(pts) for b in pts[i + 1:])
        assert diam(_pset(sp, pts)) == expect


def test_outer_neighborhood_examples():
    sp = path_space(10)
    a = _pset(sp, range(3, 10))
    assert outer_neighborhood(a, 0).members == a.members
    assert outer_neighborhood(a, 2).members == frozenset(range(1, 10))
    assert outer_neighborhood(_pset(sp, set()), 3).members == frozenset()


def test_inner_neighborhood_examples():
    sp = path_space(10)
    a = _pset(sp, range(3, 10))
    assert inner_neighborhood(a, 0).members == a.members
    assert inner_neighborhood(a, 2).members == frozenset(range(5, 10))
    full = sp.full_set()
    assert inner_neighborhood(full, 4).members == full.members


def test_family_separation_examples():
    sp = path_space(11)
    assert family_separation([_pset(sp, {0}), _pset(sp, {10})]) == 10
    sp9 = path_space(10)
    f = [_pset(sp9, range(0, 4)), _pset(sp9, range(7, 10))]
    assert family_separation(f) == 4
    assert family_separation([_pset(sp9, {1})]) == math.inf
    assert family_separation([_pset(sp9, {1}), _pset(sp9, set())]) == math.inf


def test_family_separation_matches_cross_pair_scan():
    sp = grid_space(6, 6)
    rng = random.Random(3)
    for _ in range(15):
        fam = [_pset(sp, rng.sample(range(sp.n), rng.randint(1, 5)))
               for _ in range(3)]
        expect = min(sp.d(a, b)
                     for i in range(3) for j in range(i + 1, 3)
                     for a in fam[i].members for b in fam[j].members)
        assert family_separation(fam) == expect


def test_check_qi_identity_valid():
    sp = grid_space(4, 3)
    q = QuasiIsometryData(sp, sp, tuple(range(sp.n)), 1, 0, 0)
    assert check_quasi_isometry(q).valid


def test_check_qi_doubling_map_valid():
    # x -> 2x from a path of 11 points into a path of 21: stretches by 2,
    # misses odd points by exactly 1
    src = path_space(11)
    tgt = path_space(21)
    q = QuasiIsometryData(src, tgt, tuple(2 * x for x in range(11)), 2, 0, 1)
    rep = check_quasi_isometry(q)
    assert rep.valid, (rep.distortion_violations, rep.surjectivity_violations)


def test_check_qi_constant_map_invalid():
    two = FiniteMetricSpace([[0, 5], [5, 0]])
    q = QuasiIsometryData(two, two, (0, 0), 1, 0, 5)
    rep = check_quasi_isometry(q)
    assert not rep.valid
    assert (0, 1, 5, 0) in rep.distortion_violations


def test_check_qi_roundtrip_condition():
    src = path_space(11)
    tgt = path_space(21)
    fwd_map = tuple(2 * x for x in range(11))
    back = QuasiIsometryData(tgt, src, tuple(min(y // 2, 10) for y in range(21)),
                             2, 1, 1)
    q = QuasiIsometryData(src, tgt, fwd_map, 2, 0, 1, quasi_inverse=back)
    assert check_quasi_isometry(q).valid


def test_subspace_two_points():
    sp = path_space(10)
    sub = subspace(sp, _pset(sp, {0, 9}))
    assert sub.n == 2
    assert sub.d(0, 1) == 9
    assert sub.meta["parent_index"] == (0, 9)


def test_subspace_preserves_distances_and_axioms():
    sp = grid_space(5, 5)
    rng = random.Random(11)
    pts = sorted(rng.sample(range(sp.n), 8))
    sub = subspace(sp, _pset(sp, pts))
    sub.validate(full=True)
    for i, a in enumerate(pts):
        for j, b in enumerate(pts):
            assert sub.d(i, j) == sp.d(a, b)


def test_subspace_full_is_isometric():
    sp = cycle_space(7)
    sub = subspace(sp, sp.full_set())
    for i in range(7):
        for j in range(7):
            assert sub.d(i, j) == sp.d(i, j)


def test_fraction_space_roundtrip():
    half = Fraction(1, 2)
    sp = FiniteMetricSpace([[0, half], [half, 0]])
    assert not sp.is_integer
    assert sp.d(0, 1) == half
    assert diam(sp.full_set()) == half
    assert outer_neighborhood(_pset(sp, {0}), Fraction(1, 4)).members == {0}
    assert outer_neighborhood(_pset(sp, {0}), half).members == {0, 1}


def test_invalid_metrics_rejected():
    with pytest.raises(PreconditionError):
        FiniteMetricSpace([[0, 1], [2, 0]])  # asymmetric
    with pytest.raises(PreconditionError):
        FiniteMetricSpace([[0, 5, 1], [5, 0, 1], [1, 1, 0]])  # triangle fails
    with pytest.raises(PreconditionError):
        FiniteMetricSpace([[1]])  # diagonal


def test_ball_on_cycle():
    sp = cycle_space(12)
    assert ball(sp, 0, 2).members == {10, 11, 0, 1, 2}


def test_tree_space_matches_bfs():
    # binary-ish tree, parent array; cross-check the subtree-slice recurrence
    # against plain BFS distances
    parents = [-1, 0, 0, 1, 1, 2, 2, 3, 5, 5, 8]
    tree = tree_space_from_parents(parents)
    edges = [(i, p) for i, p in enumerate(parents) if p >= 0]
    ref = space_from_graph(len(parents), edges)
    assert np.array_equal(tree.int_matrix, ref.int_matrix)
    tree.validate(full=True)


def test_space_from_graph_rejects_disconnected():
    with pytest.raises(PreconditionError):
        space_from_graph(4, [(0, 1), (2, 3)])


@st.composite
def _graph_space_and_set(draw):
    n = draw(st.integers(min_value=2, max_value=12))
    extra = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
        max_size=8))
    edges = [(i - 1, i) for i in range(1, n)]  # spine keeps it connected
    edges += [(u, v) for u, v in extra if u != v]
    sp = space_from_graph(n, edges)
    members = draw(st.sets(st.integers(0, n - 1)))
    k = draw(st.integers(min_value=0, max_value=6))
    return sp, frozenset(members), k


@given(_graph_space_and_set())
@settings(max_examples=60, deadline=None)
def test_neighborhood_duality(data):
    sp, members, k = data
    a = PointSet(sp, members)
    inner = inner_neighborhood(a, k)
    outer_of_comp = outer_neighborhood(a.complement(), k)
    assert inner.members == frozenset(range(sp.n)) - outer_of_comp.members
    assert inner.members <= a.members
    assert a.members <= outer_neighborhood(a, k).members


@given(_graph_space_and_set())
@settings(max_examples=60, deadline=None)
def test_neighborhood_composition_on_graphs(data):
    # for connected graph metrics with integer radii, iterated neighborhoods
    # compose additively
    sp, members, k = data
    a = PointSet(sp, members)
    j = 2
    lhs = outer_neighborhood(outer_neighborhood(a, k), j)
    rhs = outer_neighborhood(a, k + j)
    assert lhs.members == rhs.members


@given(_graph_space_and_set())
@settings(max_examples=40, deadline=None)
def test_outer_neighborhood_diameter_growth(data):
    sp, members, k = data
    if not members:
        return
    a = PointSet(sp, members)
    assert diam(outer_neighborhood(a, k)) <= diam(a) + 2 * k


def test_set_distance_empty_is_inf():
    sp = path_space(5)
    assert set_distance(_pset(sp, set()), _pset(sp, {1})) == math.inf

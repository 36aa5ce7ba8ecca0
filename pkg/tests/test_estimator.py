"""Windowed dimension estimates on small frozen instances.

Expected values come from hand analysis of each fixture: component
arguments settle the multiplicity-one level, forced-incidence arguments
pin stars and grids, and every returned witness cover is re-validated
through the independent cover checker rather than trusted.
"""

import pytest
from hypothesis import given, settings, strategies as st

from adkit.cover import Budget, Cover, validate
from adkit.errors import (
    BudgetExhaustedError,
    CertificateError,
    InsufficientRangeError,
    NonIntegerMetricError,
    PreconditionError,
)
from adkit.metric import (
    FiniteMetricSpace,
    PointSet,
    ball,
    cycle_space,
    grid_space,
    path_space,
    space_from_graph,
    tree_space_from_parents,
)
from adkit.estimator import (
    CurveSample,
    DimCurve,
    Subject,
    WindowInstance,
    WindowPolicy,
    ad_bounds,
    ad_exact,
    ad_witness,
    brick_cover,
    dim_curve,
    dominates,
    find_min_k,
    tree_cover,
)


def tripod(leg):
    # three paths of the given length glued at a hub
    edges = []
    n = 1
    for _ in range(3):
        prev = 0
        for _ in range(leg):
            edges.append((prev, n))
            prev = n
            n += 1
    return space_from_graph(n, edges)


def branching_tree(depth, fan=3):
    parents = [-1]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for _ in range(4 if v == 0 else fan):
                parents.append(v)
                nxt.append(len(parents) - 1)
        frontier = nxt
    return tree_space_from_parents(parents)


def check_witness(est, lam, D, window):
    assert est.witness is not None
    stats = validate(est.witness)
    assert stats.lebesgue >= lam
    assert stats.mesh <= D
    assert est.witness.uncovered() == frozenset()
    assert stats.multiplicity == est.upper + 1
    assert est.witness.window.members == window.members


# ---------------------------------------------------------------------------
# exact values


def test_degenerate_window_is_zero():
    P = path_space(5)
    est = ad_witness(P, 1, 4, P.full_set())
    assert (est.lower, est.upper) == (0, 0)
    assert est.method == "exact:degenerate-window"
    assert est.exact


def test_single_point_window():
    P = path_space(9)
    assert ad_exact(P, 3, 12, PointSet(P, {4})) == 0


def test_path_interior_window():
    P = path_space(30)
    win = PointSet(P, frozenset(range(6, 24)))
    est = ad_witness(P, 3, 12, win)
    assert (est.lower, est.upper) == (1, 1)
    check_witness(est, 3, 12, win)


def test_line_under_default_policy():
    pol = WindowPolicy()
    for lam in (1, 3, 6):
        R = pol.R(lam)
        P = path_space(2 * R + 1)
        win = ball(P, R, pol.window_radius(lam))
        assert ad_exact(P, lam, pol.D(lam), win) == 1


def test_cycle_value():
    C = cycle_space(6)
    assert ad_exact(C, 1, 2, C.full_set()) == 1


def test_lam_zero_needs_only_singletons():
    P = path_space(10)
    assert ad_exact(P, 0, 2, P.full_set()) == 0


def test_far_clusters_split_into_components():
    # each cluster fits in one set, so the multiplicity-one level is feasible
    P = path_space(30)
    win = PointSet(P, frozenset({0, 1, 2, 27, 28, 29}))
    est = ad_witness(P, 2, 8, win)
    assert (est.lower, est.upper) == (0, 0)
    assert est.method == "exact:components"
    assert len(est.witness.sets) == 2


def test_grid_seven_by_seven():
    # staggered two-thick covers exist at this scale, so the value is 1
    # on the full window and on the interior window alike
    G = grid_space(7, 7)
    full = G.full_set()
    est = ad_witness(G, 1, 4, full)
    assert (est.lower, est.upper) == (1, 1)
    check_witness(est, 1, 4, full)

    interior = PointSet(G, frozenset(
        r * 7 + c for r in range(1, 6) for c in range(1, 6)))
    est2 = ad_witness(G, 1, 4, interior)
    assert (est2.lower, est2.upper) == (1, 1)
    check_witness(est2, 1, 4, interior)


def test_star_center_forces_three_sets():
    # mesh 1 keeps every edge a separate set and all three contain the hub
    star = space_from_graph(4, [(0, 1), (0, 2), (0, 3)])
    assert ad_exact(star, 1, 1, star.full_set()) == 2


def test_tripod_value_and_witness():
    T = tripod(5)
    est = ad_witness(T, 1, 1, T.full_set())
    assert (est.lower, est.upper) == (2, 2)
    stats = validate(est.witness)
    assert (stats.multiplicity, stats.lebesgue, stats.mesh) == (3, 1, 1)


def test_branching_tree_value():
    T = branching_tree(5)
    assert T.n == 485
    hint = tree_cover(T, 2, T.full_set())
    est = ad_witness(T, 2, 8, T.full_set(), hints=(hint,))
    assert (est.lower, est.upper) == (1, 1)
    assert est.method == "exact:scan|upper:hint"
    est2 = ad_witness(T, 2, 8, T.full_set())
    assert (est2.lower, est2.upper) == (1, 1)
    assert est2.method == "exact:scan"


def test_determinism():
    G = grid_space(7, 7)
    a = ad_witness(G, 1, 4, G.full_set())
    b = ad_witness(G, 1, 4, G.full_set())
    assert a.method == b.method
    assert [s.as_sorted() for s in a.witness.sets] == \
        [s.as_sorted() for s in b.witness.sets]


# ---------------------------------------------------------------------------
# argument validation and budgets


def test_rejects_bad_arguments():
    P = path_space(6)
    Q = path_space(6)
    with pytest.raises(PreconditionError):
        ad_exact(P, 5, 4, P.full_set())
    with pytest.raises(PreconditionError):
        ad_exact(P, -1, 4, P.full_set())
    with pytest.raises(PreconditionError):
        ad_exact(P, 1, 4, PointSet(P, frozenset()))
    with pytest.raises(PreconditionError):
        ad_exact(P, 1, 4, Q.full_set())


def test_rejects_non_integer_metric():
    from fractions import Fraction

    h = Fraction(1, 2)
    X = FiniteMetricSpace([[0, h, 1], [h, 0, h], [1, h, 0]])
    with pytest.raises(NonIntegerMetricError):
        ad_exact(X, 1, 2, X.full_set())


def test_budget_exhaustion_reports_partial_bounds():
    G = grid_space(7, 7)
    with pytest.raises(BudgetExhaustedError) as info:
        ad_exact(G, 1, 4, G.full_set(), budget=Budget(50))
    assert info.value.details["lower"] == 1
    assert info.value.details["upper"] >= 1
    lo, up = ad_bounds(G, 1, 4, G.full_set(), budget=Budget(50))
    assert lo == 1
    assert up >= lo


def test_bounds_pass_through_exact_results():
    T = tripod(5)
    assert ad_bounds(T, 1, 1, T.full_set()) == (2, 2)


def test_subwindow_rescues_the_lower_bound():
    # the full scan dies inside clique enumeration at this budget, but the
    # hub ball alone is small enough to finish and certify the bound
    T = tripod(5)
    hub = ball(T, 0, 1)
    assert ad_bounds(T, 1, 1, T.full_set(), budget=Budget(40)) == (0, None)
    got = ad_bounds(T, 1, 1, T.full_set(), budget=Budget(40),
                    subwindows=(hub,))
    assert got == (2, None)


def test_subwindow_must_be_inside():
    P = path_space(10)
    win = PointSet(P, frozenset(range(5)))
    with pytest.raises(PreconditionError):
        ad_bounds(P, 1, 2, win, budget=Budget(10),
                  subwindows=(P.full_set(),))


def test_invalid_hints_are_ignored():
    P = path_space(30)
    win = PointSet(P, frozenset(range(6, 24)))
    gappy = Cover.from_lists(P, [range(6, 14)], window=win)
    coarse = Cover.from_lists(P, [range(0, 30)], window=win)
    est = ad_witness(P, 3, 12, win, hints=(gappy, coarse))
    assert (est.lower, est.upper) == (1, 1)


# ---------------------------------------------------------------------------
# constructive covers


def test_brick_cover_on_a_line_segment():
    # neighborhoods clip at the segment ends, so the mesh lands under the
    # side - 1 promise instead of meeting it
    P = path_space(24)
    cov = brick_cover(1, 3, 24, P.full_set())
    stats = validate(cov)
    assert (stats.multiplicity, stats.lebesgue, stats.mesh) == (2, 6, 20)
    assert stats.mesh <= 23


def test_brick_cover_interior_window_meets_the_mesh_promise():
    # with ambient slack on both sides the enlarged bricks reach full size
    P = path_space(36)
    win = PointSet(P, frozenset(range(6, 30)))
    cov = brick_cover(1, 3, 24, win)
    stats = validate(cov)
    assert stats.multiplicity == 2
    assert stats.lebesgue >= 3
    assert stats.mesh <= 23


def test_brick_cover_on_grids():
    G8 = grid_space(8, 8)
    s8 = validate(brick_cover(2, 1, 8, G8.full_set()))
    assert (s8.multiplicity, s8.lebesgue, s8.mesh) == (3, 2, 12)

    G7 = grid_space(7, 7)
    s7 = validate(brick_cover(2, 1, 4, G7.full_set()))
    assert (s7.multiplicity, s7.lebesgue, s7.mesh) == (3, 2, 4)

    G12 = grid_space(12, 12)
    s12 = validate(brick_cover(2, 2, 12, G12.full_set()))
    assert (s12.multiplicity, s12.lebesgue, s12.mesh) == (3, 4, 18)


def test_brick_cover_gives_an_upper_bound_witness():
    G7 = grid_space(7, 7)
    bricks = brick_cover(2, 1, 4, G7.full_set())
    est = ad_witness(G7, 1, 4, G7.full_set(), hints=(bricks,))
    assert est.upper <= validate(bricks).multiplicity - 1


def test_brick_cover_rejects_thin_sides():
    P = path_space(10)
    with pytest.raises(PreconditionError) as info:
        brick_cover(1, 3, 6, P.full_set())
    assert info.value.details["required"] == 7
    with pytest.raises(PreconditionError):
        brick_cover(0, 1, 5, P.full_set())


def test_brick_cover_with_lam_zero_partitions():
    P = path_space(8)
    cov = brick_cover(1, 0, 4, P.full_set())
    stats = validate(cov)
    assert len(cov.sets) == 2
    assert (stats.multiplicity, stats.lebesgue, stats.mesh) == (1, 0, 3)


def test_tree_cover_bands():
    T = branching_tree(5)
    cov = tree_cover(T, 2, T.full_set())
    stats = validate(cov)
    assert (stats.multiplicity, stats.lebesgue) == (2, 2)
    assert stats.mesh <= 4 * 2 - 2


def test_tree_cover_on_a_chain():
    T = tree_space_from_parents([-1] + list(range(9)))
    cov = tree_cover(T, 3, T.full_set())
    stats = validate(cov)
    assert len(cov.sets) == 4
    assert (stats.multiplicity, stats.lebesgue, stats.mesh) == (2, 3, 5)


def test_tree_cover_corner_cases():
    single = tree_space_from_parents([-1])
    cov = tree_cover(single, 2, single.full_set())
    assert len(cov.sets) == 1

    chain = tree_space_from_parents([-1, 0, 1, 2])
    cov0 = tree_cover(chain, 0, chain.full_set())
    assert len(cov0.sets) == 4
    assert validate(cov0).multiplicity == 1


def test_tree_cover_rejects_non_trees():
    C = cycle_space(4)
    with pytest.raises(PreconditionError):
        tree_cover(C, 1, C.full_set())
    T = tree_space_from_parents([-1, 0])
    other = path_space(2)
    with pytest.raises(PreconditionError):
        tree_cover(T, 1, other.full_set())


# ---------------------------------------------------------------------------
# curves and domination


def test_window_policy_defaults():
    pol = WindowPolicy()
    assert (pol.D(3), pol.R(3), pol.window_radius(3)) == (12, 60, 48)
    with pytest.raises(PreconditionError):
        WindowPolicy(d_factor=0)
    with pytest.raises(PreconditionError):
        WindowPolicy(r_factor=1)


def line_subject():
    def build(lam, policy):
        R = policy.R(lam)
        P = path_space(2 * R + 1)
        return WindowInstance(P, ball(P, R, policy.window_radius(lam)))

    return Subject("line", build)


def test_dim_curve_samples_line():
    curve = dim_curve(line_subject(), [3, 1, 1, 2])
    assert [s.lam for s in curve.samples] == [1, 2, 3]
    assert all((s.lower, s.upper) == (1, 1) for s in curve.samples)
    assert all(s.seconds >= 0 for s in curve.samples)


def test_dim_curve_records_errors_as_gaps():
    def build(lam, policy):
        P = path_space(5)
        return WindowInstance(P, PointSet(P, frozenset()))

    curve = dim_curve(Subject("broken", build), [1, 2])
    for s in curve.samples:
        assert s.upper is None
        assert s.method == "error:precondition-violation"


def frozen_curve(name, pairs):
    return DimCurve(name, WindowPolicy(), tuple(
        CurveSample(lam, v, v, "frozen", 0.0) for lam, v in pairs))


def test_step_interpolation_and_range():
    rising = frozen_curve("rising", [(1, 1), (3, 2)])
    assert [rising.upper_step_at(x) for x in (1, 2, 3, 9)] == [1, 1, 2, 2]
    with pytest.raises(InsufficientRangeError):
        rising.upper_step_at(0)


def test_curve_validation():
    with pytest.raises(PreconditionError):
        frozen_curve("dup", [(1, 0), (1, 0)])
    with pytest.raises(PreconditionError):
        DimCurve("bad", WindowPolicy(),
                 (CurveSample(1, 2, 1, "frozen", 0.0),))


def test_domination_on_constant_curves():
    f2 = frozen_curve("f2", [(1, 2), (2, 2), (3, 2)])
    g0 = frozen_curve("g0", [(1, 0), (2, 0), (3, 0)])
    res = dominates(f2, g0, 1)
    assert not res.holds and res.witness_lam == 1
    assert dominates(f2, g0, 2).holds
    assert find_min_k(f2, g0, 10) == 2
    assert find_min_k(frozen_curve("f5", [(1, 5)]), g0, 10) == 5
    assert find_min_k(frozen_curve("f5", [(1, 5)]), g0, 4) is None


def test_domination_is_reflexive_here():
    f = frozen_curve("f", [(1, 1), (2, 1), (4, 2)])
    assert dominates(f, f, 1).holds
    assert find_min_k(f, f, 3) == 1


def test_domination_requires_reachable_samples():
    f2 = frozen_curve("f2", [(1, 2)])
    gshort = frozen_curve("gshort", [(5, 0)])
    with pytest.raises(InsufficientRangeError):
        dominates(f2, gshort, 1)
    with pytest.raises(PreconditionError):
        dominates(f2, f2, 0)


# ---------------------------------------------------------------------------
# order properties on small random instances


@st.composite
def small_path_window(draw):
    n = draw(st.integers(min_value=4, max_value=14))
    members = draw(st.sets(st.integers(min_value=0, max_value=n - 1),
                           min_size=2, max_size=n))
    return n, frozenset(members)


@settings(max_examples=40, deadline=None)
@given(small_path_window(), st.integers(1, 3), st.integers(0, 2))
def test_value_monotone_in_lam(nw, lam, bump):
    n, members = nw
    P = path_space(n)
    win = PointSet(P, members)
    D = 4 * (lam + bump)
    assert ad_exact(P, lam, D, win) <= ad_exact(P, lam + bump, D, win)


@settings(max_examples=40, deadline=None)
@given(small_path_window(), st.integers(1, 3), st.integers(0, 4))
def test_value_monotone_in_mesh_bound(nw, lam, slack):
    n, members = nw
    P = path_space(n)
    win = PointSet(P, members)
    assert ad_exact(P, lam, 2 * lam + slack, win) >= \
        ad_exact(P, lam, 2 * lam + slack + 2, win)


@settings(max_examples=40, deadline=None)
@given(small_path_window(), st.integers(1, 2))
def test_value_monotone_under_restriction(nw, lam):
    n, members = nw
    P = path_space(n)
    win = PointSet(P, members)
    sub = PointSet(P, frozenset(sorted(members)[: max(2, len(members) // 2)]))
    assert ad_exact(P, lam, 4 * lam, sub) <= ad_exact(P, lam, 4 * lam, win)

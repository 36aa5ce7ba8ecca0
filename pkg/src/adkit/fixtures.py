"""Worked end-to-end scenarios shared by the command line and the tests.

Every builder here returns concrete spaces, covers and constants that are
tuned so the downstream certificates pass with visible margins while the
windows stay small enough to rebuild in seconds. The constants are part of
the contract: tests pin the numbers, the command line names the fixtures.
"""

from dataclasses import dataclass
from typing import Optional

from .cover import Budget, Cover, PointSet
from .errors import PreconditionError
from .estimator import Estimate, ad_witness
from .groups import free_abelian
from .groups.graphs import (GroupAction, bass_serre_tree_window, gog_by_name,
                            level_band_cover, make_action, one_type_action)
from .groups.windows import cayley_window
from .metric import (FiniteMetricSpace, QuasiIsometryData, ball, diam,
                     path_space)
from .transport import (ActionWindow, TransportCertificate, UniformFamily,
                        action_transport)


def interval_ladder(space: FiniteMetricSpace, width: int, step: int,
                    window: Optional[PointSet] = None) -> Cover:
    """Cover a path window by the intervals [s, s+width], s advancing by step.

    Overlap width - step grants Lebesgue number >= width - step; when
    2 step > width no point lies in three consecutive intervals. The last
    interval is clamped to end at the final point, which can push a point
    into a third interval, so callers needing multiplicity exactly two must
    pick sizes with (n - 1 - width) % step == 0.
    """
    if window is None:
        window = space.full_set()
    pts = list(window.as_sorted())
    if not pts:
        raise PreconditionError("cannot ladder an empty window")
    if pts != list(range(pts[0], pts[-1] + 1)):
        raise PreconditionError("ladder windows must be index intervals")
    if width < 1 or not 1 <= step <= width:
        raise PreconditionError("need 1 <= step <= width",
                                width=width, step=step)
    lo, hi = pts[0], pts[-1]
    if hi - lo <= width:
        starts = [lo]
    else:
        starts = list(range(lo, hi - width, step))
        if starts[-1] + width < hi:
            starts.append(hi - width)
    sets = tuple(PointSet(space, frozenset(
        range(s, min(s + width, hi) + 1))) for s in starts)
    return Cover(space, sets, window)


def p30_cover() -> Cover:
    """Two overlapping intervals on the 30-point path; Lebesgue number 5.

    The interval {9..15} has diameter 6 and fits in neither set, so the
    Lebesgue number is exactly 5 and a 1-shrink lands exactly on 3. This is
    the standard equality witness for the shrink contract.
    """
    X = path_space(30)
    sets = (PointSet(X, frozenset(range(0, 15))),
            PointSet(X, frozenset(range(10, 30))))
    return Cover(X, sets, X.full_set())


def identity_qi(space: FiniteMetricSpace) -> QuasiIsometryData:
    """The identity map as quasi-isometry data; transport along it is exact."""
    idmap = tuple(range(space.n))
    inv = QuasiIsometryData(space, space, idmap, 1, 0, 0)
    return QuasiIsometryData(space, space, idmap, 1, 0, 0, quasi_inverse=inv)


def doubling_qi(n: int = 30) -> QuasiIsometryData:
    """x -> 2x from the n-point path into the (2n - 1)-point path.

    Distances double exactly (alpha 2, epsilon 0); odd targets sit at
    distance 1 from the image, and the floor-halving quasi-inverse (alpha 2,
    epsilon 1) round-trips within C = 1.
    """
    if n < 2:
        raise PreconditionError("need at least two points", n=n)
    src = path_space(n)
    tgt = path_space(2 * n - 1)
    fwd = tuple(2 * i for i in range(n))
    back = tuple(min(y // 2, n - 1) for y in range(2 * n - 1))
    inv = QuasiIsometryData(tgt, src, back, 2, 1, 1)
    return QuasiIsometryData(src, tgt, fwd, 2, 0, 1, quasi_inverse=inv)


def union_blocks(gap: int = 13) -> tuple:
    """Two laddered path blocks at the given gap; returns (family, lam).

    Blocks are 13-point intervals covered by width-4 step-2 ladders (mesh 4,
    Lebesgue number >= 2, multiplicity 3). With mesh bound B = 4 the union
    theorem wants separation >= 3B = 12, so the default gap of 13 passes and
    anything below 12 is a forced precondition failure.
    """
    if gap < 1:
        raise PreconditionError("gap must be >= 1", gap=gap)
    block, width, step, lam = 13, 4, 2, 2
    X = path_space(2 * block + gap)
    regions = (PointSet(X, frozenset(range(0, block))),
               PointSet(X, frozenset(range(block + gap, 2 * block + gap))))
    members = tuple(
        (r, interval_ladder(X, width, step, window=r)) for r in regions)
    family = UniformFamily(members, mesh_bound=width, lebesgue_floor=lam,
                           multiplicity_bound=3)
    return family, lam


@dataclass(frozen=True)
class ActionFixture:
    """A group action window with matching orbit and stabilizer covers."""

    action: GroupAction
    window: ActionWindow
    orbit_cover: Cover
    stab_cover: Cover
    lam: int
    R: int

    def transport(self, budget: Optional[Budget] = None) -> tuple:
        return action_transport(self.orbit_cover, self.stab_cover,
                                self.window, self.lam, self.R, budget)


def plane_on_line(rho: int = 16, lam: int = 2) -> ActionFixture:
    """The rank-2 lattice translating the integer line by first coordinates.

    The group window is the l1 ball of radius rho; the line carries the
    ladder of width-5 step-3 intervals (multiplicity 2, Lebesgue number 3)
    and the R-stabilizer window is covered by second-coordinate strips of
    the same width and step (multiplicity 2). Transport at lam = 2, R = 10
    then yields an interior cover of multiplicity at most 4.

    rho must keep the line length congruent so the ladder tiles without a
    clamped last interval: 2 rho + 1 = 3 m + 6 for some integer m.
    """
    width, step = 5, 3
    n_line = 2 * rho + 1
    if (n_line - 1 - width) % step != 0:
        raise PreconditionError(
            "rho must align the ladder grid: need (2 rho - 5) % 3 == 0",
            rho=rho)
    G = free_abelian(2)
    gs = cayley_window(G, rho)
    line = path_space(n_line)

    def shift(g, x):
        y = x + g[0]
        return y if 0 <= y < n_line else None

    act = make_action(G, gs, line, rho, shift)
    orbit_cover = interval_ladder(line, width, step)
    R = 2 * width * act.mu
    aw = act.realize()
    wr = aw.wr_window(R)
    elems = gs.meta["elements"]
    b_lo = min(elems[i][1] for i in wr.members)
    b_hi = max(elems[i][1] for i in wr.members)
    strips = []
    for k in range(-(-(b_lo - width) // step), b_hi // step + 1):
        mem = frozenset(i for i in wr.members
                        if step * k <= elems[i][1] <= step * k + width)
        if mem:
            strips.append(PointSet(gs, mem))
    stab_cover = Cover(gs, tuple(strips), wr)
    return ActionFixture(act, aw, orbit_cover, stab_cover, lam, R)


# depth, group radius and interior radius pairs that keep the amalgam
# pipeline's truncation margins affordable at each tested scale
_AMALGAM_TUNED = {1: (11, 9, None), 2: (17, 15, 7)}


@dataclass(frozen=True)
class AmalgamRun:
    """Result bundle of the tree-collapse pipeline on an amalgam window."""

    name: str
    lam: int
    group_space: FiniteMetricSpace
    orbit_cover: Cover
    stab_cover: Cover
    window: ActionWindow
    cover: Cover
    certificate: TransportCertificate
    mesh: int
    estimate: Optional[Estimate]


def amalgam_collapse(lam: int, name: str = "amalgam:z2*z3",
                     depth: Optional[int] = None,
                     group_radius: Optional[int] = None,
                     interior_radius: Optional[int] = None,
                     estimate: bool = True,
                     budget: Optional[Budget] = None) -> AmalgamRun:
    """Run the full amalgam pipeline: tree window, one-type collapse,
    level bands, stabilizer cover, action transport, witness estimate.

    Tuned depth/radius pairs exist for lam in {1, 2}; other scales need all
    window parameters supplied explicitly. The lam = 2 run overrides the
    default interior with a radius-7 ball: band representatives act within
    the doubled window there, while the default margin would demand a group
    window too large to build.
    """
    tuned = _AMALGAM_TUNED.get(lam)
    if depth is None or group_radius is None:
        if tuned is None:
            raise PreconditionError(
                "no tuned window parameters for this scale; pass depth and "
                "group_radius explicitly", lam=lam)
        depth, group_radius, tuned_interior = tuned
        if interior_radius is None:
            interior_radius = tuned_interior
    gog = gog_by_name(name)
    tree, act = bass_serre_tree_window(gog, depth, group_radius=group_radius)
    half = one_type_action(tree, act, 0)
    bands = level_band_cover(half.space, lam * half.mu)
    mesh_o = max(diam(s) for s in bands.sets)
    R = 2 * mesh_o
    interior = None
    if interior_radius is not None:
        interior = ball(act.group_space, act.group_space.basepoint,
                        interior_radius)
    aw = half.realize(interior=interior)
    wr = aw.wr_window(R)
    stab = Cover(act.group_space, (wr,), wr)
    out, cert = action_transport(bands, stab, aw, lam, R, budget)
    mesh_out = max((diam(s) for s in out.sets if s.members), default=0)
    est = None
    if estimate:
        est = ad_witness(act.group_space, lam, mesh_out, out.window,
                         hints=(out,))
    return AmalgamRun(name, lam, act.group_space, bands, stab, aw, out, cert,
                      mesh_out, est)

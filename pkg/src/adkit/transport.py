"""Cover transformations that carry runtime-checked certificates.

Each operation rebuilds a cover the way the corresponding dimension
argument does on paper, then re-measures every claimed postcondition
with the cover statistics module instead of trusting the construction.
A failed claim after satisfied preconditions is an implementation bug,
so it raises instead of returning a failing certificate.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .cover import (
    AllSubsets,
    Budget,
    Cover,
    k_multiplicity,
    lebesgue_number,
    lebesgue_refutation,
    multiplicity,
)
from .errors import (
    CertificateError,
    NotACoverError,
    PreconditionError,
    WindowTooSmallError,
)
from .metric import (
    FiniteMetricSpace,
    PointSet,
    QuasiIsometryData,
    ball,
    check_quasi_isometry,
    diam,
    family_separation,
    inner_neighborhood,
    outer_neighborhood,
)


def _holds(measured, relation, bound) -> bool:
    if relation == "<=":
        return measured <= bound
    if relation == ">=":
        return measured >= bound
    if relation == "==":
        return measured == bound
    raise ValueError(f"unknown relation {relation!r}")


@dataclass(frozen=True)
class TransportCertificate:
    """Claimed bounds next to their re-measured values.

    claimed holds (name, relation, bound) rows, verified the matching
    (name, relation, measured) rows. Rows named *-at-least record the
    floor that was verified by refutation search, not the exact
    statistic; every other row carries an exactly measured value.
    """

    claimed: tuple
    verified: tuple
    passed: bool

    def rows(self):
        for (name, rel, bound), (_, _, measured) in zip(
                self.claimed, self.verified):
            yield name, rel, bound, measured, _holds(measured, rel, bound)

    def failing(self) -> tuple:
        return tuple(r for r in self.rows() if not r[4])


class _CertBuilder:
    def __init__(self):
        self._rows = []

    def claim(self, name, relation, bound, measured):
        self._rows.append((name, relation, bound, measured))

    def lebesgue_floor(self, name, cov, floor, budget):
        # verified by refutation search; on failure the exact number is
        # measured so the error names the real statistic
        if floor <= 0:
            self.claim(name, ">=", floor, floor)
            return
        bad = lebesgue_refutation(cov, floor, budget)
        measured = floor if bad is None else lebesgue_number(cov, budget)
        self.claim(name, ">=", floor, measured)

    def build(self, context: str) -> TransportCertificate:
        claimed = tuple((n, r, b) for n, r, b, _ in self._rows)
        verified = tuple((n, r, m) for n, r, _, m in self._rows)
        passed = all(_holds(m, r, b) for _, r, b, m in self._rows)
        cert = TransportCertificate(claimed, verified, passed)
        if not passed:
            raise CertificateError(
                f"{context} violated its own construction claims",
                failed=[(n, r, b, m) for n, r, b, m in self._rows
                        if not _holds(m, r, b)])
        return cert


def _mesh(sets) -> int:
    vals = [diam(s) for s in sets if s.members]
    return max(vals, default=0)


def _finite_lebesgue(cover: Cover, budget) -> int:
    # clamp the all-subsets sentinel: for subsets of the window, a floor
    # of diam(window) is exactly as strong
    L = lebesgue_number(cover, budget)
    if isinstance(L, AllSubsets):
        return diam(cover.window)
    return L


# ---------------------------------------------------------------------------
# shrinking


def shrink(cover: Cover, k: int,
           budget: Optional[Budget] = None) -> tuple:
    """Replace every set by its -k-neighborhood, preserving indices.

    Needs 4 k <= Lebesgue number, and additionally that the 2k-shrink
    still covers the window: near a window edge the ambient 2k-ball of
    a point can poke outside every member even when the Lebesgue number
    is large, and then coverage of the k-shrink genuinely fails.
    """
    if k < 0 or k != int(k):
        raise PreconditionError("k must be a nonnegative integer", k=k)
    k = int(k)
    cover.check_covers()
    L = _finite_lebesgue(cover, budget)
    if 4 * k > L:
        raise PreconditionError("shrinking needs 4 k <= Lebesgue number",
                                lebesgue=L, k=k)
    if k > 0:
        held = set()
        for u in cover.sets:
            held |= inner_neighborhood(u, 2 * k).members
        missing = cover.window.members - held
        if missing:
            raise PreconditionError(
                "a window point sits too close to the cover boundary for "
                "this k (its 2k-ball leaves every set)",
                point=min(missing), lebesgue=L, k=k)

    vsets = tuple(inner_neighborhood(u, k) for u in cover.sets)
    out = Cover(cover.space, vsets, cover.window)

    cert = _CertBuilder()
    cert.claim("covers-window", "==", True, out.uncovered() == frozenset())
    cert.lebesgue_floor("lebesgue-at-least", out, L - 2 * k, budget)
    cert.claim("k-multiplicity", "<=", multiplicity(cover),
               k_multiplicity(out, k))
    cert.claim("sets-nested", "==", True,
               all(v.members <= u.members
                   for v, u in zip(vsets, cover.sets)))
    return out, cert.build("shrink")


# ---------------------------------------------------------------------------
# quasi-isometry transport


def _push_forward(cover: Cover, q: QuasiIsometryData, kc: int) -> Cover:
    """Image sets enlarged by kc on the target, window enlarged alike."""
    Y = q.target
    ysets = tuple(
        outer_neighborhood(
            PointSet(Y, frozenset(q.mapping[x] for x in u.members)), kc)
        for u in cover.sets)
    ywin = outer_neighborhood(
        PointSet(Y, frozenset(q.mapping[x] for x in cover.window.members)),
        kc)
    return Cover(Y, ysets, ywin)


def _ball_cardinality(space: FiniteMetricSpace, window: PointSet,
                      r: int) -> int:
    # the bounded-geometry constant, computed exactly on the window
    if not window.members:
        return 0
    idx = np.fromiter(window.as_sorted(), dtype=np.intp)
    counts = (space.int_matrix[:, idx] <= r).sum(axis=0)
    return int(counts.max())


def qi_transport(cover: Cover, q: QuasiIsometryData, lam_target: int,
                 budget: Optional[Budget] = None) -> tuple:
    """Transport a cover along a quasi-isometry with a quasi-inverse.

    Pipeline: shrink by floor(C) so displaced points stay inside their
    sets, push sets forward, enlarge by floor(C) to absorb coarse
    surjectivity. Precondition (integer form): with quasi-inverse
    constants (a', e'), floor(a' lam + e') <= L(cover) - 2 C. The
    internal shrink adds its own edge condition near proper windows.
    """
    report = check_quasi_isometry(q)
    if not report.valid:
        raise PreconditionError(
            "quasi-isometry data violates its own constants",
            distortion=report.distortion_violations[:3],
            surjectivity=report.surjectivity_violations[:3],
            inverse=report.inverse_violations[:3])
    if q.quasi_inverse is None:
        raise PreconditionError("transport needs a quasi-inverse")
    ap = q.quasi_inverse.alpha
    ep = q.quasi_inverse.epsilon
    cq = q.C

    L = _finite_lebesgue(cover, budget)
    need = math.floor(ap * lam_target + ep)
    if need > L - 2 * cq:
        raise PreconditionError(
            "Lebesgue number too small for this target scale",
            lebesgue=L, needed=need, C=cq)

    kc = math.floor(cq)
    ubar, _ = shrink(cover, kc, budget)
    out = _push_forward(ubar, q, kc)

    c_y = _ball_cardinality(q.target, out.window, kc)
    cert = _CertBuilder()
    cert.claim("covers-window", "==", True, out.uncovered() == frozenset())
    cert.lebesgue_floor("lebesgue-at-least", out, lam_target, budget)
    cert.claim("multiplicity", "<=", c_y * multiplicity(cover),
               multiplicity(out))
    cert.claim("mesh", "<=", q.alpha * _mesh(cover.sets) + q.epsilon + 2 * cq,
               _mesh(out.sets))
    return out, cert.build("quasi-isometry transport")


# ---------------------------------------------------------------------------
# unions of uniformly covered regions


@dataclass(frozen=True)
class UniformFamily:
    """Regions with covers sharing one mesh bound, Lebesgue floor and
    multiplicity ceiling. Construction validates every member: the cover
    must sit inside its region, cover it, respect the three bounds."""

    members: tuple  # of (PointSet region, Cover) pairs
    mesh_bound: int
    lebesgue_floor: int
    multiplicity_bound: int

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(
            (r, c) for r, c in self.members))
        if not self.members:
            raise PreconditionError("a uniform family needs members")
        space = self.members[0][0].space
        for i, (region, cov) in enumerate(self.members):
            if region.space is not space or cov.space is not space:
                raise PreconditionError(
                    "family members must share one space", member=i)
            if cov.window.members != region.members:
                raise PreconditionError(
                    "cover window must equal its region", member=i)
            cov.check_covers()
            for s in cov.sets:
                if not s.members <= region.members:
                    raise PreconditionError(
                        "cover sets must stay inside their region",
                        member=i)
            if _mesh(cov.sets) > self.mesh_bound:
                raise PreconditionError("mesh bound violated", member=i,
                                        mesh=_mesh(cov.sets),
                                        bound=self.mesh_bound)
            if multiplicity(cov) > self.multiplicity_bound:
                raise PreconditionError("multiplicity bound violated",
                                        member=i)
            if self.lebesgue_floor > 0 and \
                    lebesgue_refutation(cov, self.lebesgue_floor) is not None:
                raise PreconditionError("Lebesgue floor violated", member=i,
                                        floor=self.lebesgue_floor)

    @property
    def space(self) -> FiniteMetricSpace:
        return self.members[0][0].space

    def regions(self) -> tuple:
        return tuple(r for r, _ in self.members)


def union_transport(family: UniformFamily, y_cov: Optional[Cover], lam: int,
                    budget: Optional[Budget] = None) -> tuple:
    """Merge region covers across a separating set (None for an empty Y).

    Sets meeting the deep interior of Y are stripped of it, then Y's own
    cover is appended; the combined window is the union of the regions
    and Y (Y may bridge gaps between regions). Preconditions beyond the
    separation arithmetic: Y must absorb each region's lam-fringe, and
    the regions must stay more than lam apart after removing only Y's
    deep interior. Both are measured directly because they are what the
    small-set argument actually consumes; regions can leak around Y in
    ways the stripped-separation number alone does not see.
    """
    X = family.space
    if y_cov is not None and y_cov.space is not X:
        raise PreconditionError("Y cover must live on the family's space")
    if lam < 0:
        raise PreconditionError("lam must be >= 0", lam=lam)
    if family.lebesgue_floor < lam:
        raise PreconditionError(
            "family Lebesgue floor below the requested scale",
            floor=family.lebesgue_floor, lam=lam)
    B = family.mesh_bound
    regions = family.regions()
    y_members = frozenset() if y_cov is None else y_cov.window.members
    y_sets = () if y_cov is None else y_cov.sets
    uwin_members = frozenset().union(
        y_members, *(r.members for r in regions))
    uwin = PointSet(X, uwin_members)

    stripped = [PointSet(X, r.members - y_members) for r in regions]
    sep = family_separation(stripped)
    if sep < 3 * B:
        raise PreconditionError(
            "regions minus Y are not separated enough",
            separation=None if sep == math.inf else sep, required=3 * B)
    if 3 * B - 2 * lam < lam:
        raise PreconditionError("separation arithmetic needs 3B - 2 lam "
                                ">= lam", B=B, lam=lam)
    if y_cov is not None:
        y_cov.check_covers()
        if lam > 0 and lebesgue_refutation(y_cov, lam, budget) is not None:
            raise PreconditionError(
                "Y cover must have Lebesgue number >= lam", lam=lam)

    for ri, (region, bare) in enumerate(zip(regions, stripped)):
        fringe = outer_neighborhood(bare, lam).members & uwin_members
        leak = fringe - region.members
        if leak:
            raise PreconditionError(
                "Y must absorb each region's lam-fringe: a window point "
                "within lam of a non-Y point falls outside that point's "
                "region", region=ri, point=min(leak))

    core = inner_neighborhood(PointSet(X, y_members), lam)
    expanded = [PointSet(X, r.members - core.members) for r in regions]
    esep = family_separation(expanded)
    if esep <= lam:
        raise PreconditionError(
            "regions leak around Y: after removing its deep interior they "
            "come within lam of each other, so small sets could straddle "
            "two regions", separation=esep, needed=lam + 1)

    wsets = []
    alpha_of = []
    for ai, (_, cov) in enumerate(family.members):
        for u in cov.sets:
            kept = u.members - core.members
            if kept:
                wsets.append(PointSet(X, kept))
                alpha_of.append(ai)
    region_part = len(wsets)
    wsets.extend(y_sets)
    out = Cover(X, tuple(wsets), uwin)

    cross = 0
    for x in uwin_members:
        seen = {alpha_of[i] for i in range(region_part)
                if x in wsets[i].members}
        cross = max(cross, len(seen))

    y_mult = 0 if y_cov is None else multiplicity(y_cov)
    cert = _CertBuilder()
    cert.claim("covers-union", "==", True, out.uncovered() == frozenset())
    cert.claim("mesh", "<=", max(B, _mesh(y_sets)), _mesh(out.sets))
    cert.claim("multiplicity", "<=",
               family.multiplicity_bound + y_mult,
               multiplicity(out))
    cert.lebesgue_floor("lebesgue-at-least", out, lam, budget)
    cert.claim("cross-region-incidence", "<=", 1, cross)
    return out, cert.build("union transport")


def disjoint_families_to_cover(families: Sequence[Sequence[PointSet]],
                               lam: int,
                               window: Optional[PointSet] = None,
                               budget: Optional[Budget] = None) -> tuple:
    """Enlarge n internally separated families into a cover.

    Every family must keep its sets more than 2 lam apart, so the
    lam-enlargements stay disjoint within a family and the multiplicity
    is at most the number of families; the Lebesgue floor lam comes from
    enlargement alone.
    """
    if lam < 0:
        raise PreconditionError("lam must be >= 0", lam=lam)
    flat = [s for fam in families for s in fam]
    if not flat:
        raise PreconditionError("need at least one set")
    X = flat[0].space
    if any(s.space is not X for s in flat):
        raise PreconditionError("all sets must share one space")
    for fi, fam in enumerate(families):
        sep = family_separation(list(fam))
        if sep <= 2 * lam:
            raise PreconditionError(
                "family sets must be more than 2 lam apart",
                family=fi, separation=sep, needed=2 * lam + 1)
    covered = frozenset().union(*(s.members for s in flat))
    if window is None:
        window = PointSet(X, covered)
    elif not window.members <= covered:
        raise NotACoverError("the families miss part of the window",
                             witness=min(window.members - covered))

    D = _mesh(flat)
    out_sets = tuple(outer_neighborhood(s, lam) for fam in families
                     for s in fam)
    out = Cover(X, out_sets, window)

    cert = _CertBuilder()
    cert.claim("covers-window", "==", True, out.uncovered() == frozenset())
    cert.claim("multiplicity", "<=", len(list(families)), multiplicity(out))
    cert.lebesgue_floor("lebesgue-at-least", out, lam, budget)
    cert.claim("mesh", "<=", D + 2 * lam, _mesh(out.sets))
    return out, cert.build("family enlargement")


# ---------------------------------------------------------------------------
# transport along a group action


@dataclass(frozen=True)
class ActionWindow:
    """A finite piece of a group acting on a space.

    group_space carries the word metric on the ball of the given radius
    around the identity; distances must be exact group distances (build
    windows with margin, or translation stops being an isometry here).
    orbit_map[g] is the target point g.x0; mul performs left translation
    and returns None when the product leaves the window. interior, when
    set, overrides the default certificate window of radius
    radius - (R + lam mu).
    """

    group_space: FiniteMetricSpace
    identity: int
    radius: int
    target: FiniteMetricSpace
    orbit_map: tuple
    mul: Callable[[int, int], Optional[int]]
    mu: int
    interior: Optional[PointSet] = None

    def __post_init__(self):
        object.__setattr__(self, "orbit_map", tuple(self.orbit_map))
        if len(self.orbit_map) != self.group_space.n:
            raise PreconditionError("orbit map must be total on the window")
        if not 0 <= self.identity < self.group_space.n:
            raise PreconditionError("identity index out of range")

    def base_point(self) -> int:
        return self.orbit_map[self.identity]

    def orbit(self) -> PointSet:
        return PointSet(self.target, frozenset(self.orbit_map))

    def wr_window(self, R) -> PointSet:
        x0 = self.base_point()
        tm = self.target.int_matrix
        members = frozenset(
            g for g in range(self.group_space.n)
            if int(tm[self.orbit_map[g], x0]) <= R)
        return PointSet(self.group_space, members)


def _audit_lipschitz(act: ActionWindow):
    # the orbit map contracts word-metric edges by at most mu; checking
    # the generator edges suffices because the word metric is geodesic
    gm = act.group_space.int_matrix
    tm = act.target.int_matrix
    gi, gj = np.nonzero(gm == 1)
    keep = gi < gj
    gi, gj = gi[keep], gj[keep]
    om = np.fromiter(act.orbit_map, dtype=np.intp)
    gaps = tm[om[gi], om[gj]]
    worst = int(gaps.max()) if gaps.size else 0
    if worst > act.mu:
        at = int(np.argmax(gaps))
        raise PreconditionError(
            "orbit map stretches a generator edge beyond mu",
            mu=act.mu, measured=worst, pair=(int(gi[at]), int(gj[at])))


def action_transport(orbit_cover: Cover, stab_cover: Cover,
                     act: ActionWindow, lam: int, R: int,
                     budget: Optional[Budget] = None) -> tuple:
    """Combine an orbit cover with a stabilizer-neighborhood cover.

    Output sets are translated stabilizer sets cut down to the preimage
    of their orbit set. Certificates are measured on an interior group
    window with margin R + lam mu, where the construction is immune to
    the truncation of both the orbit and the translated sets.
    """
    G = act.group_space
    X = act.target
    if orbit_cover.space is not X:
        raise PreconditionError("orbit cover must live on the target space")
    if stab_cover.space is not G:
        raise PreconditionError("stabilizer cover must live on the group "
                                "window")
    if lam < 0 or R < 0:
        raise PreconditionError("need lam >= 0 and R >= 0", lam=lam, R=R)
    _audit_lipschitz(act)

    orbit = act.orbit()
    if not orbit.members <= orbit_cover.window.members:
        raise PreconditionError("orbit cover window must span the orbit")
    orbit_cover.check_covers()
    mesh_orbit = _mesh(orbit_cover.sets)
    if 2 * mesh_orbit > R:
        raise PreconditionError("orbit cover mesh must be at most R/2",
                                mesh=mesh_orbit, R=R)
    floor_orbit = lam * act.mu
    if floor_orbit > 0 and \
            lebesgue_refutation(orbit_cover, floor_orbit, budget) is not None:
        raise PreconditionError(
            "orbit cover needs Lebesgue number >= lam mu",
            needed=floor_orbit)

    wr = act.wr_window(R)
    if stab_cover.window.members != wr.members:
        raise PreconditionError(
            "stabilizer cover window must equal the R-sublevel of the "
            "orbit map", expected=len(wr.members),
            got=len(stab_cover.window.members))
    stab_cover.check_covers()
    if lam > 0 and lebesgue_refutation(stab_cover, lam, budget) is not None:
        raise PreconditionError(
            "stabilizer cover needs Lebesgue number >= lam", lam=lam)

    if act.interior is not None:
        interior = act.interior
        if interior.space is not G:
            raise PreconditionError("interior override must live on the "
                                    "group window")
    else:
        margin = R + lam * act.mu
        inner_radius = act.radius - margin
        if inner_radius < 0:
            raise WindowTooSmallError(
                "group window cannot absorb the truncation margin",
                radius=act.radius, margin=margin)
        interior = ball(G, act.identity, inner_radius)

    # representatives: first point of each preimage in index order, which
    # follows word length for windows built by breadth-first search
    depth = G.int_matrix[act.identity]
    order = sorted(range(G.n), key=lambda g: (int(depth[g]), g))
    preimages = []
    reps = []
    x0 = act.base_point()
    tm = X.int_matrix
    for i, u in enumerate(orbit_cover.sets):
        pre = frozenset(g for g in range(G.n)
                        if act.orbit_map[g] in u.members)
        if not pre:
            preimages.append(None)
            reps.append(None)
            continue
        rep = next(g for g in order if g in pre)
        preimages.append(pre)
        reps.append(rep)
    if all(r is None for r in reps):
        want = min(int(tm[min(u.as_sorted(), key=lambda p: int(tm[p, x0])),
                         x0]) for u in orbit_cover.sets if u.members)
        raise WindowTooSmallError(
            "no orbit set has a representative inside the group window",
            required_radius_at_least=-(-want // max(act.mu, 1)))

    out_sets = []
    for i, u in enumerate(orbit_cover.sets):
        if reps[i] is None:
            continue
        g_u = reps[i]
        pre = preimages[i]
        for v in stab_cover.sets:
            members = frozenset(
                t for t in (act.mul(g_u, g) for g in v.members)
                if t is not None and t in pre)
            if members:
                out_sets.append(PointSet(G, members))
    out = Cover(G, tuple(out_sets), interior)

    cert = _CertBuilder()
    cert.claim("covers-interior", "==", True,
               out.uncovered() == frozenset())
    cert.lebesgue_floor("lebesgue-at-least", out, lam, budget)
    cert.claim("multiplicity", "<=",
               multiplicity(orbit_cover) * multiplicity(stab_cover),
               multiplicity(out))
    cert.claim("mesh", "<=", _mesh(stab_cover.sets), _mesh(out.sets))
    return out, cert.build("action transport")

"""Finitely generated groups as normal-form engines.

Every group is a GroupModel: canonical elements plus callables for the
group operations. Elements are plain hashable values (ints, tuples,
frozensets), never wrapped, so breadth-first exploration and coset
bookkeeping stay cheap. Letters are strings; the generating set is
always symmetric, with the pairing recorded in inverse_letter.

word_norm, when present, is an exact global word length (not a window
approximation); window builders use it to skip the BFS margin entirely.
tree_like marks groups whose Cayley graph is a tree, unlocking the
O(n^2) parent-array metric.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

from ..errors import PreconditionError


@dataclass(frozen=True)
class GroupModel:
    name: str
    letters: tuple
    inverse_letter: Mapping
    identity: object
    step: Callable          # (element, letter) -> element
    combine: Callable       # (element, element) -> element
    invert: Callable        # element -> element
    label: Callable         # element -> str
    word_norm: Optional[Callable] = None
    tree_like: bool = False
    # integer coordinates on which the word metric is plain l1; lets the
    # window builder vectorize the whole distance matrix
    coords: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        for s in self.letters:
            t = self.inverse_letter.get(s)
            if t is None or t not in self.letters:
                raise PreconditionError(
                    "generating set must be symmetric", letter=s)
            if self.inverse_letter[t] != s:
                raise PreconditionError(
                    "letter inversion must be an involution", letter=s)

    def normal_form(self, word) -> object:
        g = self.identity
        for s in word:
            if s not in self.inverse_letter:
                raise PreconditionError("unknown letter", letter=s)
            g = self.step(g, s)
        return g


def trivial_group() -> GroupModel:
    return GroupModel(
        name="trivial", letters=(), inverse_letter={}, identity=0,
        step=lambda g, s: g, combine=lambda g, h: 0, invert=lambda g: 0,
        label=lambda g: "e", word_norm=lambda g: 0)


def integers(gens=(1,)) -> GroupModel:
    """The integers with a custom symmetric generating set {+-g}.

    Word length has no closed form for general gens, so it is memoized
    from an expanding breadth-first table; gcd 1 guarantees termination.
    """
    vals = tuple(sorted(set(abs(int(g)) for g in gens)))
    if not vals or vals[0] == 0:
        raise PreconditionError("generators must be nonzero", gens=gens)
    if math.gcd(*vals) != 1:
        raise PreconditionError("generators must generate all of Z",
                                gens=gens)
    letters = []
    inv = {}
    stepof = {}
    for v in vals:
        plus, minus = f"t{v}+", f"t{v}-"
        letters += [plus, minus]
        inv[plus], inv[minus] = minus, plus
        stepof[plus], stepof[minus] = v, -v

    if vals == (1,):
        norm = abs
    else:
        table = {0: 0}
        frontier = [0]
        state = {"depth": 0}

        def norm(n):
            while n not in table:
                state["depth"] += 1
                nxt = []
                for m in frontier:
                    for v in vals:
                        for w in (m + v, m - v):
                            if w not in table:
                                table[w] = state["depth"]
                                nxt.append(w)
                frontier[:] = nxt
            return table[n]

    std = vals == (1,)
    return GroupModel(
        name="z" if std else "zgens:" + ",".join(map(str, vals)),
        letters=tuple(letters), inverse_letter=inv, identity=0,
        step=lambda g, s: g + stepof[s],
        combine=lambda g, h: g + h, invert=lambda g: -g,
        label=str, word_norm=norm, tree_like=std,
        coords=(lambda g: (g,)) if std else None)


def free_abelian(n: int) -> GroupModel:
    if n < 1:
        raise PreconditionError("rank must be >= 1", n=n)
    letters = []
    inv = {}
    stepof = {}
    for i in range(n):
        plus, minus = f"x{i + 1}+", f"x{i + 1}-"
        letters += [plus, minus]
        inv[plus], inv[minus] = minus, plus
        e = tuple(1 if j == i else 0 for j in range(n))
        stepof[plus] = e
        stepof[minus] = tuple(-c for c in e)

    def add(g, h):
        return tuple(a + b for a, b in zip(g, h))

    return GroupModel(
        name=f"z:{n}", letters=tuple(letters), inverse_letter=inv,
        identity=(0,) * n,
        step=lambda g, s: add(g, stepof[s]),
        combine=add, invert=lambda g: tuple(-c for c in g),
        label=lambda g: ",".join(map(str, g)),
        word_norm=lambda g: sum(abs(c) for c in g),
        tree_like=n == 1, coords=lambda g: g)


_FREE_NAMES = "abcdefgh"


def free_group(k: int) -> GroupModel:
    """Free group on k letters; elements are reduced words."""
    if not 1 <= k <= len(_FREE_NAMES):
        raise PreconditionError("rank out of supported range", k=k)
    letters = []
    inv = {}
    for i in range(k):
        a, ai = _FREE_NAMES[i], _FREE_NAMES[i] + "-"
        letters += [a, ai]
        inv[a], inv[ai] = ai, a

    def step(g, s):
        if g and g[-1] == inv[s]:
            return g[:-1]
        return g + (s,)

    def combine(g, h):
        out = g
        for s in h:
            out = step(out, s)
        return out

    return GroupModel(
        name=f"f:{k}", letters=tuple(letters), inverse_letter=inv,
        identity=(),
        step=step, combine=combine,
        invert=lambda g: tuple(inv[s] for s in reversed(g)),
        label=lambda g: "".join(g) if g else "e",
        word_norm=len, tree_like=True)


def cyclic_group(m: int) -> GroupModel:
    if m < 2:
        raise PreconditionError("order must be >= 2", m=m)
    if m == 2:
        letters, inv = ("r",), {"r": "r"}
    else:
        letters, inv = ("r", "r-"), {"r": "r-", "r-": "r"}
    delta = {"r": 1, "r-": -1}
    return GroupModel(
        name=f"cyclic:{m}", letters=letters, inverse_letter=inv, identity=0,
        step=lambda g, s: (g + delta[s]) % m,
        combine=lambda g, h: (g + h) % m, invert=lambda g: (-g) % m,
        label=str, word_norm=lambda g: min(g, m - g),
        tree_like=m == 2)


def symmetric_group(m: int) -> GroupModel:
    """S_m with the adjacent transpositions; word length is the
    inversion count."""
    if m < 2:
        raise PreconditionError("degree must be >= 2", m=m)
    letters = tuple(f"s{i}" for i in range(1, m))
    inv = {s: s for s in letters}
    at = {f"s{i}": i for i in range(1, m)}

    def step(g, s):
        i = at[s]
        out = list(g)
        out[i - 1], out[i] = out[i], out[i - 1]
        return tuple(out)

    def combine(g, h):
        return tuple(g[h[i]] for i in range(m))

    def invert(g):
        out = [0] * m
        for i, v in enumerate(g):
            out[v] = i
        return tuple(out)

    def inversions(g):
        return sum(1 for i in range(m) for j in range(i + 1, m)
                   if g[i] > g[j])

    return GroupModel(
        name=f"sym:{m}", letters=letters, inverse_letter=inv,
        identity=tuple(range(m)),
        step=step, combine=combine, invert=invert,
        label=lambda g: "".join(map(str, g)),
        word_norm=inversions, tree_like=m == 2)


def direct_product(G: GroupModel, H: GroupModel,
                   name: Optional[str] = None) -> GroupModel:
    letters = tuple(f"1.{s}" for s in G.letters) + \
        tuple(f"2.{s}" for s in H.letters)
    inv = {f"1.{s}": f"1.{G.inverse_letter[s]}" for s in G.letters}
    inv.update({f"2.{s}": f"2.{H.inverse_letter[s]}" for s in H.letters})

    def step(g, s):
        side, raw = s.split(".", 1)
        if side == "1":
            return (G.step(g[0], raw), g[1])
        return (g[0], H.step(g[1], raw))

    norm = None
    if G.word_norm and H.word_norm:
        def norm(g):
            return G.word_norm(g[0]) + H.word_norm(g[1])

    return GroupModel(
        name=name or f"product:{G.name}*{H.name}",
        letters=letters, inverse_letter=inv,
        identity=(G.identity, H.identity),
        step=step,
        combine=lambda g, h: (G.combine(g[0], h[0]), H.combine(g[1], h[1])),
        invert=lambda g: (G.invert(g[0]), H.invert(g[1])),
        label=lambda g: f"{G.label(g[0])}|{H.label(g[1])}",
        word_norm=norm, tree_like=False)


def free_product(G: GroupModel, H: GroupModel,
                 name: Optional[str] = None) -> GroupModel:
    """Free product; elements are alternating syllable tuples (side, value)
    with no identity values. Word length is the sum of the factor lengths
    of the syllables, which is exact because factor geodesics concatenate.
    """
    factors = (G, H)
    letters = tuple(f"0.{s}" for s in G.letters) + \
        tuple(f"1.{s}" for s in H.letters)
    inv = {f"0.{s}": f"0.{G.inverse_letter[s]}" for s in G.letters}
    inv.update({f"1.{s}": f"1.{H.inverse_letter[s]}" for s in H.letters})

    def push(syls, side, value):
        # append one factor element, merging with a same-side tail
        F = factors[side]
        if syls and syls[-1][0] == side:
            value = F.combine(syls[-1][1], value)
            syls = syls[:-1]
        if value == F.identity:
            return syls
        return syls + ((side, value),)

    def step(g, s):
        side, raw = s.split(".", 1)
        i = int(side)
        return push(g, i, factors[i].step(factors[i].identity, raw))

    def combine(g, h):
        out = g
        for side, value in h:
            out = push(out, side, value)
        return out

    def invert(g):
        return tuple((side, factors[side].invert(v))
                     for side, v in reversed(g))

    norm = None
    if G.word_norm and H.word_norm:
        def norm(g):
            return sum(factors[side].word_norm(v) for side, v in g)

    def label(g):
        if not g:
            return "e"
        return "".join(f"{'AB'[side]}({factors[side].label(v)})"
                       for side, v in g)

    return GroupModel(
        name=name or f"freeprod:{G.name}*{H.name}",
        letters=letters, inverse_letter=inv, identity=(),
        step=step, combine=combine, invert=invert, label=label,
        word_norm=norm,
        tree_like=G.tree_like and H.tree_like)


def central_double(p: int = 2, q: int = 3) -> GroupModel:
    """<x, y | x^p = y^q>, the amalgam of two copies of Z over a central
    edge group. Elements are (carrier, syllables): z = x^p is central, so
    every element is uniquely z^c times an alternating word in the coset
    representatives x^1..x^{p-1} and y^1..y^{q-1}.
    """
    if p < 2 or q < 2:
        raise PreconditionError("exponents must be >= 2", p=p, q=q)
    mod = (p, q)
    letters = ("x", "x-", "y", "y-")
    inv = {"x": "x-", "x-": "x", "y": "y-", "y-": "y"}
    side_of = {"x": 0, "x-": 0, "y": 1, "y-": 1}
    delta = {"x": 1, "x-": -1, "y": 1, "y-": -1}

    def push(c, syls, side, n):
        if syls and syls[-1][0] == side:
            n += syls[-1][1]
            syls = syls[:-1]
        carry, r = divmod(n, mod[side])
        c += carry
        if r:
            syls = syls + ((side, r),)
        return c, syls

    def step(g, s):
        c, syls = push(g[0], g[1], side_of[s], delta[s])
        return (c, syls)

    def combine(g, h):
        c, syls = g[0] + h[0], g[1]
        for side, r in h[1]:
            c, syls = push(c, syls, side, r)
        return (c, syls)

    def invert(g):
        c, syls = -g[0], ()
        for side, r in reversed(g[1]):
            c, syls = push(c, syls, side, -r)
        return (c, syls)

    def label(g):
        parts = [f"z{g[0]}"] if g[0] else []
        parts += [f"{'xy'[side]}{r}" for side, r in g[1]]
        return ".".join(parts) if parts else "e"

    return GroupModel(
        name=f"amalgam:z*_z({p},{q})", letters=letters, inverse_letter=inv,
        identity=(0, ()),
        step=step, combine=combine, invert=invert, label=label)


def baumslag_solitar(m: int) -> GroupModel:
    """BS(1, m) = <a, t | t a t^-1 = a^m> as affine maps x -> m^k x + u
    with u in Z[1/m]; composition is the group law, so no rewriting is
    needed. m = 1 degenerates to Z^2.
    """
    if m < 1:
        raise PreconditionError("m must be >= 1", m=m)
    letters = ("a", "a-", "t", "t-")
    inv = {"a": "a-", "a-": "a", "t": "t-", "t-": "t"}
    base = Fraction(m)

    def step(g, s):
        u, k = g
        if s == "a":
            return (u + base ** k, k)
        if s == "a-":
            return (u - base ** k, k)
        if s == "t":
            return (u, k + 1)
        return (u, k - 1)

    def combine(g, h):
        return (g[0] + base ** g[1] * h[0], g[1] + h[1])

    def invert(g):
        return (-g[0] / base ** g[1], -g[1])

    return GroupModel(
        name=f"bs:1,{m}", letters=letters, inverse_letter=inv,
        identity=(Fraction(0), 0),
        step=step, combine=combine, invert=invert,
        label=lambda g: f"({g[0]},{g[1]})")


def lamplighter() -> GroupModel:
    """Z/2 wr Z: a cursor on the line plus a frozenset of lit lamps."""
    letters = ("t+", "t-", "s")
    inv = {"t+": "t-", "t-": "t+", "s": "s"}

    def step(g, s):
        lamps, c = g
        if s == "t+":
            return (lamps, c + 1)
        if s == "t-":
            return (lamps, c - 1)
        return (lamps ^ {c}, c)

    def combine(g, h):
        lamps = g[0] ^ frozenset(p + g[1] for p in h[0])
        return (lamps, g[1] + h[1])

    def invert(g):
        return (frozenset(p - g[1] for p in g[0]), -g[1])

    def label(g):
        lit = ",".join(map(str, sorted(g[0]))) or "-"
        return f"{lit}@{g[1]}"

    return GroupModel(
        name="lamplighter", letters=letters, inverse_letter=inv,
        identity=(frozenset(), 0),
        step=step, combine=combine, invert=invert, label=label)


def wreath_zz() -> GroupModel:
    """Z wr Z: finitely supported Z-valued lamps plus a cursor. Word
    lengths come from BFS only; the closed form is a traveling-salesman
    expression this engine does not commit to."""
    letters = ("t+", "t-", "u+", "u-")
    inv = {"t+": "t-", "t-": "t+", "u+": "u-", "u-": "u+"}

    def bump(cfg, pos, dv):
        d = dict(cfg)
        d[pos] = d.get(pos, 0) + dv
        if d[pos] == 0:
            del d[pos]
        return tuple(sorted(d.items()))

    def step(g, s):
        cfg, c = g
        if s == "t+":
            return (cfg, c + 1)
        if s == "t-":
            return (cfg, c - 1)
        return (bump(cfg, c, 1 if s == "u+" else -1), c)

    def combine(g, h):
        cfg = g[0]
        for p, v in h[0]:
            cfg = bump(cfg, p + g[1], v)
        return (cfg, g[1] + h[1])

    def invert(g):
        return (tuple(sorted((p - g[1], -v) for p, v in g[0])), -g[1])

    def label(g):
        lit = ",".join(f"{p}:{v}" for p, v in g[0]) or "-"
        return f"{lit}@{g[1]}"

    return GroupModel(
        name="zwrz", letters=letters, inverse_letter=inv,
        identity=((), 0),
        step=step, combine=combine, invert=invert, label=label)


# ---------------------------------------------------------------------------
# name registry


def parse_group(spec: str) -> GroupModel:
    """Build a zoo group from its command-line name."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "trivial":
            return trivial_group()
        if kind in ("z", "zn"):
            return free_abelian(int(arg or 1))
        if kind == "zgens":
            return integers(tuple(int(v) for v in arg.split(",")))
        if kind in ("f", "fk"):
            return free_group(int(arg or 2))
        if kind == "cyclic":
            return cyclic_group(int(arg))
        if kind == "sym":
            return symmetric_group(int(arg))
        if kind == "lamplighter":
            return lamplighter()
        if kind == "zwrz":
            return wreath_zz()
        if kind == "trefoil":
            return central_double(2, 3)
        if kind == "bs":
            one, m = arg.split(",")
            if int(one) != 1:
                raise PreconditionError(
                    "only ascending HNN over Z is modeled", spec=spec)
            return baumslag_solitar(int(m))
        if kind == "amalgam":
            left, _, right = arg.partition("*")
            return free_product(_vertex(left), _vertex(right),
                                name=f"amalgam:{arg}")
    except (ValueError, TypeError) as e:
        raise PreconditionError("malformed group spec", spec=spec,
                                reason=str(e))
    raise PreconditionError("unknown group name", spec=spec)


def _vertex(tag: str) -> GroupModel:
    if tag == "z":
        return integers((1,))
    if tag.startswith("z") and tag[1:].isdigit():
        return cyclic_group(int(tag[1:]))
    raise PreconditionError("unknown vertex group", tag=tag)


ZOO_NAMES = (
    "trivial", "z:<n>", "zgens:<v1,v2,..>", "f:<k>", "cyclic:<m>",
    "sym:<m>", "amalgam:z2*z3", "amalgam:z*z", "trefoil", "bs:1,<m>",
    "lamplighter", "zwrz",
)

"""Relative word metrics and the nested-ball decomposition.

The closed-form length for free groups rel cyclic letter subgroups has a
pencil-and-paper definition (letters outside every peripheral alphabet
count one each, maximal peripheral runs count one each), so the expected
values below were computed by hand and frozen.
"""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adkit.errors import (CertificateError, PreconditionError,
                          WindowTooSmallError)
from adkit.groups import (cayley_window, f2_rel_a, free_rel_cyclic,
                          relhyp_ball_decompose, relhyp_by_name,
                          relhyp_metric)
from adkit.groups.models import free_group


def _word(G, text):
    g = G.identity
    for s in text.split():
        g = G.step(g, s)
    return g


# ---------------------------------------------------------------------------
# the length oracle


def test_length_closed_form():
    rh = f2_rel_a()
    G = rh.group
    cases = [
        ("", 0),
        ("a a a a a", 1),          # one run
        ("a a b a a a", 3),        # run, letter, run
        ("b a b", 3),
        ("b b b b", 4),            # b is not peripheral here
        ("a- a- b- a", 3),
    ]
    for text, want in cases:
        assert rh.rh_length(_word(G, text)) == want, text


def test_length_two_peripherals():
    rh = relhyp_by_name("f2|a,b")
    G = rh.group
    assert rh.rh_length(_word(G, "a b a b")) == 4
    assert rh.rh_length(_word(G, "a a a b b")) == 2
    assert rh.rh_length(_word(G, "a a- ")) == 0  # reduces to e


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["a", "a-", "b", "b-"]), max_size=8),
       st.lists(st.sampled_from(["a", "a-", "b", "b-"]), max_size=8))
def test_length_is_a_length(u, v):
    rh = f2_rel_a()
    G = rh.group
    g = _word(G, " ".join(u))
    h = _word(G, " ".join(v))
    lg = rh.rh_length(g)
    assert lg == rh.rh_length(G.invert(g))
    assert lg <= G.word_norm(g)
    assert rh.rh_length(G.combine(g, h)) <= lg + rh.rh_length(h)
    assert (lg == 0) == (g == G.identity)


# ---------------------------------------------------------------------------
# registry and validation


def test_registry_names():
    assert relhyp_by_name("relhyp:f2|a").label == "relhyp:f2|a"
    rh = relhyp_by_name("f2|a,b")
    assert tuple(p.name for p in rh.peripherals) == ("<a>", "<b>")


@pytest.mark.parametrize("bad", ["f2", "z|a", "f2|", "relhyp:g3|a"])
def test_registry_rejects(bad):
    with pytest.raises(PreconditionError):
        relhyp_by_name(bad)


def test_factory_rejects_bad_letters():
    with pytest.raises(PreconditionError):
        free_rel_cyclic(2, ("a", "a"))
    with pytest.raises(PreconditionError):
        free_rel_cyclic(2, ("a-",))
    with pytest.raises(PreconditionError):
        free_rel_cyclic(2, ("c",))


def test_validate_catches_broken_strip():
    rh = f2_rel_a()
    broken = dataclasses.replace(
        rh,
        peripherals=(dataclasses.replace(
            rh.peripherals[0], strip=lambda g: rh.group.identity),))
    with pytest.raises(CertificateError):
        broken.validate()


def test_validate_catches_degenerate_length():
    broken = dataclasses.replace(f2_rel_a(), rh_length=lambda g: 0)
    with pytest.raises(CertificateError):
        broken.validate()


# ---------------------------------------------------------------------------
# the metric on a window


def test_metric_window():
    rh = f2_rel_a()
    sp = relhyp_metric(rh, 3)
    assert sp.n == 53
    assert sp.meta["metric"] == "rel-word:closed-form"
    assert sp.meta["may_truncate"] is False
    assert sp.meta["compute_radius"] == 3
    lab = {l: i for i, l in enumerate(sp.labels)}
    assert sp.int_matrix[lab["e"], lab["ab"]] == 2
    plain = cayley_window(rh.group, 3)
    assert plain.labels == sp.labels
    assert (sp.int_matrix <= plain.int_matrix).all()
    # the peripheral coset is uniformly at distance one
    powers = [lab[l] for l in ("a", "a-", "aa", "a-a-", "aaa", "a-a-a-")]
    for i in powers:
        assert sp.int_matrix[lab["e"], i] == 1
        for j in powers:
            assert sp.int_matrix[i, j] <= 1


def test_metric_graph_fallback_matches_closed_form():
    rh = f2_rel_a()
    exact = relhyp_metric(rh, 2)
    blind = dataclasses.replace(rh, rh_length=None)
    bfs = relhyp_metric(blind, 2)
    assert bfs.meta["metric"] == "rel-word:graph-bfs"
    assert bfs.meta["may_truncate"] is True
    assert bfs.meta["compute_radius"] == 4
    assert np.array_equal(bfs.int_matrix, exact.int_matrix)


def test_metric_cross_check_trips_on_wrong_oracle():
    # plain word length is a perfectly valid length, but not this metric;
    # the build-time audit against the edge graph must refuse it
    rh = dataclasses.replace(f2_rel_a(), rh_length=lambda g: len(g))
    rh.validate()
    with pytest.raises(CertificateError) as exc:
        relhyp_metric(rh, 2)
    assert exc.value.details["oracle"] > exc.value.details["graph"]


# ---------------------------------------------------------------------------
# ball decomposition


def test_decompose_f2_rel_a():
    rh = f2_rel_a()
    d = relhyp_ball_decompose(rh, 2, 2)
    assert d.radius == 6
    assert d.ball_sizes == (1, 15, 57)
    assert d.letter_piece_sizes == (15, 15, 13, 13)
    assert d.y_size == 107
    f = d.family("<a>")
    assert f.reps == ("e", "b", "b-")
    assert f.piece_sizes == (13, 11, 11)
    assert f.trimmed_sizes == (0, 6, 6)
    assert f.separation == 8
    assert f.passed and d.passed


def test_decompose_small_ball():
    d = relhyp_ball_decompose(f2_rel_a(), 1, 1)
    assert d.radius == 3
    assert d.ball_sizes == (1, 9)
    assert d.letter_piece_sizes == (1, 1, 1, 1)
    f = d.family("<a>")
    assert f.piece_sizes == (7,)
    assert f.trimmed_sizes == (4,)
    assert f.separation == math.inf  # single surviving piece
    assert d.y_size == 5
    assert d.passed


def test_decompose_two_peripherals():
    d = relhyp_ball_decompose(relhyp_by_name("f2|a,b"), 1, 1)
    assert d.ball_sizes == (1, 13)
    for name in ("<a>", "<b>"):
        f = d.family(name)
        assert f.piece_sizes == (7,)
        assert f.trimmed_sizes == (4,)
        assert f.passed
    assert d.passed


def test_decompose_window_too_small():
    with pytest.raises(WindowTooSmallError) as exc:
        relhyp_ball_decompose(f2_rel_a(), 2, 5, R=6)
    assert exc.value.details["required_radius_at_least"] == 9


def test_decompose_needs_oracle():
    blind = dataclasses.replace(f2_rel_a(), rh_length=None)
    with pytest.raises(PreconditionError):
        relhyp_ball_decompose(blind, 1, 1)


def test_decompose_guards():
    rh = f2_rel_a()
    with pytest.raises(PreconditionError):
        relhyp_ball_decompose(rh, 0, 1)
    with pytest.raises(PreconditionError):
        relhyp_ball_decompose(rh, 1, -1)

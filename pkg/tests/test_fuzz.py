"""The fuzz harness itself: generators deliver their advertised margins,
the exhaustive reference matches hand-checked values, and each suite
passes at reduced counts (full counts run in the acceptance gate)."""

import random

import numpy as np
import pytest

from adkit.cover import lebesgue_number, multiplicity
from adkit.errors import PreconditionError
from adkit.estimator import ad_exact
from adkit.fuzz import (SUITES, fuzz_blob_cover, fuzz_ladder_cover,
                        fuzz_space, fuzz_union_instance, naive_ad_reference,
                        run_suite)
from adkit.metric import cycle_space, family_separation, path_space


def test_ladder_margin():
    rng = random.Random(3)
    for _ in range(20):
        cover, L = fuzz_ladder_cover(rng, min_lebesgue=4)
        assert L >= 4
        assert not cover.uncovered()
        assert lebesgue_number(cover) == L


def test_union_instance_valid():
    rng = random.Random(5)
    for _ in range(20):
        family, lam, B = fuzz_union_instance(rng)
        regions = family.regions()
        total = sum(len(r.members) for r in regions)
        assert total <= 14
        assert family_separation(list(regions)) >= 3 * B
        assert 1 <= lam <= B


def test_blob_cover_covers():
    rng = random.Random(9)
    for _ in range(20):
        space = fuzz_space(rng)
        cover = fuzz_blob_cover(rng, space)
        assert not cover.uncovered()


def test_space_generator_deterministic():
    a = fuzz_space(random.Random(11))
    b = fuzz_space(random.Random(11))
    assert a.n == b.n
    assert np.array_equal(a.int_matrix, b.int_matrix)


def test_reference_hand_values():
    assert naive_ad_reference(path_space(5), 1, 2) == 1
    assert naive_ad_reference(path_space(5), 4, 4) == 0
    assert naive_ad_reference(cycle_space(6), 1, 2) == 1


def test_reference_guards():
    with pytest.raises(PreconditionError):
        naive_ad_reference(path_space(13), 1, 2)
    with pytest.raises(PreconditionError):
        naive_ad_reference(path_space(5), 3, 2)


def test_reference_agrees_with_exact():
    rng = random.Random(21)
    for _ in range(25):
        space = fuzz_space(rng, n_lo=4, n_hi=9)
        lam = rng.randint(1, 3)
        D = rng.randint(lam, lam + 3)
        want = naive_ad_reference(space, lam, D)
        assert ad_exact(space, lam, D, space.full_set()) == want


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suite_passes_small(name):
    rep = run_suite(name, count=25, seed=7)
    assert rep.passed, rep.failures
    assert rep.count == 25
    assert rep.line().startswith(f"{name}: pass on 25 instances")


def test_suite_unknown():
    with pytest.raises(PreconditionError):
        run_suite("nope")

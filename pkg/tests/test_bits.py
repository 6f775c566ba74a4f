"""Tests for the integer bit-vector helpers."""

import random

from rulecover.bits import all_ones, bit_indices, intersect_all, pack_bools, subset_bits


def test_all_ones_small_values():
    assert all_ones(0) == 0
    assert all_ones(1) == 0b1
    assert all_ones(3) == 0b111
    assert all_ones(64) == (1 << 64) - 1


def test_pack_bools_matches_manual_encoding():
    flags = [True, False, False, True, True]
    x = pack_bools(flags)
    assert x == 0b11001
    assert [bool(x >> i & 1) for i in range(5)] == flags


def test_bit_indices_roundtrip():
    rng = random.Random(7)
    for _ in range(200):
        n = rng.randrange(1, 300)
        rows = sorted(rng.sample(range(n), rng.randrange(0, n)))
        x = sum(1 << i for i in rows)
        assert list(bit_indices(x)) == rows


def test_bit_indices_empty():
    assert list(bit_indices(0)) == []


def test_subset_bits_renumbers_kept_rows():
    x = 0b10110
    # keep rows 1, 2, 4 -> bits (1, 1, 1) -> 0b111
    assert subset_bits(x, [1, 2, 4]) == 0b111
    # keep rows 0, 3 -> bits (0, 0) -> 0
    assert subset_bits(x, [0, 3]) == 0


def test_subset_bits_random_matches_per_row_check():
    rng = random.Random(21)
    for _ in range(100):
        n = rng.randrange(1, 120)
        x = rng.getrandbits(n)
        rows = sorted(rng.sample(range(n), rng.randrange(0, n + 1)))
        y = subset_bits(x, rows)
        for new_i, old_i in enumerate(rows):
            assert (y >> new_i & 1) == (x >> old_i & 1)
        assert y < (1 << len(rows)) if rows else y == 0


def test_intersect_all_empty_is_universe():
    assert intersect_all([], 0b1111) == 0b1111


def test_intersect_all_matches_loop():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randrange(1, 80)
        universe = all_ones(n)
        cols = [rng.getrandbits(n) for _ in range(rng.randrange(0, 5))]
        expect = universe
        for c in cols:
            expect &= c
        assert intersect_all(cols, universe) == expect

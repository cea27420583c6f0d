from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from src.codes.bitlinear import rank
from src.codes.errors import InvalidParams, InvalidRepairSets
from src.codes.evenodd import CodeParams, encode_row
from src.codes.te2 import (
    TePair,
    TeParams,
    bar,
    evenodd_info_repair_sets,
    evenodd_repair,
    star,
    te2_code,
    te2_decode,
    te2_encode,
    te2_repair,
)

PARAMS = TeParams(3, 5)
M = PARAMS.modulus

BASE_SETS = {
    0: {1: (0, 1, 2, 3), 2: (0, 1, 2), 3: (0, 1), 4: (2, 3)},
    1: {0: (0, 1, 3), 2: (0, 1, 2), 3: (0, 1), 4: (1, 3)},
    2: {0: (0, 1), 1: (0, 1, 3), 3: (0, 1), 4: (0, 1)},
}


def random_word(seed: int, params: TeParams = PARAMS):
    rng = random.Random(seed)
    m = params.modulus
    info = [TePair(m.random(rng), m.random(rng)) for _ in range(params.k)]
    return te2_encode(info, params)


def without(word, f: int) -> dict[int, TePair]:
    return {c: col for c, col in enumerate(word) if c != f}


def test_star_and_bar() -> None:
    assert star(M.from_bits([1, 0, 0, 0])) == M.from_bits([0, 1, 0, 0])
    assert star(M.from_bits([1, 1, 0, 1])) == M.from_bits([1, 1, 1, 0])
    assert bar(M.from_bits([1, 1, 1, 1])) == M.from_bits([1, 0, 1, 0])


def test_params() -> None:
    assert (PARAMS.n, PARAMS.d, PARAMS.column_bits, PARAMS.half) == (5, 4, 8, 2)
    assert PARAMS.info_repairable
    assert not TeParams(3, 7).info_repairable
    with pytest.raises(InvalidParams):
        TeParams(3, 6)


def test_parity_columns_follow_the_worked_table() -> None:
    code = te2_code(PARAMS)
    w, h = PARAMS.column_bits, PARAMS.vector_bits

    def a(i: int, j: int) -> frozenset[int]:
        return frozenset({j * w + i})

    def b(i: int, j: int) -> frozenset[int]:
        return frozenset({j * w + h + i})

    def row_parity(v, i: int) -> frozenset[int]:
        return v(i, 0) ^ v(i, 1) ^ v(i, 2)

    def diagonal_parity(v, i: int) -> frozenset[int]:
        adjuster = v(3, 1) ^ v(2, 2)
        return [
            v(0, 0) ^ v(3, 2),
            v(1, 0) ^ v(0, 1),
            v(2, 0) ^ v(1, 1) ^ v(0, 2),
            v(3, 0) ^ v(2, 1) ^ v(1, 2),
        ][i] ^ adjuster

    expected = {}
    for i in range(h):
        for j in range(PARAMS.k):
            expected[j, i], expected[j, h + i] = a(i, j), b(i, j)
        expected[3, i] = row_parity(a, i) ^ row_parity(b, i)
        expected[3, h + i] = diagonal_parity(b, i)
        expected[4, h + i] = diagonal_parity(a, i)
    # a_3 + bar(b_3) + star(b_3) row by row
    expected[4, 0] = row_parity(a, 0) ^ row_parity(b, 0) ^ row_parity(b, 1)
    expected[4, 1] = row_parity(a, 1) ^ row_parity(b, 0)
    expected[4, 2] = row_parity(a, 2) ^ row_parity(b, 2) ^ row_parity(b, 3)
    expected[4, 3] = row_parity(a, 3) ^ row_parity(b, 2)

    assert len(expected) == PARAMS.n * w
    for (column, i), support in expected.items():
        row = np.zeros(PARAMS.k * w, dtype=np.uint8)
        row[sorted(support)] = 1
        assert np.array_equal(code.generator[column * w + i], row), (column, i)


def test_zero_info() -> None:
    zero = TePair(M.zero(), M.zero())
    assert all(col == zero for col in te2_encode([zero] * 3, PARAMS))


def test_every_k_subset_determines_the_message() -> None:
    code = te2_code(PARAMS)
    w = code.column_bits
    for subset in itertools.combinations(range(code.n), code.k):
        rows = [c * w + i for c in subset for i in range(w)]
        assert rank(code.generator[rows]) == code.k * w


def test_decode_from_every_k_subset() -> None:
    word = random_word(1)
    for subset in itertools.combinations(range(5), 3):
        assert te2_decode({c: word[c] for c in subset}, PARAMS) == word[:3]


# ── Base repair sets ────────────────────────────────────────────────────────


@pytest.mark.parametrize("f", [0, 1, 2])
def test_base_repair_sets(f: int) -> None:
    assert evenodd_info_repair_sets(f, 3, 5) == BASE_SETS[f]


def test_base_repair_reads_ten_bits() -> None:
    base = CodeParams(3, 2, 5)
    rng = random.Random(2)
    row = encode_row([M.random(rng) for _ in range(3)], base)
    column, report = evenodd_repair(1, {c: v for c, v in enumerate(row) if c != 1}, 3, 5)
    assert column == row[1]
    assert report.bits_transferred == 10


@pytest.mark.parametrize("p,k", [(5, 2), (5, 4), (5, 5), (7, 3), (11, 6), (13, 4)])
def test_row_parity_set_is_the_upper_half(p: int, k: int) -> None:
    h = (p - 1) // 2
    for f in range(k):
        sets = evenodd_info_repair_sets(f, k, p)
        assert sets[k] == tuple(range(h))
        assert f not in sets


def test_parity_column_is_not_an_information_column() -> None:
    with pytest.raises(InvalidParams):
        evenodd_info_repair_sets(3, 3, 5)


# ── Transformed repair ──────────────────────────────────────────────────────


@pytest.mark.parametrize("f,bits", [(0, 22), (1, 20), (2, 18), (3, 16), (4, 16)])
def test_repair_downloads(f: int, bits: int) -> None:
    word = random_word(f + 10)
    column, report = te2_repair(f, without(word, f), PARAMS)
    assert column == word[f]
    assert report.bits_transferred == bits
    assert report.optimal_bits == 16


@pytest.mark.parametrize("f", [0, 1, 2])
def test_information_repair_costs_twice_the_base(f: int) -> None:
    word = random_word(f + 20)
    _, report = te2_repair(f, without(word, f), PARAMS)
    assert report.bits_transferred == 2 * sum(len(rows) for rows in BASE_SETS[f].values())


@pytest.mark.parametrize("f", [3, 4])
def test_parity_repair_is_optimal(f: int) -> None:
    word = random_word(f + 30)
    _, report = te2_repair(f, without(word, f), PARAMS)
    assert report.ratio == 1
    assert report.uncoded


def test_larger_k_repairs_every_column() -> None:
    params = TeParams(5, 5)
    word = random_word(40, params)
    for f in range(params.n):
        column, _ = te2_repair(f, without(word, f), params)
        assert column == word[f]


def test_information_repair_needs_p_minus_one_divisible_by_four() -> None:
    params = TeParams(3, 7)
    word = random_word(50, params)
    with pytest.raises(InvalidParams):
        te2_repair(0, without(word, 0), params)
    column, _ = te2_repair(3, without(word, 3), params)
    assert column == word[3]


def test_bad_row_parity_set_is_refused() -> None:
    word = random_word(60)
    sets = dict(BASE_SETS[1])
    sets[3] = (0,)
    with pytest.raises(InvalidRepairSets):
        te2_repair(1, without(word, 1), PARAMS, base_repair_sets=sets)


def test_out_of_range_column() -> None:
    with pytest.raises(InvalidParams):
        te2_repair(5, without(random_word(0), 0), PARAMS)

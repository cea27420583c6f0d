from __future__ import annotations

import random

import pytest

from src.codes.errors import InvalidTransform
from src.codes.evenodd import CodeParams, encode
from src.codes.transform import (
    InstanceBundle,
    TransformSpec,
    default_coefficient,
    first_transform,
    layer_pairs,
    pair_forward,
    pair_solve,
    systematic_transform,
    transform_equivalence_check,
)
from src.ring.core import Modulus

PARAMS = CodeParams(4, 2, 5)
M = PARAMS.modulus


# x^(p-1) for p=5
X = PARAMS.p - 1

# Two first transforms, partitions {0,1} then {2,3}, over four base instances.
FIRST_TRANSFORM_TWICE = {
    (0, 0): [(0, 0, 0)],
    (0, 1): [(0, 1, 0), (1, 0, 0), (1, 0, 1)],
    (0, 2): [(0, 2, 0)],
    (0, 3): [(0, 3, 0), (1, 2, 0), (1, 2, 1)],
    (1, 0): [(1, 0, 0), (0, 1, 0)],
    (1, 1): [(1, 1, 0)],
    (1, 2): [(1, 2, 0), (0, 3, 0)],
    (1, 3): [(1, 3, 0)],
    (2, 0): [(2, 0, 0)],
    (2, 1): [(2, 1, 0)],
    (2, 2): [(2, 2, 0), (3, 0, 0), (3, 0, 1)],
    (2, 3): [(2, 3, 0), (3, 1, 0), (3, 1, 1)],
    (3, 0): [(3, 0, 0), (2, 2, 0)],
    (3, 1): [(3, 1, 0), (2, 3, 0)],
    (3, 2): [(3, 2, 0)],
    (3, 3): [(3, 3, 0)],
    **{(c, row): [(c, row, 0)] for c in (4, 5) for row in range(4)},
}

# Systematic form of one transform on {0,1}; rows are the two instances.
SYSTEMATIC_ONE_LAYER = {
    **{(c, row): [(c, row, 0)] for c in range(4) for row in range(2)},
    (4, 0): [(0, 0, 0), (1, 0, X), (0, 1, X), (2, 0, 0), (3, 0, 0)],
    (4, 1): [(0, 1, X), (1, 0, 0), (1, 0, X), (1, 1, 0), (2, 1, 0), (3, 1, 0)],
    (5, 0): [(0, 0, 0), (1, 0, 0), (0, 1, 0), (2, 0, 2), (3, 0, 3)],
    (5, 1): [(0, 1, X), (1, 0, 0), (1, 0, X), (1, 1, 1), (2, 1, 2), (3, 1, 3)],
}


def codeword(rng: random.Random):
    return encode([M.random(rng) for _ in range(PARAMS.k)], PARAMS)


def spec(start: int = 0, t: int = 2, systematic: bool = False, e: int = 1) -> TransformSpec:
    return TransformSpec.contiguous(start, t, PARAMS.n, M, e=e, systematic=systematic)


def test_default_coefficient_is_one_plus_x_e() -> None:
    assert default_coefficient(M, 2) == M.one() + M.monomial(2)


def test_coefficient_plus_one_must_be_invertible() -> None:
    c12 = Modulus.circulant(12)
    # 1 + x^4 + x^8 divides 1 + x^12
    with pytest.raises(InvalidTransform):
        TransformSpec(0, 2, 4, c12.element(1 | 1 << 4 | 1 << 8))
    with pytest.raises(InvalidTransform):
        TransformSpec(0, 2, 6, M.one())


def test_partition_must_fit() -> None:
    with pytest.raises(InvalidTransform):
        spec(t=7)
    with pytest.raises(InvalidTransform):
        TransformSpec(6, 2, 6, default_coefficient(M, 1))


def test_wrapping_partition_is_allowed() -> None:
    assert TransformSpec.contiguous(5, 2, 6, M).columns == (5, 0)


def test_pair_solve_examples() -> None:
    s = spec()
    zero = M.zero()
    assert pair_solve(zero, zero, s) == (zero, zero)

    one, x = M.one(), M.monomial(1)
    u = one + (one + x) * x
    v = x + one
    assert u == M.element(0b111)
    assert pair_solve(u, v, s) == (one, x)


def test_pair_solve_round_trip() -> None:
    rng = random.Random(5)
    for e in (1, 2, 3, 4):
        s = spec(e=e)
        for _ in range(250):
            a, b = M.random(rng), M.random(rng)
            assert pair_solve(*pair_forward(a, b, s), s) == (a, b)


def test_pair_solve_on_vectors() -> None:
    rng = random.Random(6)
    s = spec()
    a = [M.random(rng) for _ in range(4)]
    b = [M.random(rng) for _ in range(4)]
    fwd = [pair_forward(x, y, s) for x, y in zip(a, b)]
    assert pair_solve([f[0] for f in fwd], [f[1] for f in fwd], s) == (a, b)
    with pytest.raises(InvalidTransform):
        pair_solve(a, b[:3], s)


def test_layer_pairs_follow_row_digits() -> None:
    s = spec()
    assert list(layer_pairs(s, 1, 2)) == [(0, 1, 1, 0)]
    assert list(layer_pairs(s, 2, 4)) == [(0, 2, 1, 0), (0, 3, 1, 1)]


def test_t1_is_identity() -> None:
    rng = random.Random(0)
    word = codeword(rng)
    one = spec(t=1)
    assert first_transform(InstanceBundle((word,)), one) == word
    assert transform_equivalence_check(InstanceBundle((word,)), one)


def test_first_transform_pairs_partition_columns() -> None:
    rng = random.Random(1)
    w0, w1 = codeword(rng), codeword(rng)
    out = first_transform(InstanceBundle((w0, w1)), spec())
    c = default_coefficient(M, 1)

    assert out.params.layers == 1 and out.params.d == 5
    assert out.columns[0] == (w0.columns[0][0], w1.columns[0][0] + c * w0.columns[1][0])
    assert out.columns[1] == (w0.columns[1][0] + w1.columns[0][0], w1.columns[1][0])
    for col in range(2, 6):
        assert out.columns[col] == (w0.columns[col][0], w1.columns[col][0])


def test_second_layer_couples_across_instances(assert_worked_table) -> None:
    def build(info):
        words = [encode([info[c][i] for c in range(PARAMS.k)], PARAMS) for i in range(4)]
        t0 = first_transform(InstanceBundle((words[0], words[1])), spec(0))
        t1 = first_transform(InstanceBundle((words[2], words[3])), spec(0))
        out = first_transform(InstanceBundle((t0, t1)), spec(2))
        assert out.params.layers == 2
        base = [[words[i].columns[c][0] for i in range(4)] for c in range(PARAMS.n)]
        return out.columns, base

    assert_worked_table(build, FIRST_TRANSFORM_TWICE, M, PARAMS.k, 4)


def test_bundle_width_must_match() -> None:
    rng = random.Random(3)
    with pytest.raises(InvalidTransform):
        first_transform(InstanceBundle((codeword(rng),)), spec())


def test_systematic_transform_matches_worked_table(assert_worked_table) -> None:
    def build(info):
        return systematic_transform(info, spec(systematic=True), PARAMS).columns, info

    assert_worked_table(build, SYSTEMATIC_ONE_LAYER, M, PARAMS.k, 2)


def test_systematic_zero_info() -> None:
    zero = M.zero()
    out = systematic_transform([[zero, zero]] * 4, spec(systematic=True), PARAMS)
    assert all(v == zero for col in out.columns for v in col)


def test_systematic_partition_must_be_information() -> None:
    zero = M.zero()
    with pytest.raises(InvalidTransform):
        systematic_transform([[zero, zero]] * 4, spec(start=3), PARAMS)


@pytest.mark.parametrize("start", [0, 1, 2, 4])
def test_equivalence_on_random_inputs(start: int) -> None:
    rng = random.Random(start)
    for _ in range(25):
        bundle = InstanceBundle((codeword(rng), codeword(rng)))
        assert transform_equivalence_check(bundle, spec(start))


def test_equivalence_on_zero_inputs() -> None:
    zero_word = encode([M.zero()] * 4, PARAMS)
    assert transform_equivalence_check(InstanceBundle((zero_word, zero_word)), spec())

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import pytest

from src.codes.bitlinear import compile_linear
from src.ring.core import Modulus, RingElement, shift_mul

# (column, row, e) stands for x^e * a_{column,row}
Term = tuple[int, int, int]
Table = dict[tuple[int, int], list[Term]]
Build = Callable[[list[list[RingElement]]], tuple[Sequence[Sequence[RingElement]], Sequence[Sequence[RingElement]]]]


def combine(terms: list[Term], array: Sequence[Sequence[RingElement]], modulus: Modulus) -> RingElement:
    total = modulus.zero()
    for column, row, e in terms:
        total = total + shift_mul(array[column][row], e)
    return total


@pytest.fixture
def assert_worked_table():
    """Check every cell of a worked table against an encoder, one generator row at a time.

    `build(info)` gets a columns x rows array of ring elements and returns the
    produced columns plus the array the table's terms index into.
    """

    def check(build: Build, table: Table, modulus: Modulus, columns: int, rows: int) -> None:
        w = modulus.element_bits
        cells = sorted(table)

        def unpack(bits: list[int]) -> list[list[RingElement]]:
            return [
                [modulus.from_bits(bits[(c * rows + r) * w : (c * rows + r + 1) * w]) for r in range(rows)]
                for c in range(columns)
            ]

        def produced(bits: list[int]) -> list[int]:
            out, _ = build(unpack(bits))
            return [b for c, r in cells for b in out[c][r].bits()]

        def printed(bits: list[int]) -> list[int]:
            _, ref = build(unpack(bits))
            return [b for cell in cells for b in combine(table[cell], ref, modulus).bits()]

        n_in = columns * rows * w
        actual, expected = compile_linear(produced, n_in), compile_linear(printed, n_in)
        for n, cell in enumerate(cells):
            assert np.array_equal(actual[n * w : (n + 1) * w], expected[n * w : (n + 1) * w]), cell

    return check

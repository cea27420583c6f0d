"""The k=2, r=2, d=3, p=3, tau=4 extra-bit array code and its transformed version.

Columns store eight bits a_0..a_7. Four extra bits a_8..a_11 are derived on
demand (a_{8+mu} = a_mu + a_{4+mu}), and the full 12-bit vector is an element
of F2[x]/(1+x^12). Those 12-bit vectors form the ideal of multiples of 1+x^4,
so multiplying by any ring element keeps the extra-bit relation and the
eight stored bits always determine the rest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Mapping, Sequence

from src.codes.bitlinear import BitCode, as_bit_columns
from src.codes.errors import InvalidParams
from src.meter.bandwidth import AccessReport, AccessTrace
from src.ring.core import Modulus, RingElement, shift_mul

logger = logging.getLogger(__name__)

HOU_K = 2
HOU_R = 2
HOU_D = 3
HOU_P = 3
HOU_TAU = 4
HOU_BITS = (HOU_P - 1) * HOU_TAU
HOU_RING = Modulus.circulant(HOU_P * HOU_TAU)

DEFAULT_HOU_COEFFICIENT = HOU_RING.monomial(4)
ALTERNATIVE_HOU_COEFFICIENTS = tuple(
    HOU_RING.element(bits)
    for bits in (
        1 | 1 << 4,
        1 << 8,
        1 | 1 << 8,
        1 << 4 | 1 << 8,
        1 | 1 << 4 | 1 << 8,
    )
)

_EVEN = [0, 2, 4, 6]
_ALL = list(range(HOU_BITS))

# Helper bits per failed column, as indices into each helper's stored bits.
BASE_DOWNLOADS: dict[int, dict[int, list[int]]] = {
    0: {1: _EVEN, 2: _EVEN, 3: _EVEN},
    1: {0: [0, 1, 3, 4, 5, 7], 2: [0, 1, 4, 5], 3: [0, 1, 4, 5]},
    2: {0: _ALL, 1: _ALL},
    3: {0: _ALL, 1: _ALL},
}


def _both_halves(indices: list[int]) -> list[int]:
    return indices + [HOU_BITS + i for i in indices]


_FIRST = _ALL
_SECOND = [HOU_BITS + i for i in _ALL]

TRANSFORMED_DOWNLOADS: dict[int, dict[int, list[int]]] = {
    0: {c: _both_halves(rows) for c, rows in BASE_DOWNLOADS[0].items()},
    1: {c: _both_halves(rows) for c, rows in BASE_DOWNLOADS[1].items()},
    2: {0: _FIRST, 1: _FIRST, 3: _FIRST},
    3: {0: _SECOND, 1: _SECOND, 2: _SECOND},
}


@dataclass(frozen=True)
class HouColumn:
    stored: int

    def __post_init__(self) -> None:
        if not 0 <= self.stored < 1 << HOU_BITS:
            raise InvalidParams(f"a column stores {HOU_BITS} bits, got {self.stored:#x}")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> HouColumn:
        if len(bits) != HOU_BITS:
            raise InvalidParams(f"expected {HOU_BITS} bits, got {len(bits)}")
        return cls(sum((b & 1) << i for i, b in enumerate(bits)))

    def bits(self) -> list[int]:
        return [(self.stored >> i) & 1 for i in range(HOU_BITS)]

    def extended(self) -> RingElement:
        low = self.stored & 0xF
        high = self.stored >> HOU_TAU
        return HOU_RING.element(self.stored | (low ^ high) << HOU_BITS)


@dataclass(frozen=True)
class HouPair:
    first: HouColumn
    second: HouColumn

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> HouPair:
        return cls(HouColumn.from_bits(bits[:HOU_BITS]), HouColumn.from_bits(bits[HOU_BITS:]))

    def bits(self) -> list[int]:
        return self.first.bits() + self.second.bits()


def hou_extra_bits(col: HouColumn) -> tuple[int, int, int, int]:
    bits = col.bits()
    return tuple(bits[mu] ^ bits[HOU_TAU + mu] for mu in range(HOU_TAU))


def _stored(elem: RingElement) -> HouColumn:
    return HouColumn(elem.coeffs & ((1 << HOU_BITS) - 1))


def hou_encode(info: Sequence[HouColumn]) -> tuple[HouColumn, ...]:
    """Column 2 is a_0 + a_1, column 3 stores bit i as a_{i-1,0} + a_{i-2,1} (indices mod 12)."""
    if len(info) != HOU_K:
        raise InvalidParams(f"expected {HOU_K} information columns, got {len(info)}")
    a0, a1 = (c.extended() for c in info)
    row_parity = _stored(a0 + a1)
    shifted = _stored(shift_mul(a0, 1) + shift_mul(a1, 2))
    return info[0], info[1], row_parity, shifted


def _check_coefficient(coefficient: RingElement | None) -> RingElement:
    if coefficient is None:
        return DEFAULT_HOU_COEFFICIENT
    if coefficient.modulus != HOU_RING:
        raise InvalidParams(f"coefficient must live in F2[x]/(1+x^12), got {coefficient.modulus}")
    if not coefficient:
        raise InvalidParams("encoding coefficient must be nonzero")
    if coefficient != DEFAULT_HOU_COEFFICIENT and coefficient not in ALTERNATIVE_HOU_COEFFICIENTS:
        logger.warning(f"coefficient {coefficient} is not certified to keep information repair efficient")
    return coefficient


def hou_transformed_encode(
    a_info: Sequence[HouColumn],
    b_info: Sequence[HouColumn],
    coefficient: RingElement | None = None,
) -> tuple[HouPair, ...]:
    coeff = _check_coefficient(coefficient)
    a = hou_encode(a_info)
    b = hou_encode(b_info)
    a3 = a[3].extended()
    b2 = b[2].extended()
    return (
        HouPair(a[0], b[0]),
        HouPair(a[1], b[1]),
        HouPair(a[2], _stored(b2 + coeff * a3)),
        HouPair(_stored(a3 + b2), b[3]),
    )


# ── Compiled codes ─────────────────────────────────────────────────────────


@lru_cache(maxsize=1)
def base_code() -> BitCode:
    def encoder(bits: list[int]) -> list[list[int]]:
        info = [HouColumn.from_bits(bits[c * HOU_BITS : (c + 1) * HOU_BITS]) for c in range(HOU_K)]
        return [col.bits() for col in hou_encode(info)]

    return BitCode.from_encoder("hou_base", HOU_K, HOU_D, HOU_K + HOU_R, HOU_BITS, encoder)


@lru_cache(maxsize=16)
def transformed_code(coefficient: RingElement = DEFAULT_HOU_COEFFICIENT) -> BitCode:
    def encoder(bits: list[int]) -> list[list[int]]:
        w = 2 * HOU_BITS
        pairs = [HouPair.from_bits(bits[c * w : (c + 1) * w]) for c in range(HOU_K)]
        encoded = hou_transformed_encode(
            [p.first for p in pairs], [p.second for p in pairs], coefficient
        )
        return [pair.bits() for pair in encoded]

    return BitCode.from_encoder(
        "hou_transformed", HOU_K, HOU_D, HOU_K + HOU_R, 2 * HOU_BITS, encoder
    )


def _downloads(code: BitCode, f: int, planned: dict[int, list[int]], available: set[int]):
    if code.can_repair(f, planned) and set(planned) <= available:
        return planned
    others = [c for c in range(code.n) if c != f and c in available]
    for pair in combinations(others, code.k):
        full = {c: list(range(code.column_bits)) for c in pair}
        if code.can_repair(f, full):
            logger.warning(f"{code.name}: column {f} falls back to reading columns {list(pair)} in full")
            return full
    return planned


def hou_repair(
    f: int,
    array: Mapping[int, HouColumn] | Sequence[HouColumn | None],
    trace: AccessTrace | None = None,
) -> tuple[HouColumn, AccessReport]:
    if f not in BASE_DOWNLOADS:
        raise InvalidParams(f"column {f} outside 0..3")
    code = base_code()
    bits, report = code.repair(f, as_bit_columns(array), BASE_DOWNLOADS[f], trace)
    return HouColumn.from_bits(bits), report


def hou_transformed_repair(
    f: int,
    array: Mapping[int, HouPair] | Sequence[HouPair | None],
    coefficient: RingElement | None = None,
    trace: AccessTrace | None = None,
) -> tuple[HouPair, AccessReport]:
    if f not in TRANSFORMED_DOWNLOADS:
        raise InvalidParams(f"column {f} outside 0..3")
    code = transformed_code(_check_coefficient(coefficient))
    columns = as_bit_columns(array)
    available = {c for c, col in columns.items() if col is not None and c != f}
    downloads = _downloads(code, f, TRANSFORMED_DOWNLOADS[f], available)
    bits, report = code.repair(f, columns, downloads, trace)
    return HouPair.from_bits(bits), report


def hou_decode(array: Mapping[int, HouColumn] | Sequence[HouColumn | None]) -> tuple[HouColumn, HouColumn]:
    bits = base_code().decode(as_bit_columns(array))
    return HouColumn.from_bits(bits[:HOU_BITS]), HouColumn.from_bits(bits[HOU_BITS:])


def hou_transformed_decode(
    array: Mapping[int, HouPair] | Sequence[HouPair | None],
    coefficient: RingElement | None = None,
) -> tuple[HouPair, HouPair]:
    bits = transformed_code(_check_coefficient(coefficient)).decode(as_bit_columns(array))
    w = 2 * HOU_BITS
    return HouPair.from_bits(bits[:w]), HouPair.from_bits(bits[w:])

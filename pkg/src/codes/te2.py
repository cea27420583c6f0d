"""Two-instance transformed EVENODD with r=2, d=k+1 and its information-column repair sets."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

from src.codes.bitlinear import BitCode, as_bit_columns
from src.codes.errors import InvalidParams, InvalidRepairSets
from src.codes.evenodd import CodeParams, encode_row
from src.meter.bandwidth import AccessReport, AccessTrace
from src.ring.core import Modulus, RingElement

logger = logging.getLogger(__name__)

RepairSets = dict[int, tuple[int, ...]]


@dataclass(frozen=True)
class TeParams:
    k: int
    p: int

    def __post_init__(self) -> None:
        # validates p prime and p >= k
        CodeParams(self.k, 2, self.p)

    @property
    def n(self) -> int:
        return self.k + 2

    @property
    def d(self) -> int:
        return self.k + 1

    @property
    def vector_bits(self) -> int:
        return self.p - 1

    @property
    def column_bits(self) -> int:
        return 2 * (self.p - 1)

    @property
    def half(self) -> int:
        return (self.p - 1) // 2

    @property
    def info_repairable(self) -> bool:
        return (self.p - 1) % 4 == 0

    @cached_property
    def base(self) -> CodeParams:
        return CodeParams(self.k, 2, self.p)

    @cached_property
    def modulus(self) -> Modulus:
        return Modulus.evenodd(self.p)


@dataclass(frozen=True)
class TePair:
    """The two stored (p-1)-bit vectors of a column; a/b instances for information columns."""

    a: RingElement
    b: RingElement

    def bits(self) -> list[int]:
        return self.a.bits() + self.b.bits()

    @classmethod
    def from_bits(cls, bits: Sequence[int], modulus: Modulus) -> TePair:
        half = modulus.element_bits
        return cls(modulus.from_bits(bits[:half]), modulus.from_bits(bits[half:]))


def star(v: RingElement) -> RingElement:
    """Swap each adjacent pair of coefficients: (v1, v0, v3, v2, ...)."""
    bits = v.bits()
    swapped = [bits[i ^ 1] for i in range(len(bits))]
    return v.modulus.from_bits(swapped)


def bar(v: RingElement) -> RingElement:
    """Zero the odd-indexed coefficients."""
    mask = sum(1 << i for i in range(0, v.modulus.element_bits, 2))
    return RingElement(v.coeffs & mask, v.modulus)


def te2_encode(info: Sequence[TePair], params: TeParams) -> tuple[TePair, ...]:
    if len(info) != params.k:
        raise InvalidParams(f"expected {params.k} information columns, got {len(info)}")
    k = params.k
    a = encode_row([col.a for col in info], params.base)
    b = encode_row([col.b for col in info], params.base)
    first_parity = TePair(a[k] + b[k], b[k + 1])
    second_parity = TePair(a[k] + bar(b[k]) + star(b[k]), a[k + 1])
    return tuple(info) + (first_parity, second_parity)


# ── Compiled codes ─────────────────────────────────────────────────────────


@lru_cache(maxsize=32)
def te2_code(params: TeParams) -> BitCode:
    def encoder(bits: list[int]) -> list[list[int]]:
        w = params.column_bits
        info = [TePair.from_bits(bits[c * w : (c + 1) * w], params.modulus) for c in range(params.k)]
        return [col.bits() for col in te2_encode(info, params)]

    return BitCode.from_encoder("te2", params.k, params.d, params.n, params.column_bits, encoder)


@lru_cache(maxsize=32)
def evenodd_code(k: int, p: int) -> BitCode:
    base = CodeParams(k, 2, p)
    m = base.modulus

    def encoder(bits: list[int]) -> list[list[int]]:
        w = p - 1
        info = [m.from_bits(bits[c * w : (c + 1) * w]) for c in range(k)]
        return [elem.bits() for elem in encode_row(info, base)]

    return BitCode.from_encoder("evenodd", k, k + 1, k + 2, p - 1, encoder)


# ── Repair sets of the base code ───────────────────────────────────────────


def evenodd_info_repair_sets(f: int, k: int, p: int) -> RepairSets:
    """Download sets for an information column of the r=2 EVENODD code.

    The upper half of the rows is rebuilt through the row parity, the lower
    half through diagonals. The diagonal through row p-1-f of column f is the
    missing one, so when that row lies in the lower half an auxiliary diagonal
    recovers the adjuster and the bit with it.
    """
    CodeParams(k, 2, p)
    if not 0 <= f < k:
        raise InvalidParams(f"column {f} is not an information column of k={k}")
    h = (p - 1) // 2
    upper = set(range(h))
    lower = set(range(h, p - 1))
    imaginary = p - 1
    others = [j for j in range(k) if j != f]

    sets: dict[int, set[int]] = {j: set(upper) for j in others}
    sets[k] = set(upper)
    sets[k + 1] = set()

    def diagonal_cells(diag: int) -> dict[int, int]:
        """Rows of diagonal `diag` in the other information columns (imaginary row dropped)."""
        cells = {}
        for j in others:
            row = (diag - j) % p
            if row != imaginary:
                cells[j] = row
        return cells

    def add_diagonal(diag: int) -> None:
        sets[k + 1].add(diag)
        for j, row in diagonal_cells(diag).items():
            sets[j].add(row)

    # adjuster cells (p-1-j, j) of the other columns
    for j in others:
        row = p - 1 - j
        if row != imaginary:
            sets[j].add(row)

    hidden = p - 1 - f
    direct = [row for row in sorted(lower) if row != hidden]
    used = {(row + f) % p for row in direct}
    for row in direct:
        add_diagonal((row + f) % p)

    if hidden in lower:

        def cost(diag: int) -> int:
            new = 0 if diag in sets[k + 1] else 1
            return new + sum(1 for j, row in diagonal_cells(diag).items() if row not in sets[j])

        candidates = [
            diag
            for diag in range(p - 1)
            if diag not in used and ((diag - f) % p in upper or (diag - f) % p == imaginary)
        ]
        if not candidates:
            raise InvalidRepairSets(f"no auxiliary diagonal for column {f} with k={k} p={p}")
        add_diagonal(min(candidates, key=lambda diag: (cost(diag), diag)))

    result = {j: tuple(sorted(rows)) for j, rows in sets.items()}
    if not evenodd_code(k, p).can_repair(f, result):
        raise InvalidRepairSets(f"repair sets for column {f} (k={k}, p={p}) do not determine it")
    logger.debug(
        f"evenodd k={k} p={p} column {f}: {sum(len(s) for s in result.values())} bits via {result}"
    )
    return result


def evenodd_repair(
    f: int,
    array: Mapping[int, RingElement] | Sequence[RingElement | None],
    k: int,
    p: int,
    repair_sets: Mapping[int, Sequence[int]] | None = None,
) -> tuple[RingElement, AccessReport]:
    """Bit-level repair of one information column of the r=2 base code."""
    sets = repair_sets if repair_sets is not None else evenodd_info_repair_sets(f, k, p)
    code = evenodd_code(k, p)
    bits, report = code.repair(f, as_bit_columns(array), {j: list(rows) for j, rows in sets.items() if rows})
    return Modulus.evenodd(p).from_bits(bits), report


# ── Transformed code repair and decode ─────────────────────────────────────


def _info_downloads(f: int, params: TeParams, sets: Mapping[int, Sequence[int]]) -> dict[int, list[int]]:
    k, w, h = params.k, params.vector_bits, params.half
    if tuple(sorted(sets.get(k, ()))) != tuple(range(h)):
        raise InvalidRepairSets(f"S_{k} must be {{0..{h - 1}}}, got {sorted(sets.get(k, ()))}")
    if f in sets and sets[f]:
        raise InvalidRepairSets(f"repair sets may not read the failed column {f}")
    for j, rows in sets.items():
        if any(not 0 <= i < w for i in rows):
            raise InvalidRepairSets(f"S_{j} has indices outside 0..{w - 1}")

    last = sorted(sets.get(k + 1, ()))
    downloads: dict[int, list[int]] = {}
    for j in range(k):
        rows = sorted(sets.get(j, ()))
        if j != f and rows:
            downloads[j] = rows + [w + i for i in rows]
    downloads[k] = list(range(h)) + [w + i for i in last]
    downloads[k + 1] = list(range(h)) + [w + i for i in last]
    return downloads


def te2_repair(
    f: int,
    surviving: Mapping[int, TePair] | Sequence[TePair | None],
    params: TeParams,
    base_repair_sets: Mapping[int, Sequence[int]] | None = None,
    trace: AccessTrace | None = None,
) -> tuple[TePair, AccessReport]:
    k, w = params.k, params.vector_bits
    if not 0 <= f < params.n:
        raise InvalidParams(f"column {f} outside 0..{params.n - 1}")

    if f == k:
        downloads = {j: list(range(w, 2 * w)) for j in range(k)}
        downloads[k + 1] = list(range(w))
    elif f == k + 1:
        downloads = {j: list(range(w)) for j in range(k)}
        downloads[k] = list(range(w))
    else:
        if not params.info_repairable:
            raise InvalidParams(f"information repair needs p-1 divisible by 4, got p={params.p}")
        sets = base_repair_sets if base_repair_sets is not None else evenodd_info_repair_sets(f, k, params.p)
        downloads = _info_downloads(f, params, sets)

    bits, report = te2_code(params).repair(f, as_bit_columns(surviving), downloads, trace)
    return TePair.from_bits(bits, params.modulus), report


def te2_decode(
    surviving: Mapping[int, TePair] | Sequence[TePair | None], params: TeParams
) -> tuple[TePair, ...]:
    bits = te2_code(params).decode(as_bit_columns(surviving))
    w = params.column_bits
    return tuple(TePair.from_bits(bits[c * w : (c + 1) * w], params.modulus) for c in range(params.k))

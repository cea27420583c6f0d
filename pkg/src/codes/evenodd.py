"""EVENODD base code: parameters, encoding over R_p and syndrome decoding."""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from src.codes.errors import DecodeFailed, InvalidParams, TooManyErasures
from src.ring.core import (
    Modulus,
    RingElement,
    is_unit,
    ring_inv,
    shift_mul,
)

logger = logging.getLogger(__name__)

Column = tuple[RingElement, ...]

DEFAULT_MDS_TRIALS = 4


@dataclass(frozen=True)
class CodeParams:
    k: int
    r: int
    p: int
    d: int | None = None
    e: int = 1
    layers: int = 0

    def __post_init__(self) -> None:
        if self.d is None:
            object.__setattr__(self, "d", self.k)
        if self.k < 1 or self.r < 1:
            raise InvalidParams(f"need k >= 1 and r >= 1, got k={self.k} r={self.r}")
        Modulus.evenodd(self.p)
        if self.p < max(self.k, self.r):
            raise InvalidParams(f"p={self.p} must be >= max(k, r) = {max(self.k, self.r)}")
        if not 1 <= self.e <= self.p - 1:
            raise InvalidParams(f"e={self.e} must lie in 1..{self.p - 1}")
        if not self.k <= self.d <= self.k + self.r - 1:
            raise InvalidParams(f"d={self.d} must lie in {self.k}..{self.k + self.r - 1}")
        if self.layers < 0:
            raise InvalidParams("layers must be >= 0")
        if self.layers > 0 and self.d < self.k + 1:
            raise InvalidParams("layered codes need d >= k + 1")

    @property
    def n(self) -> int:
        return self.k + self.r

    @property
    def t(self) -> int:
        return self.d - self.k + 1

    @property
    def rows(self) -> int:
        """Ring elements per column."""
        return self.t**self.layers

    @property
    def sub_packetization(self) -> int:
        return (self.p - 1) * self.rows

    @property
    def column_bits(self) -> int:
        return self.sub_packetization

    @cached_property
    def modulus(self) -> Modulus:
        return Modulus.evenodd(self.p)


@dataclass(frozen=True)
class CodewordArray:
    params: CodeParams
    columns: tuple[Column, ...]

    def __post_init__(self) -> None:
        if len(self.columns) != self.params.n:
            raise InvalidParams(f"expected {self.params.n} columns, got {len(self.columns)}")
        for i, col in enumerate(self.columns):
            if len(col) != self.params.rows:
                raise InvalidParams(
                    f"column {i} has {len(col)} elements, expected {self.params.rows}"
                )

    @classmethod
    def from_lists(cls, params: CodeParams, columns: Sequence[Sequence[RingElement]]) -> CodewordArray:
        return cls(params, tuple(tuple(col) for col in columns))

    @classmethod
    def zeros(cls, params: CodeParams) -> CodewordArray:
        zero = params.modulus.zero()
        return cls(params, tuple((zero,) * params.rows for _ in range(params.n)))

    def surviving(self, erased: Iterable[int] = ()) -> dict[int, Column]:
        gone = set(erased)
        return {i: col for i, col in enumerate(self.columns) if i not in gone}

    @property
    def info(self) -> tuple[Column, ...]:
        return self.columns[: self.params.k]


@dataclass(frozen=True)
class ErasurePattern:
    erased: frozenset[int]

    @classmethod
    def of(cls, indices: Iterable[int], params: CodeParams) -> ErasurePattern:
        idx = list(indices)
        if len(set(idx)) != len(idx):
            raise InvalidParams(f"duplicate column in erasure pattern {idx}")
        for i in idx:
            if not 0 <= i < params.n:
                raise InvalidParams(f"column {i} outside 0..{params.n - 1}")
        if len(idx) > params.r:
            raise TooManyErasures(f"{len(idx)} columns erased, code tolerates {params.r}")
        return cls(frozenset(idx))

    def known(self, n: int) -> list[int]:
        return [i for i in range(n) if i not in self.erased]


@dataclass(frozen=True)
class MdsReport:
    ok: bool
    counterexample: frozenset[int] | None = None


def encode_row(info: Sequence[RingElement], params: CodeParams) -> list[RingElement]:
    """One EVENODD codeword: parity column k+j stores sum_i x^(i*j) a_i."""
    if len(info) != params.k:
        raise InvalidParams(f"expected {params.k} information polynomials, got {len(info)}")
    zero = params.modulus.zero()
    row = list(info)
    for j in range(params.r):
        acc = zero
        for i, a in enumerate(info):
            acc = acc + shift_mul(a, i * j)
        row.append(acc)
    return row


def encode(info: Sequence[RingElement], params: CodeParams) -> CodewordArray:
    if params.layers != 0:
        raise InvalidParams("encode builds the base code; use encode_multilayer for layered codes")
    row = encode_row(info, params)
    return CodewordArray(params, tuple((v,) for v in row))


def solve_ring_system(
    matrix: list[list[RingElement]], rhs: list[RingElement]
) -> list[RingElement]:
    """Gauss-Jordan elimination over R_p with invertible pivots.

    After the first sweep the Vandermonde entries become sums x^a + x^b,
    which are units whenever a != b (mod p).
    """
    a = [list(row) for row in matrix]
    b = list(rhs)
    size = len(a)
    for col in range(size):
        pivot = next((i for i in range(col, size) if is_unit(a[i][col])), None)
        if pivot is None:
            raise DecodeFailed(f"no invertible pivot in column {col}; parameters are not MDS")
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        inv = ring_inv(a[col][col])
        a[col] = [v * inv for v in a[col]]
        b[col] = b[col] * inv
        for i in range(size):
            if i == col or not a[i][col]:
                continue
            factor = a[i][col]
            a[i] = [v + factor * w for v, w in zip(a[i], a[col])]
            b[i] = b[i] + factor * b[col]
    return b


def decode_row(known: Mapping[int, RingElement], params: CodeParams) -> list[RingElement]:
    """Recover a full codeword row from any k surviving entries."""
    k, r = params.k, params.r
    lost_info = [i for i in range(k) if i not in known]
    parities = [j for j in range(r) if k + j in known]
    if len(lost_info) > len(parities):
        raise TooManyErasures(
            f"{len(lost_info)} information columns lost, only {len(parities)} parities survive"
        )
    if not lost_info:
        return encode_row([known[i] for i in range(k)], params)

    used = parities[: len(lost_info)]
    syndromes = []
    for j in used:
        syn = known[k + j]
        for i in range(k):
            if i in known:
                syn = syn + shift_mul(known[i], i * j)
        syndromes.append(syn)
    one = params.modulus.one()
    matrix = [[shift_mul(one, e * j) for e in lost_info] for j in used]
    solved = solve_ring_system(matrix, syndromes)

    info = [known.get(i) for i in range(k)]
    for i, value in zip(lost_info, solved):
        info[i] = value
    return encode_row(info, params)


def syndrome_decode(array: CodewordArray, pattern: ErasurePattern) -> dict[int, Column]:
    params = array.params
    if params.layers != 0:
        raise InvalidParams("syndrome_decode works on the base code only")
    if len(pattern.erased) > params.r:
        raise TooManyErasures(f"{len(pattern.erased)} erasures, code tolerates {params.r}")
    survivors = pattern.known(params.n)
    recovered: dict[int, list[RingElement]] = {c: [] for c in sorted(pattern.erased)}
    for row in range(params.rows):
        full = decode_row({c: array.columns[c][row] for c in survivors}, params)
        for c in recovered:
            recovered[c].append(full[c])
    return {c: tuple(v) for c, v in recovered.items()}


def check_mds(
    params: CodeParams, trials: int = DEFAULT_MDS_TRIALS, seed: int = 0
) -> MdsReport:
    """Decode basis-vector and random codewords from every k-subset of columns."""
    base = CodeParams(params.k, params.r, params.p, e=params.e)
    m = base.modulus
    rng = random.Random(seed)

    infos: list[list[RingElement]] = []
    for i in range(base.k):
        for bit in range(base.p - 1):
            info = [m.zero()] * base.k
            info[i] = m.element(1 << bit)
            infos.append(info)
    for _ in range(trials):
        infos.append([m.random(rng) for _ in range(base.k)])
    codewords = [encode_row(info, base) for info in infos]

    for subset in itertools.combinations(range(base.n), base.k):
        for word in codewords:
            try:
                decoded = decode_row({c: word[c] for c in subset}, base)
            except DecodeFailed:
                decoded = None
            if decoded != word:
                logger.debug(f"MDS check failed for k={base.k} r={base.r} p={base.p} on {subset}")
                return MdsReport(False, frozenset(subset))
    return MdsReport(True)

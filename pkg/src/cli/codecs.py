"""Stripe codecs: each code family compiled to GF(2) matrices for whole-file work.

A stripe is one codeword array. Library routines run on the first stripe
and are the reference; the compiled matrices replay the same computation on
every stripe, and the two are compared before anything is written.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Mapping

import numpy as np

from src.cli.shards import CodeId, ShardHeader
from src.codes.bitlinear import Unrecoverable, compile_linear, recovery_matrix
from src.codes.errors import DecodeFailed, InvalidParams, TooManyErasures
from src.codes.evenodd import ErasurePattern
from src.codes.hou import (
    DEFAULT_HOU_COEFFICIENT,
    HOU_BITS,
    HOU_D,
    HOU_K,
    HOU_P,
    HOU_R,
    HouColumn,
    HouPair,
    hou_decode,
    hou_encode,
    hou_repair,
    hou_transformed_decode,
    hou_transformed_encode,
    hou_transformed_repair,
)
from src.codes.multilayer import (
    OPTIMAL,
    build_multilayer,
    decode_multilayer,
    encode_multilayer,
    repair_column,
    select_helpers,
)
from src.codes.te2 import TePair, TeParams, te2_decode, te2_encode, te2_repair
from src.meter.bandwidth import AccessReport, AccessTrace

logger = logging.getLogger(__name__)

CHUNK_STRIPES = 4096


def gf2_apply(matrix: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """rows @ matrix.T over GF(2), one chunk of stripes at a time."""
    out = np.zeros((rows.shape[0], matrix.shape[0]), dtype=np.uint8)
    m = matrix.T.astype(np.int32)
    for start in range(0, rows.shape[0], CHUNK_STRIPES):
        chunk = rows[start : start + CHUNK_STRIPES].astype(np.int32)
        out[start : start + CHUNK_STRIPES] = (chunk @ m) % 2
    return out


@dataclass(frozen=True)
class CodeShape:
    code: CodeId
    k: int
    r: int
    d: int
    p: int
    e: int
    layers: int


class StripeCodec(ABC):
    def __init__(self, shape: CodeShape, column_bits: int):
        self.shape = shape
        self.column_bits = column_bits
        self._recovery: dict[tuple, np.ndarray] = {}

    @property
    def name(self) -> str:
        return self.shape.code.label

    @property
    def k(self) -> int:
        return self.shape.k

    @property
    def n(self) -> int:
        return self.shape.k + self.shape.r

    @property
    def info_bits(self) -> int:
        return self.k * self.column_bits

    def header(self, column: int, stripes: int) -> ShardHeader:
        s = self.shape
        return ShardHeader(s.code, s.k, s.r, s.d, s.p, s.e, s.layers, column, stripes * self.column_bits)

    # ── Library side ─────────────────────────────────────────────────────────

    @abstractmethod
    def to_column(self, bits: list[int]) -> Any: ...

    @abstractmethod
    def from_column(self, column: Any) -> list[int]: ...

    @abstractmethod
    def library_encode(self, info: list[Any]) -> list[Any]: ...

    @abstractmethod
    def library_repair(
        self, f: int, columns: Mapping[int, Any], trace: AccessTrace
    ) -> tuple[Any, AccessReport]: ...

    @abstractmethod
    def library_decode(self, columns: Mapping[int, Any]) -> list[Any]: ...

    def encode_bits(self, info_bits: list[int]) -> list[list[int]]:
        w = self.column_bits
        info = [self.to_column(info_bits[c * w : (c + 1) * w]) for c in range(self.k)]
        return [self.from_column(col) for col in self.library_encode(info)]

    @cached_property
    def generator(self) -> np.ndarray:
        logger.debug(f"compiling {self.name} generator ({self.info_bits} message bits)")
        return compile_linear(
            lambda bits: [b for col in self.encode_bits(bits) for b in col], self.info_bits
        )

    def repairable(self, f: int) -> bool:
        return 0 <= f < self.n

    def expects_optimal(self, f: int) -> bool:
        """Whether repair of column f must meet the cut-set bound exactly."""
        return False

    def positions(self, column: int) -> list[int]:
        return list(range(column * self.column_bits, (column + 1) * self.column_bits))

    def _matrix(self, known: tuple[int, ...], target: tuple[int, ...]) -> np.ndarray:
        key = (known, target)
        if key not in self._recovery:
            self._recovery[key] = recovery_matrix(self.generator, known, target)
        return self._recovery[key]

    # ── Stripe side ──────────────────────────────────────────────────────────

    def encode_stripes(self, info: np.ndarray) -> np.ndarray:
        """(stripes, info_bits) -> (stripes, n, column_bits)."""
        coded = gf2_apply(self.generator, info)
        stripes = info.shape[0]
        if stripes:
            reference = self.encode_bits(info[0].tolist())
            if coded[0].tolist() != [b for col in reference for b in col]:
                raise DecodeFailed(f"{self.name}: compiled encoder disagrees with the library")
        return coded.reshape(stripes, self.n, self.column_bits)

    def decode_stripes(self, columns: Mapping[int, np.ndarray]) -> np.ndarray:
        """Message bits of every stripe from the surviving columns."""
        alive = sorted(columns)
        missing = self.n - len(alive)
        if missing > self.shape.r or len(alive) < self.k:
            raise TooManyErasures(f"{missing} columns missing, code tolerates {self.shape.r}")
        known = tuple(p for c in alive for p in self.positions(c))
        try:
            matrix = self._matrix(known, tuple(range(self.info_bits)))
        except Unrecoverable as exc:
            raise DecodeFailed(f"{self.name}: columns {alive} do not determine the message") from exc
        stacked = np.concatenate([columns[c] for c in alive], axis=1)
        info = gf2_apply(matrix, stacked)
        if info.shape[0]:
            first_stripe = {c: self.to_column(columns[c][0].tolist()) for c in alive}
            reference = [b for col in self.library_decode(first_stripe) for b in self.from_column(col)]
            if info[0].tolist() != reference:
                raise DecodeFailed(f"{self.name}: compiled decoder disagrees with the library")
        return info

    def repair_stripes(
        self, f: int, columns: Mapping[int, np.ndarray]
    ) -> tuple[np.ndarray, AccessReport]:
        """Column f of every stripe, reading exactly what the library repair reads."""
        if not 0 <= f < self.n:
            raise InvalidParams(f"column {f} outside 0..{self.n - 1}")
        stripes = next(iter(columns.values())).shape[0] if columns else 0
        zero = [0] * self.column_bits
        first_stripe = {
            c: self.to_column(arr[0].tolist() if stripes else zero)
            for c, arr in columns.items()
            if c != f
        }
        trace = AccessTrace()
        repaired, report = self.library_repair(f, first_stripe, trace)

        read: list[int] = []
        for ev in sorted({(ev.column, ev.index, ev.bits) for ev in trace.events}):
            column, index, width = ev
            read.extend(column * self.column_bits + index * width + b for b in range(width))
        matrix = self._matrix(tuple(read), tuple(self.positions(f)))

        if not stripes:
            return np.zeros((0, self.column_bits), dtype=np.uint8), report.scaled(0)
        flat = np.concatenate([columns[c] for c in sorted(columns) if c != f], axis=1)
        offsets = {c: i * self.column_bits for i, c in enumerate(c for c in sorted(columns) if c != f)}
        picks = [offsets[pos // self.column_bits] + pos % self.column_bits for pos in read]
        out = gf2_apply(matrix, flat[:, picks])
        if out[0].tolist() != self.from_column(repaired):
            raise DecodeFailed(f"{self.name}: compiled repair of column {f} disagrees with the library")
        return out, report.scaled(stripes)


class MultilayerCodec(StripeCodec):
    def __init__(self, k: int, r: int, d: int, p: int, e: int):
        self.code = build_multilayer(k, r, d, p, e)
        params = self.code.params
        shape = CodeShape(CodeId.MULTILAYER_EVENODD, k, r, d, p, e, params.layers)
        super().__init__(shape, params.column_bits)

    def to_column(self, bits: list[int]) -> tuple:
        w = self.code.params.p - 1
        m = self.code.params.modulus
        return tuple(m.from_bits(bits[row * w : (row + 1) * w]) for row in range(self.code.rows))

    def from_column(self, column) -> list[int]:
        return [b for elem in column for b in elem.bits()]

    def library_encode(self, info):
        return list(encode_multilayer(info, self.code).columns)

    def expects_optimal(self, f: int) -> bool:
        return select_helpers(f, self.code).strategy == OPTIMAL

    def library_repair(self, f, columns, trace):
        plan = select_helpers(f, self.code)
        return repair_column(columns, plan, self.code, trace)

    def library_decode(self, columns):
        missing = [c for c in range(self.n) if c not in columns]
        pattern = ErasurePattern.of(missing, self.code.params)
        return list(decode_multilayer(columns, pattern, self.code))


class HouBaseCodec(StripeCodec):
    def __init__(self):
        super().__init__(CodeShape(CodeId.HOU_BASE, HOU_K, HOU_R, HOU_D, HOU_P, 4, 0), HOU_BITS)

    def to_column(self, bits):
        return HouColumn.from_bits(bits)

    def from_column(self, column):
        return column.bits()

    def library_encode(self, info):
        return list(hou_encode(info))

    def library_repair(self, f, columns, trace):
        return hou_repair(f, columns, trace)

    def library_decode(self, columns):
        return list(hou_decode(columns))


class HouTransformedCodec(StripeCodec):
    def __init__(self):
        super().__init__(CodeShape(CodeId.HOU_TRANSFORMED, HOU_K, HOU_R, HOU_D, HOU_P, 4, 1), 2 * HOU_BITS)

    def to_column(self, bits):
        return HouPair.from_bits(bits)

    def from_column(self, column):
        return column.bits()

    def library_encode(self, info):
        return list(
            hou_transformed_encode([c.first for c in info], [c.second for c in info], DEFAULT_HOU_COEFFICIENT)
        )

    def library_repair(self, f, columns, trace):
        return hou_transformed_repair(f, columns, DEFAULT_HOU_COEFFICIENT, trace)

    def library_decode(self, columns):
        return list(hou_transformed_decode(columns, DEFAULT_HOU_COEFFICIENT))


class Te2Codec(StripeCodec):
    def __init__(self, k: int, p: int):
        self.params = TeParams(k, p)
        super().__init__(CodeShape(CodeId.TE2, k, 2, k + 1, p, 1, 1), self.params.column_bits)

    def to_column(self, bits):
        return TePair.from_bits(bits, self.params.modulus)

    def from_column(self, column):
        return column.bits()

    def library_encode(self, info):
        return list(te2_encode(info, self.params))

    def repairable(self, f: int) -> bool:
        return self.k <= f < self.n or (0 <= f < self.k and self.params.info_repairable)

    def expects_optimal(self, f: int) -> bool:
        return f >= self.k

    def library_repair(self, f, columns, trace):
        return te2_repair(f, columns, self.params, trace=trace)

    def library_decode(self, columns):
        return list(te2_decode(columns, self.params))


def _fixed(label: str, given: int | None, value: int) -> None:
    if given is not None and given != value:
        raise InvalidParams(f"{label} is fixed at {value} for this code, got {given}")


def build_codec(
    code: CodeId,
    k: int | None = None,
    r: int | None = None,
    d: int | None = None,
    p: int | None = None,
    e: int | None = None,
    layers_auto: bool = True,
) -> StripeCodec:
    if code in (CodeId.HOU_BASE, CodeId.HOU_TRANSFORMED):
        for label, given, value in (("k", k, HOU_K), ("r", r, HOU_R), ("d", d, HOU_D), ("p", p, HOU_P)):
            _fixed(label, given, value)
        return HouBaseCodec() if code is CodeId.HOU_BASE else HouTransformedCodec()

    k = 4 if k is None else k
    p = 5 if p is None else p
    if code is CodeId.TE2:
        _fixed("r", r, 2)
        _fixed("d", d, k + 1)
        return Te2Codec(k, p)

    r = 2 if r is None else r
    e = 1 if e is None else e
    if d is None:
        d = k + r - 1 if layers_auto else k
    elif not layers_auto and d != k:
        raise InvalidParams("--no-layers-auto builds the plain EVENODD code, which needs d = k")
    return MultilayerCodec(k, r, d, p, e)


def codec_from_header(header: ShardHeader) -> StripeCodec:
    codec = build_codec(header.code, header.k, header.r, header.d, header.p, header.e)
    if codec.shape.layers != header.layers:
        raise InvalidParams(f"shards record {header.layers} layers, code has {codec.shape.layers}")
    return codec

"""Binary codes as GF(2) matrices: generator compilation, recovery matrices, certified repair."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import galois
import numpy as np

from src.codes.errors import CodeError, DecodeFailed, InvalidRepairSets, TooManyErasures
from src.meter.bandwidth import AccessReport, AccessTrace, HelperReader, start_trace

logger = logging.getLogger(__name__)

GF2 = galois.GF(2)

Bits = Sequence[int]


class Unrecoverable(CodeError):
    """The known bits do not determine the target bits."""


def compile_linear(fn: Callable[[list[int]], Sequence[int]], n_in: int) -> np.ndarray:
    """Matrix of a GF(2)-linear map given as a function on bit lists.

    Column j is fn(e_j); the result has shape (n_out, n_in) with 0/1 entries.
    """
    columns = []
    for j in range(n_in):
        unit = [0] * n_in
        unit[j] = 1
        columns.append(np.asarray(fn(unit), dtype=np.uint8) & 1)
    if not columns:
        return np.zeros((0, 0), dtype=np.uint8)
    return np.stack(columns, axis=1)


def recovery_matrix(generator: np.ndarray, known: Sequence[int], target: Sequence[int]) -> np.ndarray:
    """R with generator[target] == R @ generator[known] over GF(2).

    Rows of `generator` are codeword bits as functions of the message bits.
    Raises Unrecoverable when some target bit is not in the span of the known ones.
    """
    n_known = len(known)
    g_target = np.asarray(generator[list(target)], dtype=np.uint8) & 1
    if not len(target):
        return np.zeros((0, n_known), dtype=np.uint8)
    if not n_known:
        if np.any(g_target):
            raise Unrecoverable("nothing was read")
        return np.zeros((len(target), 0), dtype=np.uint8)
    g_known = np.asarray(generator[list(known)], dtype=np.uint8) & 1

    augmented = GF2(np.concatenate([g_known.T, g_target.T], axis=1))
    reduced = augmented.row_reduce(ncols=n_known).view(np.ndarray)

    solution = np.zeros((n_known, len(target)), dtype=np.uint8)
    for row in reduced:
        lead = np.flatnonzero(row[:n_known])
        if lead.size == 0:
            if np.any(row[n_known:]):
                raise Unrecoverable("target bits fall outside the span of the known bits")
            continue
        solution[lead[0]] = row[n_known:]
    return solution.T.copy()


def apply_matrix(matrix: np.ndarray, bits: Bits) -> list[int]:
    if matrix.shape[0] == 0:
        return []
    vec = np.asarray(bits, dtype=np.int64)
    return [int(b) for b in (matrix.astype(np.int64) @ vec) % 2]


def rank(matrix: np.ndarray) -> int:
    if matrix.size == 0:
        return 0
    return int(np.linalg.matrix_rank(GF2(np.asarray(matrix, dtype=np.uint8) & 1)))


@dataclass(frozen=True)
class BitCode:
    """A systematic binary array code given by its generator matrix.

    Codeword bit c*column_bits + i is bit i of column c; the first k columns
    carry the message bits in order.
    """

    name: str
    k: int
    d: int
    n: int
    column_bits: int
    generator: np.ndarray = field(repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_encoder(
        cls,
        name: str,
        k: int,
        d: int,
        n: int,
        column_bits: int,
        encoder: Callable[[list[int]], Sequence[Sequence[int]]],
    ) -> BitCode:
        generator = compile_linear(
            lambda bits: [b for col in encoder(bits) for b in col], k * column_bits
        )
        if generator.shape != (n * column_bits, k * column_bits):
            raise CodeError(f"{name}: encoder produced a {generator.shape} generator")
        return cls(name, k, d, n, column_bits, generator)

    def positions(self, column: int, indices: Sequence[int] | None = None) -> list[int]:
        idx = range(self.column_bits) if indices is None else indices
        return [column * self.column_bits + i for i in idx]

    def encode(self, info: Bits) -> list[list[int]]:
        if len(info) != self.k * self.column_bits:
            raise CodeError(f"{self.name}: expected {self.k * self.column_bits} message bits")
        flat = apply_matrix(self.generator, info)
        w = self.column_bits
        return [flat[c * w : (c + 1) * w] for c in range(self.n)]

    def _recovery(self, known: tuple[int, ...], target: tuple[int, ...]) -> np.ndarray:
        key = (known, target)
        if key not in self._cache:
            self._cache[key] = recovery_matrix(self.generator, known, target)
        return self._cache[key]

    def can_repair(self, f: int, downloads: Mapping[int, Sequence[int]]) -> bool:
        known = tuple(p for c in sorted(downloads) for p in self.positions(c, downloads[c]))
        try:
            self._recovery(known, tuple(self.positions(f)))
        except Unrecoverable:
            return False
        return True

    def repair(
        self,
        f: int,
        columns: Mapping[int, Bits | None],
        downloads: Mapping[int, Sequence[int]],
        trace: AccessTrace | None = None,
    ) -> tuple[list[int], AccessReport]:
        """Rebuild column f from exactly the listed helper bits.

        Reads are logged to `trace` when the caller supplies one.
        """
        if f in downloads:
            raise InvalidRepairSets(f"{self.name}: repair of column {f} may not read column {f}")
        trace = start_trace(trace, f, self.k, self.d, self.column_bits)
        reader: HelperReader[int] = HelperReader(columns, trace, element_bits=1)
        known: list[int] = []
        values: list[int] = []
        for c in sorted(downloads):
            idx = list(downloads[c])
            values.extend(reader.read_many(c, idx))
            known.extend(self.positions(c, idx))
        try:
            matrix = self._recovery(tuple(known), tuple(self.positions(f)))
        except Unrecoverable as exc:
            raise InvalidRepairSets(f"{self.name}: downloads do not determine column {f}") from exc
        return apply_matrix(matrix, values), reader.report()

    def decode(self, columns: Mapping[int, Bits | None]) -> list[int]:
        """Message bits from any set of surviving columns that determines them."""
        alive = sorted(c for c, col in columns.items() if col is not None and 0 <= c < self.n)
        if len(alive) < self.k:
            raise TooManyErasures(f"{self.name}: {len(alive)} columns survive, need {self.k}")
        known = tuple(p for c in alive for p in self.positions(c))
        target = tuple(range(self.k * self.column_bits))
        try:
            matrix = self._recovery(known, target)
        except Unrecoverable as exc:
            raise DecodeFailed(f"{self.name}: columns {alive} do not determine the message") from exc
        values = [int(b) for c in alive for b in columns[c]]
        return apply_matrix(matrix, values)


def as_bit_columns(array: Mapping[int, object] | Sequence[object]) -> dict[int, list[int] | None]:
    """Columns (anything with a bits() method) keyed by index, missing ones as None."""
    items = array.items() if isinstance(array, Mapping) else enumerate(array)
    return {c: (col.bits() if col is not None else None) for c, col in items}

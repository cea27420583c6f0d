"""Repair access accounting against the cut-set bound d*m/(d-k+1)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Generic, Mapping, Protocol, Sequence, TypeVar

from src.codes.errors import InvalidParams, MalformedTrace, MissingHelper

logger = logging.getLogger(__name__)

T = TypeVar("T")


class RepairDegree(Protocol):
    k: int
    d: int


@dataclass(frozen=True)
class ReadEvent:
    column: int
    index: int
    bits: int
    coded: bool = False


@dataclass
class AccessTrace:
    """Everything one repair pulled from its helpers, in read order."""

    failed: int | None = None
    k: int = 0
    d: int = 0
    column_bits: int = 0
    events: list[ReadEvent] = field(default_factory=list)

    def record(self, column: int, index: int, bits: int, coded: bool = False) -> None:
        self.events.append(ReadEvent(column, index, bits, coded))


@dataclass(frozen=True)
class AccessReport:
    bits_read: int
    bits_transferred: int
    elements_read: int
    helpers_used: tuple[int, ...]
    optimal_bits: int
    ratio: Fraction
    uncoded: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "bits_read": self.bits_read,
            "bits_transferred": self.bits_transferred,
            "elements_read": self.elements_read,
            "helpers_used": list(self.helpers_used),
            "optimal_bits": self.optimal_bits,
            "ratio": {"numerator": self.ratio.numerator, "denominator": self.ratio.denominator},
            "uncoded": self.uncoded,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AccessReport:
        ratio = data["ratio"]
        return cls(
            bits_read=int(data["bits_read"]),
            bits_transferred=int(data["bits_transferred"]),
            elements_read=int(data["elements_read"]),
            helpers_used=tuple(int(h) for h in data["helpers_used"]),
            optimal_bits=int(data["optimal_bits"]),
            ratio=Fraction(int(ratio["numerator"]), int(ratio["denominator"])),
            uncoded=bool(data["uncoded"]),
        )

    def scaled(self, stripes: int) -> AccessReport:
        """Totals for `stripes` independent stripes repaired with the same plan."""
        return AccessReport(
            bits_read=self.bits_read * stripes,
            bits_transferred=self.bits_transferred * stripes,
            elements_read=self.elements_read * stripes,
            helpers_used=self.helpers_used,
            optimal_bits=self.optimal_bits * stripes,
            ratio=self.ratio,
            uncoded=self.uncoded,
        )


def start_trace(
    trace: AccessTrace | None, failed: int, k: int, d: int, column_bits: int
) -> AccessTrace:
    """Fresh trace for one repair, or the caller's trace stamped with the repair's shape."""
    if trace is None:
        return AccessTrace(failed=failed, k=k, d=d, column_bits=column_bits)
    if trace.events:
        raise MalformedTrace("a repair needs an empty trace")
    trace.failed, trace.k, trace.d, trace.column_bits = failed, k, d, column_bits
    return trace


def optimal_bound(params: RepairDegree, m_bits: int) -> int:
    t = params.d - params.k + 1
    if t < 1:
        raise InvalidParams(f"d={params.d} is below k={params.k}")
    if (params.d * m_bits) % t:
        raise InvalidParams(f"bound {params.d}*{m_bits}/{t} is not an integer")
    return params.d * m_bits // t


def audit(trace: AccessTrace) -> AccessReport:
    touched: dict[tuple[int, int], int] = {}
    transferred = 0
    for ev in trace.events:
        if ev.bits <= 0 or ev.index < 0 or ev.column < 0:
            raise MalformedTrace(f"bad read event {ev}")
        if ev.column == trace.failed:
            raise MalformedTrace(f"trace reads the failed column {ev.column}")
        key = (ev.column, ev.index)
        if touched.setdefault(key, ev.bits) != ev.bits:
            raise MalformedTrace(f"element {key} read with two different widths")
        transferred += ev.bits

    optimal = optimal_bound(trace, trace.column_bits) if trace.column_bits else 0
    return AccessReport(
        bits_read=sum(touched.values()),
        bits_transferred=transferred,
        elements_read=len(touched),
        helpers_used=tuple(sorted({ev.column for ev in trace.events})),
        optimal_bits=optimal,
        ratio=Fraction(transferred, optimal) if optimal else Fraction(0),
        uncoded=not any(ev.coded for ev in trace.events),
    )


class HelperReader(Generic[T]):
    """Read-only view of the surviving columns that logs every element it hands out."""

    def __init__(
        self,
        columns: Mapping[int, Sequence[T] | None],
        trace: AccessTrace,
        element_bits: int = 1,
    ):
        self._columns = columns
        self.trace = trace
        self.element_bits = element_bits
        self._cache: dict[tuple[int, int], T] = {}

    def read(self, column: int, index: int) -> T:
        key = (column, index)
        if key in self._cache:
            return self._cache[key]
        if column == self.trace.failed:
            raise MissingHelper(f"column {column} is the one being repaired")
        col = self._columns.get(column)
        if col is None:
            raise MissingHelper(f"helper column {column} is not available")
        if not 0 <= index < len(col) or col[index] is None:
            raise MissingHelper(f"helper column {column} has no element {index}")
        value = col[index]
        self._cache[key] = value
        self.trace.record(column, index, self.element_bits)
        return value

    def read_many(self, column: int, indices: Sequence[int]) -> list[T]:
        return [self.read(column, i) for i in indices]

    def report(self) -> AccessReport:
        report = audit(self.trace)
        logger.debug(
            f"repair of column {self.trace.failed}: {report.bits_transferred} bits "
            f"from {list(report.helpers_used)} (optimal {report.optimal_bits})"
        )
        return report

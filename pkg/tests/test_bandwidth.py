from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import pytest

from src.codes.errors import InvalidParams, MalformedTrace, MissingHelper
from src.meter.bandwidth import (
    AccessReport,
    AccessTrace,
    HelperReader,
    audit,
    optimal_bound,
    start_trace,
)


@dataclass
class Degree:
    k: int
    d: int


@pytest.mark.parametrize(
    "k,d,m,bound",
    [(4, 5, 32, 80), (2, 3, 8, 12), (3, 4, 8, 16), (4, 4, 16, 64), (4, 6, 27 * 4, 216)],
)
def test_optimal_bound(k: int, d: int, m: int, bound: int) -> None:
    assert optimal_bound(Degree(k, d), m) == bound


def test_non_integral_bound_is_refused() -> None:
    with pytest.raises(InvalidParams):
        optimal_bound(Degree(2, 3), 3)
    with pytest.raises(InvalidParams):
        optimal_bound(Degree(4, 3), 8)


def test_empty_trace() -> None:
    report = audit(AccessTrace(failed=0, k=2, d=3, column_bits=8))
    assert report.bits_transferred == 0
    assert report.helpers_used == ()
    assert report.ratio == 0
    assert report.uncoded


def test_audit_counts_repeats_in_transfer_only() -> None:
    trace = AccessTrace(failed=0, k=2, d=3, column_bits=8)
    trace.record(1, 0, 4)
    trace.record(1, 0, 4)
    trace.record(2, 3, 4, coded=True)
    report = audit(trace)
    assert report.bits_read == 8
    assert report.bits_transferred == 12
    assert report.elements_read == 2
    assert report.helpers_used == (1, 2)
    assert report.ratio == Fraction(1)
    assert not report.uncoded


@pytest.mark.parametrize(
    "column,index,bits",
    [(0, 0, 1), (1, -1, 1), (1, 0, 0), (-2, 0, 1)],
)
def test_malformed_events(column: int, index: int, bits: int) -> None:
    trace = AccessTrace(failed=0, k=2, d=3, column_bits=8)
    trace.record(column, index, bits)
    with pytest.raises(MalformedTrace):
        audit(trace)


def test_conflicting_widths() -> None:
    trace = AccessTrace(failed=0, k=2, d=3, column_bits=8)
    trace.record(1, 0, 4)
    trace.record(1, 0, 2)
    with pytest.raises(MalformedTrace):
        audit(trace)


def test_start_trace() -> None:
    fresh = start_trace(None, 3, 4, 5, 32)
    assert (fresh.failed, fresh.k, fresh.d, fresh.column_bits) == (3, 4, 5, 32)

    mine = AccessTrace()
    assert start_trace(mine, 1, 2, 3, 8) is mine
    assert mine.failed == 1

    mine.record(0, 0, 1)
    with pytest.raises(MalformedTrace):
        start_trace(mine, 1, 2, 3, 8)


def test_reader_logs_each_element_once() -> None:
    trace = start_trace(None, 0, 2, 3, 8)
    reader = HelperReader({1: [10, 11], 2: [20, 21]}, trace, element_bits=4)
    assert reader.read_many(1, [0, 1, 0]) == [10, 11, 10]
    assert len(trace.events) == 2
    assert reader.report().bits_transferred == 8


def test_reader_refusals() -> None:
    trace = start_trace(None, 0, 2, 3, 8)
    reader = HelperReader({0: [1], 1: [2, None], 2: None}, trace)
    with pytest.raises(MissingHelper):
        reader.read(0, 0)
    with pytest.raises(MissingHelper):
        reader.read(2, 0)
    with pytest.raises(MissingHelper):
        reader.read(3, 0)
    with pytest.raises(MissingHelper):
        reader.read(1, 1)
    with pytest.raises(MissingHelper):
        reader.read(1, 5)
    assert trace.events == []


def sample_report() -> AccessReport:
    return AccessReport(
        bits_read=28,
        bits_transferred=28,
        elements_read=28,
        helpers_used=(0, 2, 3),
        optimal_bits=24,
        ratio=Fraction(7, 6),
        uncoded=True,
    )


def test_report_json_is_stable() -> None:
    text = sample_report().to_json()
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data["ratio"] == {"numerator": 7, "denominator": 6}
    assert data["helpers_used"] == [0, 2, 3]
    assert AccessReport.from_dict(data) == sample_report()


def test_scaled_report_keeps_the_ratio() -> None:
    scaled = sample_report().scaled(10)
    assert scaled.bits_transferred == 280
    assert scaled.optimal_bits == 240
    assert scaled.ratio == Fraction(7, 6)
    assert scaled.helpers_used == (0, 2, 3)

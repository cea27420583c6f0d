"""MDS and repair certification sweep behind `verify`."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from src.cli.codecs import StripeCodec
from src.codes.bitlinear import rank
from src.codes.errors import CodeError
from src.meter.bandwidth import AccessReport, AccessTrace

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
FALLBACK = "FALLBACK"
SKIP = "SKIP"


@dataclass
class CheckRow:
    check: str
    target: str
    result: str
    bits: int | None = None
    optimal: int | None = None
    ratio: Fraction | None = None
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.result == FAIL

    def render(self) -> str:
        bits = "" if self.bits is None else str(self.bits)
        optimal = "" if self.optimal is None else str(self.optimal)
        ratio = "" if self.ratio is None else str(self.ratio)
        line = f"{self.check:<7} {self.target:<16} {self.result:<9} {bits:>6} {optimal:>8} {ratio:>6}"
        return f"{line}  {self.detail}" if self.detail else line


HEADER_ROW = f"{'check':<7} {'target':<16} {'result':<9} {'bits':>6} {'optimal':>8} {'ratio':>6}"


def _random_info(codec: StripeCodec, rng: np.random.Generator) -> list[int]:
    return [int(b) for b in rng.integers(0, 2, codec.info_bits)]


def check_subsets(codec: StripeCodec, trials: int, rng: np.random.Generator) -> list[CheckRow]:
    """Every k-subset must carry full rank and decode random codewords exactly."""
    words = []
    for _ in range(trials):
        info = _random_info(codec, rng)
        words.append((info, codec.library_encode([codec.to_column(b) for b in _split(codec, info)])))

    rows = []
    for subset in combinations(range(codec.n), codec.k):
        target = "{" + ",".join(map(str, subset)) + "}"
        known = [pos for c in subset for pos in codec.positions(c)]
        if rank(codec.generator[known]) != codec.info_bits:
            rows.append(CheckRow("mds", target, FAIL, detail="columns do not span the message"))
            continue
        try:
            for info, word in words:
                decoded = codec.library_decode({c: word[c] for c in subset})
                if [b for col in decoded for b in codec.from_column(col)] != info:
                    raise CodeError("decoded message differs")
        except CodeError as exc:
            rows.append(CheckRow("mds", target, FAIL, detail=str(exc)))
            continue
        rows.append(CheckRow("mds", target, PASS))
    return rows


def _split(codec: StripeCodec, bits: list[int]) -> list[list[int]]:
    w = codec.column_bits
    return [bits[c * w : (c + 1) * w] for c in range(codec.k)]


def check_repairs(codec: StripeCodec, trials: int, rng: np.random.Generator) -> list[CheckRow]:
    words = [
        codec.library_encode([codec.to_column(b) for b in _split(codec, _random_info(codec, rng))])
        for _ in range(max(trials, 1))
    ]
    rows = []
    for f in range(codec.n):
        if not codec.repairable(f):
            rows.append(CheckRow("repair", str(f), SKIP, detail="no repair scheme for these parameters"))
            continue
        report: AccessReport | None = None
        try:
            for word in words:
                helpers = {c: col for c, col in enumerate(word) if c != f}
                repaired, report = codec.library_repair(f, helpers, AccessTrace())
                if codec.from_column(repaired) != codec.from_column(word[f]):
                    raise CodeError("repaired column differs from the original")
        except CodeError as exc:
            rows.append(CheckRow("repair", str(f), FAIL, detail=str(exc)))
            continue

        row = CheckRow("repair", str(f), PASS, report.bits_transferred, report.optimal_bits, report.ratio)
        if codec.expects_optimal(f):
            if report.ratio != 1 or not report.uncoded:
                row.result = FAIL
                row.detail = "optimal plan missed the cut-set bound"
        elif report.ratio > 1 and codec.name == "multilayer_evenodd":
            row.result = FALLBACK
            row.detail = "full-decode repair"
        rows.append(row)
    return rows


def run_verify(codec: StripeCodec, trials: int, seed: int) -> list[CheckRow]:
    rng = np.random.default_rng(seed)
    rows = check_subsets(codec, trials, rng) + check_repairs(codec, trials, rng)
    failures = sum(row.failed for row in rows)
    logger.info(f"verify {codec.name}: {len(rows)} checks, {failures} failed")
    return rows

"""Repair ledger: every repair, decode and verify the CLI runs, in SQLite."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import aiosqlite

from src.db.schema import ALL_DDL
from src.meter.bandwidth import AccessReport

logger = logging.getLogger(__name__)

DB_PATH = Path(__file__).parent.parent.parent / "data" / "xmds.db"


@dataclass
class LedgerEvent:
    command: str
    code: str
    k: int
    r: int
    d: int
    p: int
    column_index: int | None = None
    stripes: int = 0
    bits_read: int = 0
    bits_transferred: int = 0
    optimal_bits: int = 0
    ratio_num: int = 0
    ratio_den: int = 1
    uncoded: bool = True
    report_json: str = ""
    outcome: str = "ok"
    detail: str = ""

    def with_report(self, report: AccessReport) -> LedgerEvent:
        self.bits_read = report.bits_read
        self.bits_transferred = report.bits_transferred
        self.optimal_bits = report.optimal_bits
        self.ratio_num = report.ratio.numerator
        self.ratio_den = report.ratio.denominator
        self.uncoded = report.uncoded
        self.report_json = report.to_json()
        return self


class Ledger:
    def __init__(self, path: Path = DB_PATH):
        self.path = path
        self._db: aiosqlite.Connection | None = None

    async def connect(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._db = await aiosqlite.connect(self.path)
        self._db.row_factory = aiosqlite.Row
        await self._db.execute("PRAGMA journal_mode=WAL")
        await self._migrate()

    async def close(self) -> None:
        if self._db:
            await self._db.close()
            self._db = None

    async def __aenter__(self) -> Ledger:
        await self.connect()
        return self

    async def __aexit__(self, *exc) -> None:
        await self.close()

    async def _migrate(self) -> None:
        for ddl in ALL_DDL:
            await self._db.execute(ddl)
        await self._db.commit()

    # ── Writes ────────────────────────────────────────────────────────────────

    async def record(self, event: LedgerEvent) -> int:
        """Append one event. Returns the row id."""
        async with self._db.execute(
            """
            INSERT INTO events (command, code, k, r, d, p, column_index, stripes,
                                bits_read, bits_transferred, optimal_bits,
                                ratio_num, ratio_den, uncoded, report_json,
                                outcome, detail)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            RETURNING id
            """,
            (
                event.command,
                event.code,
                event.k,
                event.r,
                event.d,
                event.p,
                event.column_index,
                event.stripes,
                event.bits_read,
                event.bits_transferred,
                event.optimal_bits,
                event.ratio_num,
                event.ratio_den,
                int(event.uncoded),
                event.report_json,
                event.outcome,
                event.detail,
            ),
        ) as cur:
            row = await cur.fetchone()
        await self._db.commit()
        logger.debug(f"ledger: recorded {event.command} on {event.code} as #{row[0]}")
        return row[0]

    # ── Reads ─────────────────────────────────────────────────────────────────

    async def recent(self, limit: int = 20, command: str | None = None) -> list[dict]:
        if command is None:
            query, args = "SELECT * FROM events ORDER BY id DESC LIMIT ?", (limit,)
        else:
            query = "SELECT * FROM events WHERE command = ? ORDER BY id DESC LIMIT ?"
            args = (command, limit)
        async with self._db.execute(query, args) as cur:
            return [dict(r) for r in await cur.fetchall()]

    async def stats(self) -> dict:
        async with self._db.execute("SELECT COUNT(*) FROM events") as cur:
            total = (await cur.fetchone())[0]
        async with self._db.execute(
            "SELECT command, COUNT(*) FROM events GROUP BY command ORDER BY command"
        ) as cur:
            by_command = {r[0]: r[1] for r in await cur.fetchall()}
        async with self._db.execute(
            """SELECT code, COUNT(*), COALESCE(SUM(bits_transferred), 0)
               FROM events GROUP BY code ORDER BY code"""
        ) as cur:
            by_code = {r[0]: {"events": r[1], "bits_transferred": r[2]} for r in await cur.fetchall()}
        async with self._db.execute(
            """SELECT COALESCE(SUM(bits_transferred), 0), COALESCE(SUM(optimal_bits), 0)
               FROM events WHERE command = 'repair'"""
        ) as cur:
            transferred, optimal = await cur.fetchone()
        async with self._db.execute(
            "SELECT COUNT(*) FROM events WHERE outcome != 'ok'"
        ) as cur:
            failures = (await cur.fetchone())[0]
        return {
            "events": total,
            "by_command": by_command,
            "by_code": by_code,
            "repair_bits_transferred": transferred,
            "repair_optimal_bits": optimal,
            "failures": failures,
        }

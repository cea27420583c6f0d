"""xmds command-line entry point: encode, erase, repair, decode, verify, bench, history."""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys
import time
from pathlib import Path

import aiosqlite
import numpy as np
from dotenv import load_dotenv

from src.cli.codecs import StripeCodec, build_codec, codec_from_header
from src.cli.shards import (
    CodeId,
    Manifest,
    digest,
    load_shards,
    pack_bits,
    shard_path,
    write_shard,
)
from src.cli.verify import HEADER_ROW, run_verify
from src.codes.errors import (
    CodeError,
    DecodeFailed,
    InvalidParams,
    MalformedShard,
    MissingHelper,
    TooManyErasures,
)
from src.db.database import DB_PATH, Ledger, LedgerEvent
from src.meter.bandwidth import AccessReport
from src.ring.core import is_prime

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING_HELPER = 2
EXIT_TOO_MANY_ERASURES = 3
# same value as EXIT_USAGE: a failed certification is reported like a bad invocation
EXIT_VERIFY_FAILED = 1

DEFAULT_SEED = 0
DEFAULT_BENCH_BYTES = 1 << 20


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this CLI reserves 2 for missing helpers."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _prime(value: str) -> int:
    p = int(value)
    if not is_prime(p):
        raise argparse.ArgumentTypeError(f"p must be prime, got {p}")
    return p


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {raw!r}") from None


def build_parser() -> Parser:
    code = Parser(add_help=False)
    code.add_argument("--code", default=CodeId.MULTILAYER_EVENODD.label, choices=[c.label for c in CodeId])
    code.add_argument("--k", type=int)
    code.add_argument("--r", type=int)
    code.add_argument("--d", type=int)
    code.add_argument("--p", type=_prime)
    code.add_argument("--e", type=int)
    code.add_argument("--layers-auto", action=argparse.BooleanOptionalAction, default=True)

    parser = Parser(prog="xmds", description="Binary MDS array codes with optimal repair access.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    enc = sub.add_parser("encode", parents=[code], help="split a file into k+r column shards")
    enc.add_argument("input", type=Path)
    enc.add_argument("--out", type=Path, required=True)

    era = sub.add_parser("erase", help="delete shards to simulate failed nodes")
    era.add_argument("directory", type=Path)
    era.add_argument("columns", type=int, nargs="+")

    rep = sub.add_parser("repair", help="rebuild one shard from its helpers")
    rep.add_argument("directory", type=Path)
    rep.add_argument("column", type=int)
    rep.add_argument("--report", type=Path, help="report path (default col_<f>.report.json)")

    dec = sub.add_parser("decode", help="rebuild the original file")
    dec.add_argument("directory", type=Path)
    dec.add_argument("--out", type=Path, required=True)

    ver = sub.add_parser("verify", parents=[code], help="certify MDS and repair access")
    ver.add_argument("--trials", type=int)
    ver.add_argument("--seed", type=int, default=DEFAULT_SEED)

    ben = sub.add_parser("bench", parents=[code], help="time encode, repair and decode")
    ben.add_argument("--size", type=int, default=DEFAULT_BENCH_BYTES, help="bytes of random data")
    ben.add_argument("--seed", type=int, default=DEFAULT_SEED)

    his = sub.add_parser("history", help="recent ledger entries")
    his.add_argument("--limit", type=int, default=20)
    his.add_argument("--command", dest="only")
    return parser


def _codec(args: argparse.Namespace) -> StripeCodec:
    return build_codec(
        CodeId.from_label(args.code), args.k, args.r, args.d, args.p, args.e, args.layers_auto
    )


# ── Ledger ──────────────────────────────────────────────────────────────────


def _ledger_path() -> Path:
    raw = os.environ.get("XMDS_LEDGER_PATH")
    return Path(raw) if raw else DB_PATH


def _ledger_enabled() -> bool:
    return os.environ.get("XMDS_LEDGER", "1") != "0"


async def _append(event: LedgerEvent) -> int:
    async with Ledger(_ledger_path()) as ledger:
        return await ledger.record(event)


def record(event: LedgerEvent) -> None:
    if not _ledger_enabled():
        return
    try:
        asyncio.run(_append(event))
    except (aiosqlite.Error, OSError) as exc:
        logger.warning(f"ledger write failed: {exc}")


def _event(command: str, codec: StripeCodec, **fields) -> LedgerEvent:
    s = codec.shape
    return LedgerEvent(command=command, code=codec.name, k=s.k, r=s.r, d=s.d, p=s.p, **fields)


# ── Commands ────────────────────────────────────────────────────────────────


def cmd_encode(args: argparse.Namespace) -> int:
    codec = _codec(args)
    data = args.input.read_bytes()
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    stripes = -(-bits.size // codec.info_bits)
    padded = np.zeros(stripes * codec.info_bits, dtype=np.uint8)
    padded[: bits.size] = bits
    coded = codec.encode_stripes(padded.reshape(stripes, codec.info_bits))

    args.out.mkdir(parents=True, exist_ok=True)
    for c in range(codec.n):
        write_shard(shard_path(args.out, c), codec.header(c, stripes), coded[:, c, :].ravel())
    Manifest(len(data), digest(data), codec.name, stripes).write(args.out)
    logger.info(f"encoded {len(data)} bytes into {stripes} stripes of {codec.name} ({codec.n} shards)")
    return EXIT_OK


def cmd_erase(args: argparse.Namespace) -> int:
    for c in args.columns:
        path = shard_path(args.directory, c)
        if not path.exists():
            logger.warning(f"{path.name} is already gone")
            continue
        path.unlink()
        logger.info(f"erased {path.name}")
    return EXIT_OK


def _stripe_columns(codec: StripeCodec, found: dict[int, np.ndarray], nbits: int) -> dict[int, np.ndarray]:
    if nbits % codec.column_bits:
        raise MalformedShard(f"payload of {nbits} bits is not a whole number of {codec.column_bits}-bit stripes")
    stripes = nbits // codec.column_bits
    return {c: bits.reshape(stripes, codec.column_bits) for c, bits in found.items()}


def cmd_repair(args: argparse.Namespace) -> int:
    header, found = load_shards(args.directory)
    codec = codec_from_header(header)
    f = args.column
    if not 0 <= f < codec.n:
        raise InvalidParams(f"column {f} outside 0..{codec.n - 1}")
    if f in found:
        logger.warning(f"col_{f}.shard exists; rebuilding it from the other columns anyway")
        del found[f]

    columns = _stripe_columns(codec, found, header.payload_len_bits)
    stripes = header.payload_len_bits // codec.column_bits
    try:
        repaired, report = codec.repair_stripes(f, columns)
    except CodeError as exc:
        record(_event("repair", codec, column_index=f, stripes=stripes, outcome="error", detail=str(exc)))
        raise

    write_shard(shard_path(args.directory, f), codec.header(f, stripes), repaired.ravel())
    report_path = args.report or args.directory / f"col_{f}.report.json"
    report_path.write_text(report.to_json())
    record(_event("repair", codec, column_index=f, stripes=stripes).with_report(report))
    logger.info(
        f"repaired column {f}: {report.bits_transferred} bits from {list(report.helpers_used)} "
        f"(bound {report.optimal_bits}, ratio {report.ratio})"
    )
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    header, found = load_shards(args.directory)
    codec = codec_from_header(header)
    manifest = Manifest.read(args.directory)
    if manifest.code != codec.name:
        raise MalformedShard(f"manifest describes {manifest.code}, shards hold {codec.name}")

    columns = _stripe_columns(codec, found, header.payload_len_bits)
    missing = sorted(set(range(codec.n)) - set(columns))
    try:
        info = codec.decode_stripes(columns)
        data = pack_bits(info.ravel())[: manifest.length]
        if len(data) != manifest.length or digest(data) != manifest.sha256:
            raise DecodeFailed("decoded bytes do not match the manifest digest")
    except CodeError as exc:
        record(_event("decode", codec, stripes=manifest.stripes, outcome="error", detail=str(exc)))
        raise

    args.out.write_bytes(data)
    record(_event("decode", codec, stripes=manifest.stripes, detail=f"missing {missing}"))
    logger.info(f"decoded {len(data)} bytes with columns {missing} missing")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    codec = _codec(args)
    trials = args.trials if args.trials is not None else _env_int("XMDS_VERIFY_TRIALS", 4)
    rows = run_verify(codec, trials, args.seed)
    s = codec.shape
    print(f"{codec.name} k={s.k} r={s.r} d={s.d} p={s.p} e={s.e} layers={s.layers}")
    print(HEADER_ROW)
    for row in rows:
        print(row.render())
    failures = [row for row in rows if row.failed]
    record(
        _event(
            "verify",
            codec,
            outcome="fail" if failures else "ok",
            detail=f"{len(rows) - len(failures)}/{len(rows)} checks passed",
        )
    )
    return EXIT_OK if not failures else EXIT_VERIFY_FAILED


def cmd_bench(args: argparse.Namespace) -> int:
    codec = _codec(args)
    rng = np.random.default_rng(args.seed)
    stripes = max(1, -(-args.size * 8 // codec.info_bits))
    info = rng.integers(0, 2, (stripes, codec.info_bits), dtype=np.uint8)
    megabytes = stripes * codec.info_bits / 8 / 1e6

    start = time.perf_counter()
    coded = codec.encode_stripes(info)
    encode_s = time.perf_counter() - start
    print(f"encode  {stripes} stripes  {encode_s:.3f}s  {megabytes / max(encode_s, 1e-9):.1f} MB/s")

    reports: list[AccessReport] = []
    for f in range(codec.n):
        if not codec.repairable(f):
            print(f"repair  column {f}  skipped")
            continue
        helpers = {c: coded[:, c, :] for c in range(codec.n) if c != f}
        start = time.perf_counter()
        _, report = codec.repair_stripes(f, helpers)
        elapsed = time.perf_counter() - start
        reports.append(report)
        print(
            f"repair  column {f}  {elapsed:.3f}s  {report.bits_transferred // stripes} bits/stripe  "
            f"ratio {report.ratio}"
        )

    # lose the first r information columns
    survivors = {c: coded[:, c, :] for c in range(min(codec.shape.r, codec.k), codec.n)}
    start = time.perf_counter()
    decoded = codec.decode_stripes(survivors)
    decode_s = time.perf_counter() - start
    if not np.array_equal(decoded, info):
        raise DecodeFailed("benchmark decode did not reproduce the message")
    print(f"decode  {stripes} stripes  {decode_s:.3f}s  {megabytes / max(decode_s, 1e-9):.1f} MB/s")
    return EXIT_OK


async def _history(limit: int, only: str | None) -> tuple[list[dict], dict]:
    async with Ledger(_ledger_path()) as ledger:
        return await ledger.recent(limit, only), await ledger.stats()


def cmd_history(args: argparse.Namespace) -> int:
    rows, stats = asyncio.run(_history(args.limit, args.only))
    for row in rows:
        column = "" if row["column_index"] is None else f" col {row['column_index']}"
        bits = f" {row['bits_transferred']}/{row['optimal_bits']} bits" if row["command"] == "repair" else ""
        print(f"#{row['id']} {row['recorded_at']} {row['command']} {row['code']}{column}{bits} {row['outcome']}")
    print(f"{stats['events']} events, {stats['failures']} failures")
    for code, totals in stats["by_code"].items():
        print(f"  {code}: {totals['events']} events, {totals['bits_transferred']} bits transferred")
    return EXIT_OK


COMMANDS = {
    "encode": cmd_encode,
    "erase": cmd_erase,
    "repair": cmd_repair,
    "decode": cmd_decode,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "history": cmd_history,
}


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"xmds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    level = "DEBUG" if args.verbose else os.environ.get("XMDS_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )

    try:
        return COMMANDS[args.command](args)
    except MissingHelper as exc:
        logger.error(f"repair needs an unavailable helper: {exc}")
        return EXIT_MISSING_HELPER
    except TooManyErasures as exc:
        logger.error(str(exc))
        return EXIT_TOO_MANY_ERASURES
    except (UsageError, CodeError, OSError) as exc:
        logger.error(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

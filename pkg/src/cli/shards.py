"""Shard files: 32-byte little-endian header plus a bit-packed column payload."""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import asdict, dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from src.codes.errors import InvalidParams, MalformedShard

logger = logging.getLogger(__name__)

MAGIC = b"XMDSARR\0"
VERSION = 1
HEADER = struct.Struct("<8sHB5HBHQ")
MANIFEST_NAME = "manifest.json"


class CodeId(IntEnum):
    MULTILAYER_EVENODD = 0
    HOU_BASE = 1
    HOU_TRANSFORMED = 2
    TE2 = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> CodeId:
        try:
            return cls[label.upper()]
        except KeyError:
            raise InvalidParams(f"unknown code {label!r}") from None


@dataclass(frozen=True)
class ShardHeader:
    code: CodeId
    k: int
    r: int
    d: int
    p: int
    e: int
    layers: int
    column_index: int
    payload_len_bits: int
    version: int = VERSION

    def pack(self) -> bytes:
        return HEADER.pack(
            MAGIC,
            self.version,
            int(self.code),
            self.k,
            self.r,
            self.d,
            self.p,
            self.e,
            self.layers,
            self.column_index,
            self.payload_len_bits,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> ShardHeader:
        if len(raw) < HEADER.size:
            raise MalformedShard(f"header needs {HEADER.size} bytes, got {len(raw)}")
        magic, version, code, k, r, d, p, e, layers, column, nbits = HEADER.unpack(raw[: HEADER.size])
        if magic != MAGIC:
            raise MalformedShard(f"bad magic {magic!r}")
        if version != VERSION:
            raise MalformedShard(f"unsupported shard version {version}")
        try:
            code_id = CodeId(code)
        except ValueError:
            raise MalformedShard(f"unknown code id {code}") from None
        return cls(code_id, k, r, d, p, e, layers, column, nbits, version)

    def same_code(self, other: ShardHeader) -> bool:
        return (self.code, self.k, self.r, self.d, self.p, self.e, self.layers) == (
            other.code,
            other.k,
            other.r,
            other.d,
            other.p,
            other.e,
            other.layers,
        )


def pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8).ravel(), bitorder="little").tobytes()


def unpack_bits(data: bytes, nbits: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits.size < nbits:
        raise MalformedShard(f"payload holds {bits.size} bits, header promises {nbits}")
    return bits[:nbits]


def shard_path(directory: Path, index: int) -> Path:
    return directory / f"col_{index}.shard"


def write_shard(path: Path, header: ShardHeader, bits: np.ndarray) -> None:
    if bits.size != header.payload_len_bits:
        raise MalformedShard(f"column {header.column_index}: {bits.size} bits, header says {header.payload_len_bits}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header.pack() + pack_bits(bits))


def read_shard(path: Path) -> tuple[ShardHeader, np.ndarray]:
    raw = path.read_bytes()
    header = ShardHeader.unpack(raw)
    expected = (header.payload_len_bits + 7) // 8
    payload = raw[HEADER.size :]
    if len(payload) != expected:
        raise MalformedShard(f"{path.name}: payload is {len(payload)} bytes, expected {expected}")
    return header, unpack_bits(payload, header.payload_len_bits)


def load_shards(directory: Path, n: int | None = None) -> tuple[ShardHeader, dict[int, np.ndarray]]:
    """Every readable shard in `directory`; all of them must describe the same code."""
    found: dict[int, np.ndarray] = {}
    reference: ShardHeader | None = None
    for path in sorted(directory.glob("col_*.shard")):
        header, bits = read_shard(path)
        if reference is None:
            reference = header
        elif not header.same_code(reference) or header.payload_len_bits != reference.payload_len_bits:
            raise MalformedShard(f"{path.name} belongs to a different encoding")
        found[header.column_index] = bits
    if reference is None:
        raise MalformedShard(f"no shards in {directory}")
    if n is not None and any(c >= n for c in found):
        raise MalformedShard(f"shard index beyond the {n} columns of the code")
    return reference, found


@dataclass
class Manifest:
    length: int
    sha256: str
    code: str
    stripes: int

    def write(self, directory: Path) -> None:
        (directory / MANIFEST_NAME).write_text(json.dumps(asdict(self), indent=2, sort_keys=True))

    @classmethod
    def read(cls, directory: Path) -> Manifest:
        path = directory / MANIFEST_NAME
        if not path.exists():
            raise MalformedShard(f"{path} is missing")
        data = json.loads(path.read_text())
        return cls(int(data["length"]), str(data["sha256"]), str(data["code"]), int(data["stripes"]))


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()

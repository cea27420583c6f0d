"""Multilayer transformed EVENODD: partition map, encode, helper selection, repair, decode."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

from src.codes.errors import InvalidParams, MissingHelper, TooManyErasures
from src.codes.evenodd import (
    CodeParams,
    CodewordArray,
    ErasurePattern,
    MdsReport,
    check_mds,
    decode_row,
    encode_row,
)
from src.codes.transform import (
    TransformSpec,
    apply_layer,
    default_coefficient,
    layer_pairs,
    pair_solve,
    row_digit,
    undo_layer,
)
from src.meter.bandwidth import AccessReport, AccessTrace, HelperReader, start_trace
from src.ring.core import RingElement

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
FULL_DECODE = "full_decode"


@dataclass(frozen=True)
class PartitionMap:
    """Info partitions get labels 1..ceil(k/t), parity partitions follow.

    The last partition of each side is right-aligned, so it overlaps its
    predecessor when t does not divide k (or r).
    """

    k: int
    r: int
    t: int

    def __post_init__(self) -> None:
        if not 1 <= self.t <= self.k:
            raise InvalidParams(f"t={self.t} must lie in 1..k={self.k}")
        if self.t > self.r:
            raise InvalidParams(f"t={self.t} exceeds r={self.r}")

    @staticmethod
    def _split(offset: int, count: int, t: int) -> tuple[tuple[int, ...], ...]:
        groups = math.ceil(count / t)
        parts = [tuple(range(offset + i * t, offset + (i + 1) * t)) for i in range(groups - 1)]
        parts.append(tuple(range(offset + count - t, offset + count)))
        return tuple(parts)

    @cached_property
    def info_partitions(self) -> tuple[tuple[int, ...], ...]:
        return self._split(0, self.k, self.t)

    @cached_property
    def parity_partitions(self) -> tuple[tuple[int, ...], ...]:
        return self._split(self.k, self.r, self.t)

    @cached_property
    def partitions(self) -> tuple[tuple[int, ...], ...]:
        return self.info_partitions + self.parity_partitions

    @property
    def labels(self) -> range:
        return range(1, len(self.partitions) + 1)

    def partition(self, label: int) -> tuple[int, ...]:
        if label not in self.labels:
            raise InvalidParams(f"no partition with label {label}")
        return self.partitions[label - 1]

    def is_info_label(self, label: int) -> bool:
        return label <= len(self.info_partitions)

    def owner(self, column: int) -> int:
        owners = [label for label in self.labels if column in self.partition(label)]
        if not owners:
            raise InvalidParams(f"column {column} outside 0..{self.k + self.r - 1}")
        return owners[-1]


@dataclass(frozen=True)
class RepairPlan:
    failed: int
    layer: int
    m_f: int
    r_f: int
    helpers: tuple[int, ...]
    row_set: tuple[int, ...]
    predicted_bits: int
    strategy: str = OPTIMAL

    def rows_for(self, helper: int) -> tuple[int, ...]:
        if helper not in self.helpers:
            raise InvalidParams(f"column {helper} is not a helper of this plan")
        return self.row_set


@dataclass(frozen=True)
class MultilayerCode:
    params: CodeParams
    partition_map: PartitionMap
    specs: tuple[TransformSpec, ...]

    @property
    def t(self) -> int:
        return self.params.t

    @property
    def layers(self) -> int:
        return len(self.specs)

    @property
    def rows(self) -> int:
        return self.params.rows

    @cached_property
    def base_params(self) -> CodeParams:
        p = self.params
        return CodeParams(p.k, p.r, p.p, e=p.e)

    def weight(self, label: int) -> int:
        return self.t ** (label - 1)

    def spec(self, label: int) -> TransformSpec:
        return self.specs[label - 1]


@lru_cache(maxsize=64)
def _base_mds(k: int, r: int, p: int, e: int) -> MdsReport:
    return check_mds(CodeParams(k, r, p, e=e))


def build_multilayer(
    k: int,
    r: int,
    d: int,
    p: int,
    e: int = 1,
    coefficient: RingElement | None = None,
) -> MultilayerCode:
    base = CodeParams(k, r, p, d=d, e=e)
    t = base.t
    if t > k:
        raise InvalidParams(f"t={t} exceeds k={k}; no layered construction exists")
    if r >= 3:
        report = _base_mds(k, r, p, e)
        if not report.ok:
            raise InvalidParams(
                f"base EVENODD k={k} r={r} p={p} e={e} is not MDS (fails on {sorted(report.counterexample)})"
            )

    pmap = PartitionMap(k, r, t)
    if t == 1:
        return MultilayerCode(base, pmap, ())

    coeff = coefficient if coefficient is not None else default_coefficient(base.modulus, e)
    specs = tuple(
        TransformSpec(part[0], t, base.n, coeff, systematic=pmap.is_info_label(label))
        for label, part in zip(pmap.labels, pmap.partitions)
    )
    params = CodeParams(k, r, p, d=d, e=e, layers=len(specs))
    logger.debug(
        f"built multilayer code k={k} r={r} d={d} p={p}: {len(specs)} layers, "
        f"{params.rows} rows per column"
    )
    return MultilayerCode(params, pmap, specs)


def encode_multilayer(info: Sequence[Sequence[RingElement]], code: MultilayerCode) -> CodewordArray:
    params = code.params
    if len(info) != params.k:
        raise InvalidParams(f"expected {params.k} information columns, got {len(info)}")
    for i, col in enumerate(info):
        if len(col) != params.rows:
            raise InvalidParams(f"information column {i} has {len(col)} elements, expected {params.rows}")

    columns: list[list[RingElement] | None] = [list(col) for col in info] + [None] * params.r
    pmap = code.partition_map
    labels = range(1, code.layers + 1)
    for label in reversed([lb for lb in labels if pmap.is_info_label(lb)]):
        columns = undo_layer(columns, code.spec(label), code.weight(label))

    parity: list[list[RingElement]] = [[] for _ in range(params.r)]
    for row in range(params.rows):
        encoded = encode_row([columns[c][row] for c in range(params.k)], code.base_params)
        for j in range(params.r):
            parity[j].append(encoded[params.k + j])
    for j in range(params.r):
        columns[params.k + j] = parity[j]

    for label in labels:
        columns = apply_layer(columns, code.spec(label), code.weight(label))
    return CodewordArray.from_lists(params, columns)


# ── Helper selection ───────────────────────────────────────────────────────


def _closure(chosen: set[int], later: list[set[int]]) -> set[int]:
    """Grow `chosen` until every later partition is either inside it or disjoint from it."""
    grown = set(chosen)
    changed = True
    while changed:
        changed = False
        for part in later:
            if part & grown and not part <= grown:
                grown |= part
                changed = True
    return grown


def _full_decode_plan(f: int, code: MultilayerCode) -> RepairPlan:
    params = code.params
    helpers = tuple(c for c in range(params.n) if c != f)[: params.k]
    m_f, r_f = divmod(f if f < params.k else f - params.k, code.t)
    return RepairPlan(
        failed=f,
        layer=0,
        m_f=m_f,
        r_f=r_f,
        helpers=helpers,
        row_set=tuple(range(params.rows)),
        predicted_bits=params.k * params.rows * (params.p - 1),
        strategy=FULL_DECODE,
    )


def select_helpers(f: int, code: MultilayerCode) -> RepairPlan:
    params = code.params
    if not 0 <= f < params.n:
        raise InvalidParams(f"column {f} outside 0..{params.n - 1}")
    if code.layers == 0:
        logger.warning(f"d=k leaves nothing to optimise; column {f} is repaired by a full decode")
        return _full_decode_plan(f, code)

    pmap = code.partition_map
    label = pmap.owner(f)
    part = pmap.partition(label)
    pos = part.index(f)
    mates = [c for c in part if c != f]
    later = [set(pmap.partition(j)) for j in range(label + 1, len(pmap.labels) + 1)]
    in_later = set().union(*later) if later else set()
    free = [c for c in range(params.n) if c not in part and c not in in_later]

    def search(idx: int, chosen: set[int]) -> set[int] | None:
        outside = chosen - set(part)
        if len(outside) > params.k:
            return None
        if idx == len(later):
            extra = [c for c in free if c not in chosen][: params.k - len(outside)]
            if len(outside) + len(extra) < params.k:
                return None
            return outside | set(extra)
        unit = later[idx]
        if not unit <= chosen:
            found = search(idx + 1, _closure(chosen | unit, later))
            if found is not None:
                return found
        return search(idx + 1, chosen)

    outside = search(0, _closure(set(mates), later))
    if outside is None:
        logger.warning(
            f"no all-or-nothing helper set for column {f} with k={params.k} r={params.r} "
            f"d={params.d}; falling back to a full decode"
        )
        return _full_decode_plan(f, code)

    weight = code.weight(label)
    rows = tuple(row for row in range(params.rows) if row_digit(row, weight, code.t) == pos)
    m_f = label - 1 if pmap.is_info_label(label) else label - 1 - len(pmap.info_partitions)
    return RepairPlan(
        failed=f,
        layer=label,
        m_f=m_f,
        r_f=pos,
        helpers=tuple(mates) + tuple(sorted(outside)),
        row_set=rows,
        predicted_bits=params.d * len(rows) * (params.p - 1),
    )


# ── Decoding ───────────────────────────────────────────────────────────────


def _decode_block(
    code: MultilayerCode,
    depth: int,
    known: Mapping[int, Sequence[RingElement]],
    nrows: int,
) -> list[list[RingElement]]:
    """Recover all n columns of a block that carries layers 1..depth.

    The block is split into t instances along the row digit of layer `depth`.
    Instances whose own partition column survived are decoded first; their
    values then strip the pairing terms out of the instances that lost it.
    """
    n = code.params.n
    if depth == 0:
        cols: list[list[RingElement]] = [[] for _ in range(n)]
        for row in range(nrows):
            full = decode_row({c: col[row] for c, col in known.items()}, code.base_params)
            for c in range(n):
                cols[c].append(full[c])
        return cols

    spec = code.spec(depth)
    t = spec.t
    weight = code.weight(depth)
    part = spec.columns
    alive = [a for a, c in enumerate(part) if c in known]
    lost = [a for a, c in enumerate(part) if c not in known]

    instance_rows = {u: [row for row in range(nrows) if row_digit(row, weight, t) == u] for u in range(t)}
    solved: dict[int, list[list[RingElement]]] = {}
    for u in alive + lost:
        rows_u = instance_rows[u]
        sub: dict[int, list[RingElement]] = {}
        for c, col in known.items():
            a = spec.position(c)
            if a is None or a == u:
                sub[c] = [col[row] for row in rows_u]
            elif u in alive:
                partner = known[part[u]]
                values = []
                for row in rows_u:
                    other = row + (a - u) * weight
                    if a < u:
                        values.append(pair_solve(col[row], partner[other], spec)[0])
                    else:
                        values.append(pair_solve(partner[other], col[row], spec)[1])
                sub[c] = values
            else:
                decoded = solved[a][part[u]]
                if a < u:
                    sub[c] = [col[row] + spec.coefficient * decoded[s] for s, row in enumerate(rows_u)]
                else:
                    sub[c] = [col[row] + decoded[s] for s, row in enumerate(rows_u)]
        solved[u] = _decode_block(code, depth - 1, sub, nrows // t)

    zero = code.params.modulus.zero()
    base_cols = [[zero] * nrows for _ in range(n)]
    for u, cols in solved.items():
        for s, row in enumerate(instance_rows[u]):
            for c in range(n):
                base_cols[c][row] = cols[c][s]
    return apply_layer(base_cols, spec, weight)


def _known_columns(
    surviving: Mapping[int, Sequence[RingElement]] | CodewordArray,
    pattern: ErasurePattern,
    code: MultilayerCode,
) -> dict[int, list[RingElement]]:
    params = code.params
    if isinstance(surviving, CodewordArray):
        surviving = surviving.surviving(pattern.erased)
    if len(pattern.erased) > params.r:
        raise TooManyErasures(f"{len(pattern.erased)} erasures, code tolerates {params.r}")
    known = {
        c: list(col)
        for c, col in surviving.items()
        if c not in pattern.erased and col is not None
    }
    if len(known) < params.k:
        raise TooManyErasures(f"only {len(known)} columns survive, need {params.k}")
    for c, col in known.items():
        if len(col) != params.rows:
            raise InvalidParams(f"column {c} has {len(col)} elements, expected {params.rows}")
    return known


def restore_multilayer(
    surviving: Mapping[int, Sequence[RingElement]] | CodewordArray,
    pattern: ErasurePattern,
    code: MultilayerCode,
) -> CodewordArray:
    known = _known_columns(surviving, pattern, code)
    full = _decode_block(code, code.layers, known, code.rows)
    return CodewordArray.from_lists(code.params, full)


def decode_multilayer(
    surviving: Mapping[int, Sequence[RingElement]] | CodewordArray,
    pattern: ErasurePattern,
    code: MultilayerCode,
) -> tuple[tuple[RingElement, ...], ...]:
    return restore_multilayer(surviving, pattern, code).info


# ── Repair ─────────────────────────────────────────────────────────────────


def _repair_optimal(code: MultilayerCode, plan: RepairPlan, reader: HelperReader) -> list[RingElement]:
    f = plan.failed
    t = code.t
    pmap = code.partition_map
    label = plan.layer
    part = pmap.partition(label)
    i = plan.r_f
    weight = code.weight(label)
    row_set = set(plan.row_set)
    helpers = set(plan.helpers)

    values = {h: {row: reader.read(h, row) for row in plan.row_set} for h in plan.helpers}

    for j in range(len(pmap.labels), label, -1):
        later = set(pmap.partition(j))
        if not later & helpers:
            continue
        if not later <= helpers:
            raise MissingHelper(f"partition {sorted(later)} is only partly among the helpers")
        spec = code.spec(j)
        for c_lo, r_lo, c_hi, r_hi in layer_pairs(spec, code.weight(j), code.rows):
            if r_lo in row_set:
                values[c_lo][r_lo], values[c_hi][r_hi] = pair_solve(
                    values[c_lo][r_lo], values[c_hi][r_hi], spec
                )

    outside = [h for h in plan.helpers if h not in part]
    base: dict[int, dict[int, RingElement]] = {c: {} for c in range(code.params.n)}
    block = weight
    for start in range(0, code.rows, block * t):
        rows = list(range(start + i * block, start + (i + 1) * block))
        known = {q: [values[q][row] for row in rows] for q in outside}
        cols = _decode_block(code, label - 1, known, block)
        for c in range(code.params.n):
            for s, row in enumerate(rows):
                base[c][row] = cols[c][s]

    spec_m = code.spec(label)
    for a, c_a in enumerate(part):
        if a == i:
            continue
        for row in plan.row_set:
            diff = values[c_a][row] - base[c_a][row]
            other = row + (a - i) * weight
            # c_a sits below f in the partition: its pairing term carries the coefficient
            base[f][other] = diff * spec_m.coefficient_inverse if a < i else diff

    column = []
    for row in range(code.rows):
        u = row_digit(row, weight, t)
        own = base[f][row]
        if u == i:
            column.append(own)
            continue
        partner = base[part[u]][row + (i - u) * weight]
        column.append(own + spec_m.coefficient * partner if u > i else own + partner)
    return column


def repair_column(
    surviving: Mapping[int, Sequence[RingElement]] | CodewordArray,
    plan: RepairPlan,
    code: MultilayerCode,
    trace: AccessTrace | None = None,
) -> tuple[tuple[RingElement, ...], AccessReport]:
    params = code.params
    if isinstance(surviving, CodewordArray):
        surviving = surviving.surviving([plan.failed])
    trace = start_trace(trace, plan.failed, params.k, params.d, params.column_bits)
    reader: HelperReader[RingElement] = HelperReader(surviving, trace, element_bits=params.p - 1)

    if plan.strategy == FULL_DECODE:
        known = {h: reader.read_many(h, range(code.rows)) for h in plan.helpers}
        column = _decode_block(code, code.layers, known, code.rows)[plan.failed]
    else:
        column = _repair_optimal(code, plan, reader)

    report = reader.report()
    logger.debug(
        f"repaired column {plan.failed} ({plan.strategy}): read {report.bits_transferred} bits, "
        f"bound {report.optimal_bits}"
    )
    return tuple(column), report

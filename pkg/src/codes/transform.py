"""First (pairing) and systematic transformations over a partition of t columns.

Rows are flat lists of ring elements. A layer with stride `weight` looks at the
row digit u = (row // weight) % t; for partition positions lo < hi the layer
couples

    column c_lo, row with digit hi   ->  D[c_lo] + coefficient * D[c_hi]
    column c_hi, row with digit lo   ->  D[c_hi] + D[c_lo]

where the two rows differ only in that digit. Rows whose digit equals the
column's own position are left alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterator, Sequence

from src.codes.errors import InvalidTransform
from src.codes.evenodd import CodeParams, CodewordArray, encode_row
from src.ring.core import Modulus, RingElement, is_unit, ring_inv

logger = logging.getLogger(__name__)


def default_coefficient(modulus: Modulus, e: int) -> RingElement:
    return modulus.one() + modulus.monomial(e)


def row_digit(row: int, weight: int, t: int) -> int:
    return (row // weight) % t


@dataclass(frozen=True)
class TransformSpec:
    partition_start: int
    t: int
    n: int
    coefficient: RingElement
    systematic: bool = False

    def __post_init__(self) -> None:
        if self.t < 1 or self.t > self.n:
            raise InvalidTransform(f"partition width {self.t} does not fit {self.n} columns")
        if not 0 <= self.partition_start < self.n:
            raise InvalidTransform(f"partition start {self.partition_start} outside 0..{self.n - 1}")
        if self.t > 1:
            one = self.coefficient.modulus.one()
            if not is_unit(self.coefficient):
                raise InvalidTransform(f"coefficient {self.coefficient} is not invertible")
            if not is_unit(self.coefficient + one):
                raise InvalidTransform(f"coefficient + 1 = {self.coefficient + one} is not invertible")
        if self.partition_start + self.t > self.n:
            logger.warning(
                f"partition {self.columns} wraps around column {self.n - 1}; wrap-around is experimental"
            )

    @classmethod
    def contiguous(
        cls,
        start: int,
        t: int,
        n: int,
        modulus: Modulus,
        e: int = 1,
        coefficient: RingElement | None = None,
        systematic: bool = False,
    ) -> TransformSpec:
        coeff = coefficient if coefficient is not None else default_coefficient(modulus, e)
        return cls(start, t, n, coeff, systematic)

    @property
    def columns(self) -> tuple[int, ...]:
        return tuple((self.partition_start + i) % self.n for i in range(self.t))

    def position(self, column: int) -> int | None:
        cols = self.columns
        return cols.index(column) if column in cols else None

    @cached_property
    def coefficient_inverse(self) -> RingElement:
        return ring_inv(self.coefficient)

    @cached_property
    def pair_divisor_inverse(self) -> RingElement:
        return ring_inv(self.coefficient + self.coefficient.modulus.one())


@dataclass(frozen=True)
class InstanceBundle:
    instances: tuple[CodewordArray, ...]

    def __post_init__(self) -> None:
        if not self.instances:
            raise InvalidTransform("an instance bundle needs at least one instance")
        first = self.instances[0].params
        for inst in self.instances[1:]:
            if inst.params != first:
                raise InvalidTransform("all instances must share parameters")

    @property
    def params(self) -> CodeParams:
        return self.instances[0].params


def layer_pairs(spec: TransformSpec, weight: int, rows: int) -> Iterator[tuple[int, int, int, int]]:
    """Yield (c_lo, row_lo, c_hi, row_hi) for every coupled pair of a layer."""
    cols = spec.columns
    t = spec.t
    for row in range(rows):
        u = row_digit(row, weight, t)
        for lo in range(u):
            yield cols[lo], row, cols[u], row + (lo - u) * weight


def pair_forward(d_lo: RingElement, d_hi: RingElement, spec: TransformSpec) -> tuple[RingElement, RingElement]:
    return d_lo + spec.coefficient * d_hi, d_hi + d_lo


def pair_solve(u, v, spec: TransformSpec):
    """Invert one pairing: u = a_ij + c*a_ji, v = a_ji + a_ij  ->  (a_ij, a_ji).

    Accepts single ring elements or equal-length sequences of them.
    """
    if isinstance(u, RingElement):
        a_ji = (u + v) * spec.pair_divisor_inverse
        return v + a_ji, a_ji
    if len(u) != len(v):
        raise InvalidTransform(f"pair vectors differ in length: {len(u)} vs {len(v)}")
    solved = [pair_solve(x, y, spec) for x, y in zip(u, v)]
    return [s[0] for s in solved], [s[1] for s in solved]


def apply_layer(
    columns: Sequence[Sequence[RingElement]], spec: TransformSpec, weight: int
) -> list[list[RingElement]]:
    out = [list(col) if col is not None else None for col in columns]
    rows = len(columns[spec.columns[0]])
    for c_lo, r_lo, c_hi, r_hi in layer_pairs(spec, weight, rows):
        out[c_lo][r_lo], out[c_hi][r_hi] = pair_forward(
            columns[c_lo][r_lo], columns[c_hi][r_hi], spec
        )
    return out


def undo_layer(
    columns: Sequence[Sequence[RingElement]], spec: TransformSpec, weight: int
) -> list[list[RingElement]]:
    for c in spec.columns:
        if columns[c] is None:
            raise InvalidTransform(f"cannot undo a layer without partition column {c}")
    out = [list(col) if col is not None else None for col in columns]
    rows = len(columns[spec.columns[0]])
    for c_lo, r_lo, c_hi, r_hi in layer_pairs(spec, weight, rows):
        out[c_lo][r_lo], out[c_hi][r_hi] = pair_solve(
            columns[c_lo][r_lo], columns[c_hi][r_hi], spec
        )
    return out


def first_transform(bundle: InstanceBundle, spec: TransformSpec) -> CodewordArray:
    params = bundle.params
    if spec.n != params.n:
        raise InvalidTransform(f"spec is for {spec.n} columns, code has {params.n}")
    if len(bundle.instances) != spec.t:
        raise InvalidTransform(f"need {spec.t} instances, got {len(bundle.instances)}")
    if spec.t == 1:
        return bundle.instances[0]
    if params.layers and params.t != spec.t:
        raise InvalidTransform(f"instances were built with t={params.t}, spec has t={spec.t}")

    weight = params.rows
    stacked = [
        [v for inst in bundle.instances for v in inst.columns[c]] for c in range(params.n)
    ]
    out = apply_layer(stacked, spec, weight)
    new_params = replace(params, d=params.k + spec.t - 1, layers=params.layers + 1)
    return CodewordArray.from_lists(new_params, out)


def systematic_transform(
    info: Sequence[Sequence[RingElement]], spec: TransformSpec, params: CodeParams
) -> CodewordArray:
    """Store `info` verbatim and derive parities through the substituted base rows.

    The base rows are the pair-solved info, i.e. entries
    x^(p-e) a_{j,l} + (1 + x^(p-e)) a_{l,j} above the diagonal and
    x^(p-e) (a_{j,l} + a_{l,j}) below it for the default coefficient.
    """
    if len(info) != params.k:
        raise InvalidTransform(f"expected {params.k} information columns, got {len(info)}")
    if any(c >= params.k for c in spec.columns) or spec.partition_start + spec.t > params.k:
        raise InvalidTransform(f"systematic partition {spec.columns} must lie inside the information columns")
    rows = len(info[0])
    if rows % spec.t or any(len(col) != rows for col in info):
        raise InvalidTransform("information columns must hold t equal instances")

    base_info = undo_layer(info, spec, rows // spec.t) if spec.t > 1 else [list(c) for c in info]
    base = CodeParams(params.k, params.r, params.p, e=params.e)
    parity: list[list[RingElement]] = [[] for _ in range(params.r)]
    for row in range(rows):
        encoded = encode_row([base_info[c][row] for c in range(params.k)], base)
        for j in range(params.r):
            parity[j].append(encoded[params.k + j])

    if spec.t == 1:
        out_params = base
    else:
        out_params = CodeParams(params.k, params.r, params.p, d=params.k + spec.t - 1, e=params.e, layers=1)
    return CodewordArray.from_lists(out_params, [list(c) for c in info] + parity)


def transform_equivalence_check(bundle: InstanceBundle, spec: TransformSpec) -> bool:
    """The systematic form of the first transform's info columns must equal it bit for bit."""
    first = first_transform(bundle, spec)
    if any(c >= bundle.params.k for c in spec.columns):
        return undo_layer(first.columns, spec, bundle.params.rows) == [
            [v for inst in bundle.instances for v in inst.columns[c]]
            for c in range(bundle.params.n)
        ]
    systematic = systematic_transform(first.info, spec, bundle.params)
    return systematic.columns == first.columns

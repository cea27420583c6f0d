"""Arithmetic in F2[x]/(1+x+...+x^(p-1)) and F2[x]/(x^n+1) over packed ints."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterator

import galois

from src.codes.errors import InvalidParams, ModulusMismatch, NotInvertible

logger = logging.getLogger(__name__)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


class ModulusKind(str, Enum):
    EVENODD = "evenodd"
    CIRCULANT = "circulant"


@dataclass(frozen=True)
class Modulus:
    """Ring descriptor. `size` is p for EVENODD rings and n for circulant ones.

    Both rings are handled as quotients of F2[x]/(x^size + 1): multiplication
    by x is a rotation of the size-bit vector. EVENODD elements are then
    brought to canonical form by clearing the x^(p-1) coefficient.
    """

    kind: ModulusKind
    size: int

    def __post_init__(self) -> None:
        if self.kind is ModulusKind.EVENODD:
            if self.size < 3 or not is_prime(self.size):
                raise InvalidParams(f"EVENODD ring needs a prime p >= 3, got {self.size}")
        elif self.size < 1:
            raise InvalidParams(f"circulant ring needs n >= 1, got {self.size}")

    @classmethod
    def evenodd(cls, p: int) -> Modulus:
        return cls(ModulusKind.EVENODD, p)

    @classmethod
    def circulant(cls, n: int) -> Modulus:
        return cls(ModulusKind.CIRCULANT, n)

    @property
    def mask(self) -> int:
        return (1 << self.size) - 1

    @property
    def polynomial(self) -> int:
        """The modulus polynomial as an int (bit i = coefficient of x^i)."""
        if self.kind is ModulusKind.EVENODD:
            return self.mask
        return (1 << self.size) | 1

    @property
    def element_bits(self) -> int:
        """Number of coefficient bits a canonical element actually carries."""
        return self.size - 1 if self.kind is ModulusKind.EVENODD else self.size

    def canonical(self, bits: int) -> int:
        if bits < 0:
            raise InvalidParams("coefficient vector must be non-negative")
        while bits >> self.size:
            bits = (bits & self.mask) ^ (bits >> self.size)
        if self.kind is ModulusKind.EVENODD and (bits >> (self.size - 1)) & 1:
            bits ^= self.mask
        return bits

    def element(self, bits: int) -> RingElement:
        return RingElement(self.canonical(bits), self)

    def from_bits(self, bits: list[int] | tuple[int, ...]) -> RingElement:
        value = 0
        for i, b in enumerate(bits):
            if b & 1:
                value |= 1 << i
        return self.element(value)

    def zero(self) -> RingElement:
        return RingElement(0, self)

    def one(self) -> RingElement:
        return self.element(1)

    def monomial(self, e: int) -> RingElement:
        return self.element(1 << (e % self.size))

    def random(self, rng: random.Random) -> RingElement:
        return self.element(rng.getrandbits(self.element_bits))

    def elements(self) -> Iterator[RingElement]:
        for bits in range(1 << self.element_bits):
            yield RingElement(bits, self)


@dataclass(frozen=True, slots=True)
class RingElement:
    coeffs: int
    modulus: Modulus

    def __post_init__(self) -> None:
        if self.coeffs < 0 or self.coeffs >> self.modulus.element_bits:
            raise InvalidParams(
                f"coefficients {self.coeffs:#x} are not canonical for {self.modulus}"
            )

    def __add__(self, other: RingElement) -> RingElement:
        return ring_add(self, other)

    __sub__ = __add__

    def __mul__(self, other: RingElement) -> RingElement:
        return poly_mul(self, other)

    def __lshift__(self, e: int) -> RingElement:
        return shift_mul(self, e)

    def __bool__(self) -> bool:
        return self.coeffs != 0

    def bits(self) -> list[int]:
        return [(self.coeffs >> i) & 1 for i in range(self.modulus.element_bits)]

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i, b in enumerate(self.bits()):
            if b:
                terms.append("1" if i == 0 else ("x" if i == 1 else f"x^{i}"))
        return "+".join(terms)


def _same_modulus(a: RingElement, b: RingElement) -> None:
    if a.modulus != b.modulus:
        raise ModulusMismatch(f"{a.modulus} vs {b.modulus}")


def _rotate(bits: int, e: int, size: int, mask: int) -> int:
    e %= size
    if not e:
        return bits
    return ((bits << e) | (bits >> (size - e))) & mask


def ring_add(a: RingElement, b: RingElement) -> RingElement:
    _same_modulus(a, b)
    # canonical + canonical stays canonical: the x^(p-1) bit is clear on both sides
    return RingElement(a.coeffs ^ b.coeffs, a.modulus)


def shift_mul(a: RingElement, e: int) -> RingElement:
    if e < 0:
        raise InvalidParams(f"shift exponent must be >= 0, got {e}")
    m = a.modulus
    return RingElement(m.canonical(_rotate(a.coeffs, e, m.size, m.mask)), m)


def poly_mul(a: RingElement, f: RingElement) -> RingElement:
    _same_modulus(a, f)
    m = a.modulus
    acc = 0
    bits = f.coeffs
    i = 0
    while bits:
        if bits & 1:
            acc ^= _rotate(a.coeffs, i, m.size, m.mask)
        bits >>= 1
        i += 1
    return RingElement(m.canonical(acc), m)


@lru_cache(maxsize=4096)
def _inverse_bits(coeffs: int, modulus: Modulus) -> int:
    g = galois.Poly.Int(coeffs)
    d, s, _ = galois.egcd(g, galois.Poly.Int(modulus.polynomial))
    if d.degree != 0:
        raise NotInvertible(f"{modulus.element(coeffs)} shares the factor {d} with the modulus")
    inv = modulus.canonical(int(s))
    if poly_mul(RingElement(coeffs, modulus), RingElement(inv, modulus)).coeffs != 1:
        raise NotInvertible(f"extended Euclid produced no inverse for {modulus.element(coeffs)}")
    return inv


def ring_inv(f: RingElement) -> RingElement:
    if not f.coeffs:
        raise NotInvertible("zero has no inverse")
    return RingElement(_inverse_bits(f.coeffs, f.modulus), f.modulus)


def is_unit(f: RingElement) -> bool:
    try:
        ring_inv(f)
    except NotInvertible:
        return False
    return True


def solve_scaled(u: RingElement, f: RingElement) -> RingElement:
    """Return u / f."""
    return poly_mul(u, ring_inv(f))

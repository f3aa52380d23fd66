"""
Dyadic Registers
Points of [0,1] as exact bit strings, and the baker transform as a register shift.
"""

import math
from collections.abc import Iterator
from dataclasses import dataclass

from src.errors import CertifiedPrecisionError, DomainError

# decode() is exact up to this many digits; deeper registers round toward zero
FLOAT_DIGITS = 53


def _reverse_bits(word: int, width: int) -> int:
    """Reverse the lowest `width` bits of `word`."""
    if width == 0:
        return 0
    return int(format(word, f"0{width}b")[::-1], 2)


@dataclass(frozen=True)
class BitString:
    """Exact depth-D dyadic point of [0,1], MSB first.

    Digits beyond `depth` are zero: the register is the terminating expansion of
    its value, so a depth-d register names the point itself rather than an interval.
    """

    word: int  # digits packed MSB first, word < 2**depth
    depth: int  # number of certified digits

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise DomainError(f"depth must be nonnegative, got {self.depth}")
        if not 0 <= self.word < (1 << self.depth):
            raise DomainError(f"word {self.word} does not fit in {self.depth} digits")

    @classmethod
    def from_bits(cls, bits: str) -> "BitString":
        """Parse a '0'/'1' string, MSB first (the JSON form)."""
        if bits and set(bits) - {"0", "1"}:
            raise DomainError(f"not a bit string: {bits!r}")
        return cls(int(bits, 2) if bits else 0, len(bits))

    @classmethod
    def zeros(cls, depth: int) -> "BitString":
        return cls(0, depth)

    @classmethod
    def ones(cls, depth: int) -> "BitString":
        return cls((1 << depth) - 1, depth)

    @property
    def bits(self) -> str:
        return format(self.word, f"0{self.depth}b") if self.depth else ""

    def bit(self, k: int) -> int:
        """Digit k, 1-indexed; zero past the register."""
        if k < 1:
            raise DomainError(f"digit index must be >= 1, got {k}")
        if k > self.depth:
            return 0
        return (self.word >> (self.depth - k)) & 1

    def padded(self, depth: int) -> "BitString":
        """Same point with trailing zero digits up to `depth`."""
        if depth < self.depth:
            raise DomainError(f"cannot pad depth {self.depth} down to {depth}")
        return BitString(self.word << (depth - self.depth), depth)

    def prefix(self, count: int) -> int:
        """The top `count` digits as an integer."""
        if count > self.depth:
            raise CertifiedPrecisionError(f"need {count} digits, register holds {self.depth}")
        return self.word >> (self.depth - count)

    def complement(self) -> "BitString":
        """Flip every held digit."""
        return BitString(self.word ^ ((1 << self.depth) - 1), self.depth)

    def __str__(self) -> str:
        return self.bits


@dataclass(frozen=True)
class Phase:
    """A point (ξ, x) of the baker phase space.

    `xi` holds ξ̄₀, ξ̄₋₁, … and `x` holds x̄₁, x̄₂, …, both MSB first.
    """

    xi: BitString  # backward register
    x: BitString  # forward register

    @property
    def valid_forward(self) -> int:
        """Forward steps (B) remaining: each consumes one ξ digit."""
        return self.xi.depth

    @property
    def valid_backward(self) -> int:
        """Backward steps (B⁻¹) remaining: each consumes one x digit."""
        return self.x.depth


def encode(v: float, depth: int) -> BitString:
    """Truncated binary expansion of v; dyadic rationals take the terminating form."""
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    if not 0.0 <= v <= 1.0 or math.isnan(v):
        raise DomainError(f"value {v} outside [0, 1]")
    word = min(math.floor(math.ldexp(v, depth)), (1 << depth) - 1)
    return BitString(word, depth)


def decode(b: BitString) -> float:
    """Value of the register; exact for depth <= 53, rounded toward zero beyond."""
    if b.depth <= FLOAT_DIGITS:
        return math.ldexp(b.word, -b.depth)
    return math.ldexp(b.word >> (b.depth - FLOAT_DIGITS), -FLOAT_DIGITS)


def baker_k(p: Phase, k: int) -> Phase:
    """Apply B^k as a pure register shift.

    Forward steps move the top k digits of ξ, reversed, onto the front of x.
    Backward steps move the top |k| digits of x, reversed, onto the front of ξ.
    """
    if k == 0:
        return p
    if k > 0:
        if k > p.valid_forward:
            raise CertifiedPrecisionError(
                f"B^{k} needs {k} digits of xi, register holds {p.valid_forward}"
            )
        top = p.xi.word >> (p.xi.depth - k)
        rest = p.xi.word & ((1 << (p.xi.depth - k)) - 1)
        x_word = (_reverse_bits(top, k) << p.x.depth) | p.x.word
        return Phase(BitString(rest, p.xi.depth - k), BitString(x_word, p.x.depth + k))
    m = -k
    if m > p.valid_backward:
        raise CertifiedPrecisionError(
            f"B^{k} needs {m} digits of x, register holds {p.valid_backward}"
        )
    top = p.x.word >> (p.x.depth - m)
    rest = p.x.word & ((1 << (p.x.depth - m)) - 1)
    xi_word = (_reverse_bits(top, m) << p.xi.depth) | p.xi.word
    return Phase(BitString(xi_word, p.xi.depth + m), BitString(rest, p.x.depth - m))


def phi(v: float) -> float:
    """Distance to the nearest integer."""
    f = v - math.floor(v)
    return min(f, 1.0 - f)


def phi_prime(v: float) -> int:
    """Right-continuous derivative of phi on [0,1): +1 on [0, 1/2), -1 on [1/2, 1)."""
    f = v - math.floor(v)
    return 1 if f < 0.5 else -1


def phi_prime_bit(first_digit: int) -> int:
    """phi_prime read off the leading digit of a register."""
    return 1 - 2 * first_digit


def meet(x: BitString, y: BitString) -> BitString:
    """Digitwise AND, the x∧y of the jump-time bookkeeping."""
    if x.depth != y.depth:
        raise DomainError(f"depth mismatch: {x.depth} vs {y.depth}")
    return BitString(x.word & y.word, x.depth)


def all_bitstrings(depth: int) -> Iterator[BitString]:
    """Every register of the given depth, in increasing order."""
    for word in range(1 << depth):
        yield BitString(word, depth)

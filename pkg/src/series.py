"""
Certified Series
Truncated evaluators for the Takagi curve T, the stable series S, G and the bridge H,
plus the scaling and bridge identities that connect them.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import quad

from src.bitreg import (
    BitString,
    Phase,
    baker_k,
    decode,
    encode,
    phi,
    phi_prime,
    phi_prime_bit,
)
from src.errors import CertifiedPrecisionError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.6
DEFAULT_TRUNCATION = 48
DEFAULT_DEPTH = 64
WORD_BITS = 64  # sampling registers are uint64 words

# One ulp of relative error per accumulated term; folded into every tail bound
ROUNDOFF = 2.0**-52
_WORD_SCALE = 2.0**-WORD_BITS


@dataclass(frozen=True)
class Params:
    """Roughness parameter and truncation settings."""

    gamma: float  # in (1/2, 1)
    truncation: int = DEFAULT_TRUNCATION  # N, last series index kept
    depth: int = DEFAULT_DEPTH  # D, register depth used for sampling

    def __post_init__(self) -> None:
        if not 0.5 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (1/2, 1), got {self.gamma}")
        if self.truncation < 1:
            raise DomainError(f"truncation must be >= 1, got {self.truncation}")
        if not self.truncation <= self.depth <= WORD_BITS:
            raise DomainError(
                f"need truncation <= depth <= {WORD_BITS}, got N={self.truncation} D={self.depth}"
            )

    @classmethod
    def from_kappa(
        cls, kappa: float, truncation: int = DEFAULT_TRUNCATION, depth: int = DEFAULT_DEPTH
    ) -> "Params":
        if not 0.5 < kappa < 1.0:
            raise DomainError(f"kappa must lie in (1/2, 1), got {kappa}")
        return cls(gamma=1.0 / (2.0 * kappa), truncation=truncation, depth=depth)

    @property
    def kappa(self) -> float:
        return 1.0 / (2.0 * self.gamma)

    @property
    def s_bound(self) -> float:
        """sup |S| = κ/(1−κ)."""
        return self.kappa / (1.0 - self.kappa)

    @property
    def takagi_bound(self) -> float:
        """sup T <= 1/(2(1−γ))."""
        return 0.5 / (1.0 - self.gamma)

    @property
    def takagi_tail(self) -> float:
        return 0.5 * self.gamma ** (self.truncation + 1) / (1.0 - self.gamma)

    @property
    def stable_tail(self) -> float:
        return self.kappa ** (self.truncation + 1) / (1.0 - self.kappa)


@dataclass(frozen=True)
class SeriesValue:
    """A truncated sum and a certified radius around the exact value."""

    value: float
    tail_bound: float

    def __add__(self, other: "SeriesValue") -> "SeriesValue":
        return SeriesValue(self.value + other.value, self.tail_bound + other.tail_bound)

    def __sub__(self, other: "SeriesValue") -> "SeriesValue":
        return SeriesValue(self.value - other.value, self.tail_bound + other.tail_bound)

    def __neg__(self) -> "SeriesValue":
        return SeriesValue(-self.value, self.tail_bound)

    def scaled(self, c: float) -> "SeriesValue":
        return SeriesValue(c * self.value, abs(c) * self.tail_bound)

    def shifted(self, c: float) -> "SeriesValue":
        """Add an exactly known constant."""
        return SeriesValue(self.value + c, self.tail_bound)

    def agrees_with(self, other: "SeriesValue") -> bool:
        return abs(self.value - other.value) <= self.tail_bound + other.tail_bound


@dataclass(frozen=True)
class Residual:
    """One identity check: |lhs − rhs| against its certified bound."""

    name: str
    residual: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.bound

    @classmethod
    def between(cls, name: str, lhs: SeriesValue, rhs: SeriesValue) -> "Residual":
        return cls(name, abs(lhs.value - rhs.value), lhs.tail_bound + rhs.tail_bound)


def _roundoff(n_terms: int, magnitude: float) -> float:
    return (n_terms + 1) * magnitude * ROUNDOFF


def _low_bits(b: BitString, drop: int) -> BitString:
    """The register 2^drop·b mod 1."""
    depth = b.depth - drop
    return BitString(b.word & ((1 << depth) - 1), depth)


def takagi(x: BitString, p: Params) -> SeriesValue:
    """T(x) = Σ γⁿ Φ(2ⁿx), n = 0..N.

    Terms with n >= depth vanish (the register is a dyadic point), so short
    registers are summed exactly and carry no truncation tail.
    """
    n_terms = min(p.truncation + 1, x.depth)
    value = 0.0
    gn = 1.0
    for n in range(n_terms):
        value += gn * phi(decode(_low_bits(x, n)))
        gn *= p.gamma
    tail = p.takagi_tail if x.depth > p.truncation + 1 else 0.0
    return SeriesValue(value, tail + _roundoff(n_terms, p.takagi_bound))


def stable_S(xi: BitString, p: Params) -> SeriesValue:
    """S(ξ) = Σ_{n=1..N} κⁿ(1 − 2ξ̄_{−(n−1)}); constant in x."""
    value = 0.0
    kn = p.kappa
    for n in range(1, p.truncation + 1):
        value += kn * phi_prime_bit(xi.bit(n))
        kn *= p.kappa
    return SeriesValue(value, p.stable_tail + _roundoff(p.truncation, p.s_bound))


def stable_S_direct(xi: BitString, x: BitString, p: Params) -> SeriesValue:
    """S(ξ,x) = Σ κⁿ Φ′(B₂ⁿ(ξ,x)) evaluated through actual baker iterates."""
    phase = Phase(xi.padded(max(xi.depth, p.truncation)), x)
    value = 0.0
    kn = p.kappa
    for n in range(1, p.truncation + 1):
        value += kn * phi_prime(decode(baker_k(phase, n).x))
        kn *= p.kappa
    return SeriesValue(value, p.stable_tail + _roundoff(p.truncation, p.s_bound))


def g_function(x: BitString, p: Params) -> SeriesValue:
    """g(x) = Σ_{m>=0} κ^m [Φ′((1+x)/2^{m+1}) − Φ′(x/2^{m+1})].

    Only the m = 0 term survives: the constant −2 under the right-continuous Φ′.
    """
    value = 0.0
    km = 1.0
    for m in range(p.truncation + 1):
        upper = BitString((1 << x.depth) | x.word, x.depth + 1 + m)
        lower = BitString(x.word, x.depth + 1 + m)
        value += km * (phi_prime(decode(upper)) - phi_prime(decode(lower)))
        km *= p.kappa
    return SeriesValue(value, 2.0 * p.stable_tail)


def bridge_H(xi: BitString, x: BitString, p: Params) -> SeriesValue:
    """H(ξ,x) = T(x) − x·S(ξ,0), the closed form."""
    xv = decode(x)
    t = takagi(x, p)
    s = stable_S(xi, p)
    return SeriesValue(
        t.value - xv * s.value,
        t.tail_bound + xv * s.tail_bound + _roundoff(2, p.takagi_bound + p.s_bound),
    )


def _phi_exact(f: Fraction) -> Fraction:
    return min(f, 1 - f)


def bridge_H_series(xi: BitString, x: BitString, p: Params) -> SeriesValue:
    """Two-sided series for H, computed from baker iterates of (ξ,x) and (ξ,0).

    Summed over all n the displayed series equals T(x) + x·S(ξ); H is the forward
    half (n >= 0) minus the backward half (n < 0). Backward increments are formed
    in exact rationals before the γ^{-k} weight is applied.
    """
    n = p.truncation
    if xi.depth < n or x.depth < n:
        raise CertifiedPrecisionError(
            f"two-sided series needs {n} digits each way, got xi={xi.depth} x={x.depth}"
        )
    phase = Phase(xi, x)
    anchor = Phase(xi, BitString.zeros(x.depth))

    forward = 0.0
    gn = 1.0
    for k in range(n + 1):
        forward += gn * (phi(decode(baker_k(phase, -k).x)) - phi(decode(baker_k(anchor, -k).x)))
        gn *= p.gamma

    backward = 0.0
    for k in range(1, n + 1):
        moved = baker_k(phase, k).x
        fixed = baker_k(anchor, k).x
        diff = _phi_exact(Fraction(moved.word, 1 << moved.depth)) - _phi_exact(
            Fraction(fixed.word, 1 << fixed.depth)
        )
        backward += float(diff) * p.gamma ** (-k)

    tail = p.takagi_tail + p.stable_tail + _roundoff(2 * n, p.takagi_bound + p.s_bound)
    return SeriesValue(forward - backward, tail)


def _G(xi: BitString, p: Params) -> SeriesValue:
    """G(ξ,x) = S(ξ,x) − S(0,x)."""
    return stable_S(xi, p) - stable_S(BitString.zeros(1), p)


def jacobian(phase: Phase, p: Params) -> np.ndarray:
    """DF of (ξ, x, y) ↦ (B(ξ,x), γy + Φ(B₂(ξ,x)))."""
    slope = 0.5 * phi_prime_bit(phase.xi.bit(1))
    return np.array([[2.0, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, slope, p.gamma]])


def stable_vector(xi: BitString, p: Params) -> np.ndarray:
    """X(ξ,x) = (0, 1, −S(ξ))."""
    return np.array([0.0, 1.0, -stable_S(xi, p).value])


def scaling_checks(xi: BitString, x: BitString, p: Params) -> list[Residual]:
    """Residuals of the one-step scaling identities at (ξ, x)."""
    if xi.depth < 1 or x.depth < 1:
        raise CertifiedPrecisionError("scaling checks need one digit in each register")
    phase = Phase(xi, x)
    fwd = baker_k(phase, 1)
    bwd = baker_k(phase, -1)
    lead = xi.bit(1)
    slope = phi_prime_bit(lead)

    s_here = stable_S(xi, p)
    s_next = stable_S(fwd.xi, p)
    s_rule = s_here.scaled(2.0 * p.gamma).shifted(-slope)

    g_rule = _G(xi, p).scaled(p.kappa) + _G(baker_k(Phase(BitString.zeros(1), x), -1).xi, p)

    h_rule = (
        bridge_H(xi, x, p)
        .scaled(p.gamma)
        .shifted(slope * decode(x))
        + SeriesValue(0.5 * lead, 0.0)
        - s_next.scaled(0.5 * lead)
    )

    t_rule = takagi(x, p).scaled(p.gamma).shifted(phi(decode(fwd.x)))

    flow = jacobian(phase, p) @ stable_vector(xi, p) - 0.5 * stable_vector(fwd.xi, p)
    flow_bound = 0.5 * (s_next.tail_bound + 2.0 * p.gamma * s_here.tail_bound)

    return [
        Residual.between("s_scaling", s_next, s_rule),
        Residual.between("g_scaling", _G(bwd.xi, p), g_rule),
        Residual.between("h_scaling", bridge_H(fwd.xi, fwd.x, p), h_rule),
        Residual.between("attractor", takagi(fwd.x, p), t_rule),
        Residual("stable_vector", float(np.max(np.abs(flow))), flow_bound),
    ]


def fiber_gap(xi: BitString, x: BitString, y: BitString, p: Params) -> SeriesValue:
    """T(y) − (T(x) + ∫ₓʸ S(ξ,z) dz): the vertical gap between stable fibers."""
    xv, yv = decode(x), decode(y)

    def integrand(z: float) -> float:
        return stable_S_direct(xi, encode(min(max(z, 0.0), 1.0), p.truncation), p).value

    integral, abserr = quad(integrand, xv, yv)
    t_gap = takagi(y, p) - takagi(x, p)
    return SeriesValue(
        t_gap.value - integral,
        t_gap.tail_bound + abs(yv - xv) * p.stable_tail + abserr + _roundoff(4, p.s_bound),
    )


def bridge_checks(
    xi: BitString, eta: BitString, x: BitString, y: BitString, p: Params
) -> list[Residual]:
    """The two bridge identities, with H taken from the two-sided series."""
    xv, yv = decode(x), decode(y)
    s_xi = stable_S(xi, p)
    s_eta = stable_S(eta, p)
    h_xy = bridge_H_series(xi, y, p) - bridge_H_series(xi, x, p)
    closed = (takagi(y, p) - takagi(x, p)) - s_xi.scaled(yv - xv)
    h_eta = bridge_H_series(eta, x, p) - bridge_H_series(xi, x, p)
    return [
        Residual.between("bridge_increment", h_xy, closed),
        Residual.between("bridge_exchange", h_eta, (s_xi - s_eta).scaled(xv)),
    ]


def takagi_words(words: np.ndarray, p: Params) -> np.ndarray:
    """Vectorized T over uint64 registers of depth 64."""
    out = np.zeros(words.shape, dtype=np.float64)
    gn = 1.0
    for n in range(min(p.truncation + 1, WORD_BITS)):
        frac = (words << np.uint64(n)).astype(np.float64) * _WORD_SCALE
        out += gn * np.minimum(frac, 1.0 - frac)
        gn *= p.gamma
    return out


def stable_S_words(words: np.ndarray, p: Params) -> np.ndarray:
    """Vectorized S over uint64 registers of depth 64."""
    out = np.zeros(words.shape, dtype=np.float64)
    kn = p.kappa
    for n in range(1, p.truncation + 1):
        digit = ((words >> np.uint64(WORD_BITS - n)) & np.uint64(1)).astype(np.float64)
        out += kn * (1.0 - 2.0 * digit)
        kn *= p.kappa
    return out


def words_to_float(words: np.ndarray) -> np.ndarray:
    return words.astype(np.float64) * _WORD_SCALE


def register_word(b: BitString) -> np.uint64:
    """A register of depth <= 64 as a left-aligned uint64 word."""
    if b.depth > WORD_BITS:
        raise DomainError(f"register deeper than {WORD_BITS} digits")
    return np.uint64(b.word << (WORD_BITS - b.depth))


def holder_slope(p: Params, grid_exponent: int = 16, k_min: int = 4, k_max: int = 16) -> float:
    """Regression slope of log₂ max_{|x−y|=2^-k} |T(x)−T(y)| against −k on a dyadic grid."""
    if not 1 <= k_min < k_max <= grid_exponent:
        raise DomainError(f"need 1 <= k_min < k_max <= {grid_exponent}")
    words = np.arange(1 << grid_exponent, dtype=np.uint64) << np.uint64(WORD_BITS - grid_exponent)
    values = takagi_words(words, p)
    values = np.append(values, values[0])  # T(1) = T(0)
    scales = np.arange(k_min, k_max + 1)
    maxima = []
    for k in scales:
        h = 1 << (grid_exponent - int(k))
        maxima.append(float(np.max(np.abs(values[h:] - values[:-h]))))
    slope = float(np.polyfit(-scales.astype(np.float64), np.log2(maxima), 1)[0])
    logger.debug("holder slope gamma=%s k=%s..%s: %s", p.gamma, k_min, k_max, slope)
    return slope

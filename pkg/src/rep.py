"""
Jump-Time Representations
Disagreement times of dyadic expansions and the telescoped forms of S- and H-increments.
"""

from dataclasses import dataclass

from src.bitreg import BitString, decode, meet, phi_prime_bit
from src.errors import DomainError
from src.series import Params, SeriesValue, stable_S

# Relative roundoff allowance per summed term
_ULP = 2.0**-52


@dataclass(frozen=True)
class JumpTimes:
    """Increasing disagreement positions, exhaustive below `complete_to`.

    τ-times are 0-indexed (ξ̄₀ is position 0); σ- and α-times are 1-indexed.
    """

    taus: tuple[int, ...]
    complete_to: int  # every position < complete_to was inspected

    def __post_init__(self) -> None:
        if any(a >= b for a, b in zip(self.taus, self.taus[1:])):
            raise DomainError(f"jump times must increase strictly: {self.taus}")
        if self.taus and (self.taus[0] < 0 or self.taus[-1] >= self.complete_to):
            raise DomainError(f"jump times {self.taus} outside [0, {self.complete_to})")

    def __len__(self) -> int:
        return len(self.taus)

    def __getitem__(self, ell: int) -> int:
        """σ_ℓ with the 1-indexed ℓ used by the representation formulas."""
        if not 1 <= ell <= len(self.taus):
            raise DomainError(f"index {ell} outside 1..{len(self.taus)}")
        return self.taus[ell - 1]


@dataclass(frozen=True)
class MacroscopicWitness:
    """Digit conditions equivalent to y > x + 1/2."""

    sigma1_is_one: bool
    x1_is_zero: bool
    y1_is_one: bool
    y_sigma2_is_one: bool  # False when σ₂ does not exist
    x_sigma2_is_zero: bool

    @classmethod
    def from_pair(cls, x: BitString, y: BitString) -> "MacroscopicWitness":
        sigma, _, _ = sigma_alpha_times(x, y)
        has_second = len(sigma) >= 2
        return cls(
            sigma1_is_one=len(sigma) >= 1 and sigma[1] == 1,
            x1_is_zero=x.bit(1) == 0,
            y1_is_one=y.bit(1) == 1,
            y_sigma2_is_one=has_second and y.bit(sigma[2]) == 1,
            x_sigma2_is_zero=has_second and x.bit(sigma[2]) == 0,
        )

    @property
    def holds(self) -> bool:
        return (
            self.sigma1_is_one
            and self.x1_is_zero
            and self.y1_is_one
            and self.y_sigma2_is_one
            and self.x_sigma2_is_zero
        )


def _positions(word: int, depth: int, offset: int) -> tuple[int, ...]:
    return tuple(k + offset for k in range(depth) if (word >> (depth - 1 - k)) & 1)


def _same_depth(a: BitString, b: BitString) -> None:
    if a.depth != b.depth:
        raise DomainError(f"depth mismatch: {a.depth} vs {b.depth}")


def tau_times(xi: BitString, eta: BitString) -> JumpTimes:
    """τ_ℓ: positions ℓ >= 0 where ξ̄_{−ℓ} ≠ η̄_{−ℓ}."""
    _same_depth(xi, eta)
    return JumpTimes(_positions(xi.word ^ eta.word, xi.depth, 0), xi.depth)


def sigma_alpha_times(x: BitString, y: BitString) -> tuple[JumpTimes, JumpTimes, tuple[int, ...]]:
    """σ (XOR positions), α (AND positions) and R_ℓ = #{p: α_p <= σ_ℓ}."""
    _same_depth(x, y)
    sigma = JumpTimes(_positions(x.word ^ y.word, x.depth, 1), x.depth + 1)
    alpha = JumpTimes(_positions(meet(x, y).word, x.depth, 1), x.depth + 1)
    counts = tuple(sum(1 for a in alpha.taus if a <= s) for s in sigma.taus)
    return sigma, alpha, counts


def s_diff_rep(xi: BitString, eta: BitString, p: Params) -> SeriesValue:
    """S(ξ) − S(η) = −2 Σ κ^{τ_ℓ+1} (−1)^{1−ξ̄_{−τ_ℓ}}.

    Global sign −1 relative to the displayed corollary, matching the
    right-continuous Φ′ used by stable_S.
    """
    kappa = p.kappa
    value = 0.0
    taus = tau_times(xi, eta).taus
    for tau in taus:
        if tau >= p.truncation:
            break
        value -= 2.0 * kappa ** (tau + 1) * (2 * xi.bit(tau + 1) - 1)
    tail = 2.0 * p.stable_tail + 2.0 * (len(taus) + 1) * p.s_bound * _ULP
    return SeriesValue(value, tail)


def s_oneterm_rep(xi: BitString, p: Params) -> SeriesValue:
    """S(ξ) = κ/(1−κ) − 2 Σ κ^{τ⁰_ℓ+1}, τ⁰ the positions of the one-digits of ξ."""
    kappa = p.kappa
    value = p.s_bound
    taus = tau_times(xi, BitString.zeros(xi.depth)).taus
    for tau in taus:
        if tau >= p.truncation:
            break
        value -= 2.0 * kappa ** (tau + 1)
    tail = 2.0 * p.stable_tail + 2.0 * (len(taus) + 1) * p.s_bound * _ULP
    return SeriesValue(value, tail)


def _tail_after(x: BitString, sigma: int) -> float:
    """2^σ·x mod 1."""
    depth = x.depth - sigma
    return decode(BitString(x.word & ((1 << depth) - 1), depth))


def _sigma_cut_tail(cut: int, p: Params) -> float:
    """Bound on the dropped terms σ > cut of an H representation."""
    g = p.gamma
    return (g ** (cut + 1) * p.s_bound + g**cut) / (1.0 - g)


def h_diff_rep(xi: BitString, x: BitString, y: BitString, p: Params) -> SeriesValue:
    """H(ξ,y) − H(ξ,x) as a sum over the jump times σ_ℓ of (x, y).

    Term ℓ is ε_ℓ[γ^{σ_ℓ}·S(ζ_ℓ) − γ^{σ_ℓ−1}·(2^{σ_ℓ}x mod 1)], where ζ_ℓ is the
    backward register of B^{−σ_ℓ} applied to (reflected ξ, y with digit σ_ℓ cleared):
    a zero, then y's digits σ_ℓ−1 … 1, then the digits of ξ with their signs flipped.
    The second summand is the midpoint correction of the m = 1 step.
    """
    sigma, _, _ = sigma_alpha_times(x, y)
    kappa, gamma = p.kappa, p.gamma
    s_xi = stable_S(xi, p)
    cut = min(x.depth, p.truncation)

    value = 0.0
    dropped = False
    for s in sigma.taus:
        if s > cut:
            dropped = True
            break
        sign = phi_prime_bit(1 - y.bit(s))
        prefix = kappa + sum(
            kappa**j * phi_prime_bit(y.bit(s - j + 1)) for j in range(2, s + 1)
        )
        zeta = prefix - kappa**s * s_xi.value
        value += sign * (gamma**s * zeta - gamma ** (s - 1) * _tail_after(x, s))

    tail = s_xi.tail_bound + (len(sigma) + 1) * (p.s_bound + 1.0) * _ULP * 4
    if dropped:
        tail += _sigma_cut_tail(cut, p)
    return SeriesValue(value, tail)


def j_series_terms(x: BitString, y: BitString, p: Params) -> list[float]:
    """Terms of the ξ = 0 series J, one per jump time σ_ℓ, via α/R bookkeeping.

    The bracket collects the one-digits of y below σ_ℓ: the common ones α_p with
    p <= R_ℓ and the earlier jump times σ_j where y carries the one.
    """
    sigma, alpha, counts = sigma_alpha_times(x, y)
    kappa, gamma = p.kappa, p.gamma
    terms = []
    for ell, (s, r) in enumerate(zip(sigma.taus, counts)):
        ones = sum(kappa ** (s + 1 - a) for a in alpha.taus[:r])
        ones += sum(kappa ** (s + 1 - t) for t in sigma.taus[:ell] if y.bit(t) == 1)
        bracket = p.s_bound - 2.0 * kappa ** (s + 1) / (1.0 - kappa) - 2.0 * ones
        sign = phi_prime_bit(1 - y.bit(s))
        terms.append(sign * (gamma**s * bracket - gamma ** (s - 1) * _tail_after(x, s)))
    return terms


@dataclass(frozen=True)
class SimpleHRepresentation:
    """H-increment split into the ξ-free series J and the drift (y−x)[S(0) − S(ξ)]."""

    j_series: SeriesValue
    drift: SeriesValue

    @property
    def total(self) -> SeriesValue:
        return self.j_series + self.drift


def h_diff_simple_rep(
    xi: BitString, x: BitString, y: BitString, p: Params
) -> SimpleHRepresentation:
    """H(ξ,y) − H(ξ,x) = J + (y − x)[S(0) − S(ξ)].

    The drift carries the opposite sign of the displayed corollary; with the
    right-continuous Φ′, S(0) is the maximum of S so the drift is >= 0 when y > x.
    """
    cut = min(x.depth, p.truncation)
    terms = j_series_terms(x, y, p)
    sigma, _, _ = sigma_alpha_times(x, y)
    kept = [t for s, t in zip(sigma.taus, terms) if s <= cut]
    j_tail = (len(terms) + 1) * (p.s_bound + 1.0) * _ULP * 4
    if len(kept) < len(terms):
        j_tail += _sigma_cut_tail(cut, p)
    # S(0) is exact: every digit is zero
    drift_factor = decode(y) - decode(x)
    s_gap = stable_S(BitString.zeros(1), p) - stable_S(xi, p)
    return SimpleHRepresentation(
        j_series=SeriesValue(sum(kept), j_tail),
        drift=s_gap.scaled(drift_factor),
    )


def _check_prefix(sigma: JumpTimes, ell: int, n_prefix: int) -> None:
    if n_prefix < 0 or sigma.taus[:n_prefix] != tuple(range(1, n_prefix + 1)):
        raise DomainError(f"need σ_1..σ_{n_prefix} = 1..{n_prefix}, got {sigma.taus}")
    if not n_prefix < ell <= len(sigma):
        raise DomainError(f"index {ell} must lie in {n_prefix + 1}..{len(sigma)}")


def remainder_bound(sigma: JumpTimes, ell: int, n_prefix: int, p: Params) -> float:
    """Bound on the J-series tail from index ℓ: γ^{σ_ℓ}/(1−γ)·κ/(1−κ)·(3+κ)/(1+κ)."""
    _check_prefix(sigma, ell, n_prefix)
    kappa = p.kappa
    return (p.gamma ** sigma[ell] / (1.0 - p.gamma)) * p.s_bound * (3.0 + kappa) / (1.0 + kappa)


def term_cap(sigma: JumpTimes, ell: int, n_prefix: int, p: Params) -> float:
    """Cap on the bracket of term ℓ beyond the prefix σ_1..σ_N."""
    _check_prefix(sigma, ell, n_prefix)
    kappa = p.kappa
    sigma_n = sigma[n_prefix] if n_prefix else 0
    exponent = 2 * ((sigma[ell] - sigma_n - 2) // 2 + 1)
    return p.s_bound * (3.0 + kappa - 2.0 * kappa**exponent) / (1.0 + kappa)

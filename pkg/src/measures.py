"""
Measures
Monte-Carlo estimates of the SBR marginal, the increment measures of S and H, the
telescoping identities between them, Fourier diagnostics and occupation measures.
"""

import enum
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from src.bitreg import BitString
from src.config import resolve_threads
from src.errors import DomainError, SamplingError
from src.series import (
    WORD_BITS,
    Params,
    stable_S,
    stable_S_words,
    takagi_words,
    words_to_float,
)

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 16  # samples per Philox key
_TOP_BIT = np.uint64(WORD_BITS - 1)
_HALF_WORD = np.uint64(1 << (WORD_BITS - 1))
_SEED_MASK = (1 << 64) - 1
_CHAR_BLOCK = 1024  # samples per cos/sin block in char_function


class MacroscopicSet(enum.Enum):
    """Restriction of the source space before the pushforward."""

    NONE = "none"
    DISTANCE = "distance"  # |a − b| > 1/2
    DIGIT = "digit"  # first dyadic digits differ


@dataclass(eq=False)
class EmpiricalMeasure:
    """Histogram of a pushforward, normalised by the number of draws.

    Masked-out draws count in n_samples but carry no mass, so restricted
    measures are sub-probability measures.
    """

    bin_edges: np.ndarray
    counts: np.ndarray  # int64 per bin
    n_samples: int
    seed: int
    vmin: float  # extremes over contributing samples; nan when none contributed
    vmax: float
    absmin: float

    @property
    def mass(self) -> np.ndarray:
        return self.counts / self.n_samples

    @property
    def stderr_bound(self) -> float:
        """Largest per-bin binomial standard error."""
        m = self.mass
        return float(np.sqrt(np.max(m * (1.0 - m)) / self.n_samples))

    @property
    def total_mass(self) -> float:
        return float(self.counts.sum()) / self.n_samples

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def mass_between(self, lo: float, hi: float) -> float:
        """Mass of the bins lying entirely inside [lo, hi]."""
        inside = (self.bin_edges[:-1] >= lo) & (self.bin_edges[1:] <= hi)
        return float(self.counts[inside].sum()) / self.n_samples

    def l2_density(self) -> float:
        """∫f² of the histogram density."""
        return float(np.sum(self.mass**2 / self.widths))

    def reflected_mass(self) -> np.ndarray:
        """Mass vector of the image under v ↦ −v, for symmetric binnings."""
        return self.mass[::-1]


@dataclass(frozen=True)
class _Partial:
    counts: np.ndarray
    vmin: float
    vmax: float
    absmin: float


def _philox_words(seed: int, chunk: int, stream: int, rows: int, size: int) -> np.ndarray:
    """Uniform uint64 words keyed by (seed, chunk, stream); independent of thread layout."""
    key = (seed & _SEED_MASK) | (chunk << 64) | (stream << 112)
    bits = np.random.Philox(key=key)
    return bits.random_raw(rows * size).reshape(rows, size)


def _chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def _map_chunks(kernel: Callable[[int, int], object], n: int, threads: int | None) -> list:
    """Run kernel(chunk, size) over every chunk; results come back in chunk order."""
    if n < 1:
        raise DomainError(f"need at least one sample, got {n}")
    sizes = _chunk_sizes(n)
    workers = min(resolve_threads(threads), len(sizes))
    logger.debug("fan-out: %s chunks over %s workers", len(sizes), workers)
    if workers == 1:
        return [kernel(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(kernel, range(len(sizes)), sizes))


def _restriction(restrict: MacroscopicSet, a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    if restrict is MacroscopicSet.NONE:
        return None
    if restrict is MacroscopicSet.DIGIT:
        return ((a ^ b) >> _TOP_BIT) == 1
    gap = np.where(a > b, a - b, b - a)
    return gap > _HALF_WORD


@dataclass(frozen=True)
class _Pushforward:
    """Draw layout and value map of one measure."""

    rows: int
    support: float  # values lie in [−support, support]
    evaluate: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]

    def draw(
        self, seed: int, chunk: int, stream: int, size: int, restrict: MacroscopicSet
    ) -> np.ndarray:
        words = _philox_words(seed, chunk, stream, self.rows, size)
        values, a, b = self.evaluate(words)
        mask = _restriction(restrict, a, b)
        if mask is not None:
            values = values[mask]
        if values.size and float(np.max(np.abs(values))) > self.support:
            raise SamplingError(
                f"sample {float(np.max(np.abs(values))):.17g} outside support ±{self.support:.17g}"
            )
        return values


def _sbr_map(p: Params) -> _Pushforward:
    def evaluate(words: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xi, x = words
        return stable_S_words(xi, p), xi, x

    return _Pushforward(rows=2, support=p.s_bound, evaluate=evaluate)


def _rho_map(p: Params) -> _Pushforward:
    # x is drawn to keep the λ³ layout; S does not read it
    def evaluate(words: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xi, eta, _x = words
        return stable_S_words(xi, p) - stable_S_words(eta, p), xi, eta

    return _Pushforward(rows=3, support=2.0 * p.s_bound, evaluate=evaluate)


def _chi_map(p: Params, xi: BitString | None) -> _Pushforward:
    s_fixed = None if xi is None else stable_S(xi, p).value

    def evaluate(words: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y, z = words
        s = stable_S_words(z, p) if s_fixed is None else s_fixed
        dt = takagi_words(x, p) - takagi_words(y, p)
        return dt - (words_to_float(x) - words_to_float(y)) * s, x, y

    return _Pushforward(rows=3, support=p.takagi_bound + p.s_bound, evaluate=evaluate)


def _histogram(
    pf: _Pushforward,
    n: int,
    seed: int,
    bins: int,
    restrict: MacroscopicSet,
    threads: int | None,
) -> EmpiricalMeasure:
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    edges = np.linspace(-pf.support, pf.support, bins + 1)

    def kernel(chunk: int, size: int) -> _Partial:
        values = pf.draw(seed, chunk, 0, size, restrict)
        counts = np.histogram(values, bins=edges)[0].astype(np.int64)
        if not values.size:
            return _Partial(counts, math.inf, -math.inf, math.inf)
        return _Partial(
            counts, float(values.min()), float(values.max()), float(np.abs(values).min())
        )

    parts = _map_chunks(kernel, n, threads)
    counts = np.sum([part.counts for part in parts], axis=0)
    vmin = min(part.vmin for part in parts)
    vmax = max(part.vmax for part in parts)
    absmin = min(part.absmin for part in parts)
    if not counts.sum():
        vmin = vmax = absmin = math.nan
    logger.info("sampled %s draws (seed=%s): mass %.6f", n, seed, counts.sum() / n)
    return EmpiricalMeasure(edges, counts, n, seed, vmin, vmax, absmin)


def sample_sbr_marginal(
    p: Params, n: int, seed: int, bins: int, threads: int | None = None
) -> EmpiricalMeasure:
    """Law of S(ξ) under uniform ξ; the x-marginal of the SBR measure for every x."""
    return _histogram(_sbr_map(p), n, seed, bins, MacroscopicSet.NONE, threads)


def sample_rho(
    p: Params,
    n: int,
    seed: int,
    bins: int,
    restrict: MacroscopicSet = MacroscopicSet.NONE,
    threads: int | None = None,
) -> EmpiricalMeasure:
    """Law of S(ξ) − S(η) under uniform (x, ξ, η), optionally restricted in (ξ, η)."""
    return _histogram(_rho_map(p), n, seed, bins, restrict, threads)


def sample_chi(
    p: Params,
    n: int,
    seed: int,
    bins: int,
    restrict: MacroscopicSet = MacroscopicSet.NONE,
    xi: BitString | None = None,
    threads: int | None = None,
) -> EmpiricalMeasure:
    """Law of H(ξ,x) − H(ξ,y) under uniform (x, y, ξ); ξ is held fixed when given."""
    return _histogram(_chi_map(p, xi), n, seed, bins, restrict, threads)


def sbr_samples(p: Params, n: int, seed: int, threads: int | None = None) -> np.ndarray:
    """The raw draws behind sample_sbr_marginal, in draw order."""
    pf = _sbr_map(p)
    parts = _map_chunks(
        lambda chunk, size: pf.draw(seed, chunk, 0, size, MacroscopicSet.NONE), n, threads
    )
    return np.concatenate(parts)


def sbr_invariance_residual(p: Params, n: int, seed: int) -> tuple[float, float]:
    """Per-sample |S(B(ξ,x)) − (2γS(ξ) − Φ′(B₂(ξ,x)))| maximum and its bound.

    One baker step shifts ξ's register left; the vacated last digit is zero.
    """
    xi = _philox_words(seed, 0, 0, 1, n)[0]
    lead = (xi >> _TOP_BIT).astype(np.float64)
    pushed = stable_S_words(xi << np.uint64(1), p)
    rule = 2.0 * p.gamma * stable_S_words(xi, p) - (1.0 - 2.0 * lead)
    bound = p.stable_tail * (1.0 + 2.0 * p.gamma) + 4.0 * p.truncation * p.s_bound * 2.0**-52
    return float(np.max(np.abs(pushed - rule))), bound


@dataclass(frozen=True)
class IntervalCheck:
    """One interval A of a telescoping comparison."""

    lo: float
    hi: float
    lhs: float  # direct estimate of the measure of [lo, hi)
    rhs: float  # truncated weighted sum of dilated restricted measures
    slack: float

    @property
    def discrepancy(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.slack


@dataclass(frozen=True)
class TelescopeReport:
    measure: str  # "rho" or "chi"
    dilation: float
    terms: int
    n_samples: int
    seed: int
    restrict: MacroscopicSet
    checks: tuple[IntervalCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def max_discrepancy(self) -> float:
        return max(check.discrepancy for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "dilation": self.dilation,
            "terms": self.terms,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "restrict": self.restrict.value,
            "passed": self.passed,
            "intervals": [
                {
                    "lo": c.lo,
                    "hi": c.hi,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                    "discrepancy": c.discrepancy,
                    "slack": c.slack,
                }
                for c in self.checks
            ],
        }


def interval_family(support: float, count: int = 16) -> list[tuple[float, float]]:
    """The whole support followed by count−1 adjacent cells covering it."""
    if count < 2:
        raise DomainError(f"need at least two intervals, got {count}")
    edges = np.linspace(-support, support, count)
    edges[-1] = math.nextafter(support, math.inf)
    cells = [(float(lo), float(hi)) for lo, hi in zip(edges[:-1], edges[1:])]
    return [(-support, float(edges[-1]))] + cells


def _telescope(
    name: str,
    pf: _Pushforward,
    dilation: float,
    intervals: Sequence[tuple[float, float]],
    n: int,
    seed: int,
    terms: int,
    restrict: MacroscopicSet,
    sigmas: float,
    threads: int | None,
) -> TelescopeReport:
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    if restrict is MacroscopicSet.NONE:
        raise DomainError("telescoping needs a macroscopic restriction")
    bounds = np.array(intervals, dtype=np.float64).reshape(-1, 2)
    scales = dilation ** np.arange(terms)
    weights = 0.5 ** np.arange(terms)

    def kernel(chunk: int, size: int) -> np.ndarray:
        direct = pf.draw(seed, chunk, 0, size, MacroscopicSet.NONE)
        restricted = pf.draw(seed, chunk, 1, size, restrict)
        dilated = np.outer(scales, restricted)  # terms × contributing draws
        out = np.zeros((len(bounds), 3))
        for i, (lo, hi) in enumerate(bounds):
            out[i, 0] = np.count_nonzero((direct >= lo) & (direct < hi))
            w = weights @ ((dilated >= lo) & (dilated < hi))
            out[i, 1] = w.sum()
            out[i, 2] = (w * w).sum()
        return out

    total = np.sum(_map_chunks(kernel, n, threads), axis=0)
    checks = []
    for (lo, hi), (hits, w_sum, w_sq) in zip(bounds, total):
        lhs = hits / n
        rhs = w_sum / n
        var_r = max(w_sq / n - rhs * rhs, 0.0)
        stderr = math.sqrt((lhs * (1.0 - lhs) + var_r) / n)
        slack = 2.0**-terms + sigmas * stderr
        checks.append(IntervalCheck(float(lo), float(hi), float(lhs), float(rhs), slack))
    report = TelescopeReport(name, dilation, terms, n, seed, restrict, tuple(checks))
    logger.info(
        "telescope %s: max discrepancy %.3g over %s intervals",
        name,
        report.max_discrepancy,
        len(checks),
    )
    return report


def telescope_rho_check(
    p: Params,
    intervals: Sequence[tuple[float, float]],
    n: int,
    seed: int,
    terms: int,
    restrict: MacroscopicSet = MacroscopicSet.DIGIT,
    sigmas: float = 3.0,
    threads: int | None = None,
) -> TelescopeReport:
    """ρ(A) against Σ_{m<terms} 2^{−m} ρ̌(κ^{−m}A); stream 0 feeds ρ, stream 1 feeds ρ̌."""
    return _telescope(
        "rho", _rho_map(p), p.kappa, intervals, n, seed, terms, restrict, sigmas, threads
    )


def telescope_chi_check(
    p: Params,
    intervals: Sequence[tuple[float, float]],
    n: int,
    seed: int,
    terms: int,
    restrict: MacroscopicSet = MacroscopicSet.DIGIT,
    sigmas: float = 3.0,
    threads: int | None = None,
) -> TelescopeReport:
    """χ(A) against Σ_{m<terms} 2^{−m} χ̌(γ^{−m}A)."""
    return _telescope(
        "chi", _chi_map(p, None), p.gamma, intervals, n, seed, terms, restrict, sigmas, threads
    )


@dataclass(eq=False)
class CharFunctionTable:
    """|φ(u)|² of an empirical law on a symmetric grid through u = 0."""

    u_grid: np.ndarray
    phi_sq: np.ndarray
    cumulative: np.ndarray  # running trapezoid integral from −u_max

    def l2_density_estimate(self) -> float:
        """Parseval: ∫f² = (1/2π)∫|φ|²."""
        return float(self.cumulative[-1]) / (2.0 * math.pi)

    def tail_fraction(self, share: float = 0.1) -> float:
        """Share of ∫|φ|² carried by the outer band (1 − share)·u_max < |u| <= u_max."""
        if not 0.0 < share <= 1.0:
            raise DomainError(f"share must lie in (0, 1], got {share}")
        u_max = float(self.u_grid[-1])
        cut = u_max * (1.0 - share)
        at = np.interp([-cut, cut], self.u_grid, self.cumulative)
        total = float(self.cumulative[-1])
        if total <= 0:
            return 0.0
        return (total - float(at[1] - at[0])) / total


def char_function(samples: np.ndarray, u_max: float, grid_points: int) -> CharFunctionTable:
    """Empirical |φ(u)|² = |mean exp(iu·sample)|² on 2k+1 points, k = grid_points // 2."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if not samples.size:
        raise DomainError("char_function needs at least one sample")
    if u_max <= 0 or grid_points < 2:
        raise DomainError(f"need u_max > 0 and grid_points >= 2, got {u_max}, {grid_points}")
    k = grid_points // 2
    u = u_max * np.arange(-k, k + 1) / k
    re = np.zeros_like(u)
    im = np.zeros_like(u)
    for start in range(0, samples.size, _CHAR_BLOCK):
        phase = np.outer(u, samples[start : start + _CHAR_BLOCK])
        re += np.cos(phase).sum(axis=1)
        im += np.sin(phase).sum(axis=1)
    phi_sq = np.clip((re * re + im * im) / float(samples.size) ** 2, 0.0, 1.0)
    phi_sq[k] = 1.0
    return CharFunctionTable(u, phi_sq, cumulative_trapezoid(phi_sq, u, initial=0.0))


@dataclass(eq=False)
class LocalTimeEstimate:
    """Occupation measure of x ↦ H(ξ,x) and the L² stability of its density."""

    measure: EmpiricalMeasure
    l2_norm: float  # at `bins`
    l2_norm_refined: float  # at 2·bins
    values: np.ndarray

    @property
    def refinement_ratio(self) -> float:
        return self.l2_norm_refined / self.l2_norm


def occupation_values(xi: BitString, p: Params, grid: int) -> np.ndarray:
    """H(ξ, j/grid) for j < grid, with j/grid truncated to 64 digits."""
    if grid < 2:
        raise DomainError(f"grid must be >= 2, got {grid}")
    words = (np.arange(grid, dtype=np.float64) / grid * 2.0**WORD_BITS).astype(np.uint64)
    s = stable_S(xi, p).value
    return takagi_words(words, p) - words_to_float(words) * s


def _occupation_histogram(values: np.ndarray, bins: int) -> EmpiricalMeasure:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        hi = math.nextafter(lo, math.inf)
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.histogram(values, bins=edges)[0].astype(np.int64)
    return EmpiricalMeasure(edges, counts, values.size, 0, lo, hi, float(np.abs(values).min()))


def occupation_local_time(xi: BitString, p: Params, grid: int, bins: int) -> LocalTimeEstimate:
    """Histogram of the grid values of H(ξ,·) and its L² norm at bins and 2·bins."""
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    values = occupation_values(xi, p, grid)
    coarse = _occupation_histogram(values, bins)
    fine = _occupation_histogram(values, 2 * bins)
    estimate = LocalTimeEstimate(coarse, coarse.l2_density(), fine.l2_density(), values)
    logger.info(
        "occupation xi=%s grid=%s: L2 %.6g -> %.6g",
        xi,
        grid,
        estimate.l2_norm,
        estimate.l2_norm_refined,
    )
    return estimate

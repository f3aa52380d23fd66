"""
Parameter Analysis
Transversality interval, the case-by-case positivity thresholds and their minimum γ₀,
plus exhaustive separation minima on the macroscopic sets.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from src.errors import AnalysisError, DomainError
from src.series import WORD_BITS, Params, stable_S_words, takagi_words, words_to_float

logger = logging.getLogger(__name__)

BRACKET = (0.6, 0.8)  # every case changes sign exactly once in here
DEFAULT_TOL = 1e-9
MAX_EXHAUSTIVE_DEPTH = 16


def _p(g: float) -> float:
    return 1.0 / (2.0 * g - 1.0)


def _k(g: float) -> float:
    """Remainder factor (6γ+1)/((1−γ)(2γ+1))."""
    return (6.0 * g + 1.0) / ((1.0 - g) * (2.0 * g + 1.0))


def _bracketed(
    lead: tuple[int, ...], minus: tuple[int, ...], rest: int
) -> Callable[[float], float]:
    """1/(2γ−1)·(Σ γ^lead − Σ γ^minus − γ^rest·K)."""

    def lhs(g: float) -> float:
        inner = sum(g**e for e in lead) - sum(g**e for e in minus) - g**rest * _k(g)
        return _p(g) * inner

    return lhs


def _with_extra(
    base: Callable[[float], float], extra: Callable[[float], float]
) -> Callable[[float], float]:
    return lambda g: base(g) - extra(g)


@dataclass(frozen=True)
class CaseSpec:
    """One subcase of the positivity analysis of J."""

    case_id: str
    condition: str  # constraint on the jump times σ₂, σ₃, ...
    lhs: Callable[[float], float]  # lower bound for J, positive below the threshold
    printed_threshold: float  # printed cutoff
    displayed_lhs: Callable[[float], float] | None = None  # as printed, where it differs


POSITIVITY_CASES: tuple[CaseSpec, ...] = (
    CaseSpec("1", "σ₂=5, σ₃≥6", _bracketed((1, 5), (), 6), 0.702),
    CaseSpec("2", "σ₂=4, σ₃≥5", _bracketed((1, 4), (), 5), 0.668),
    CaseSpec("3a", "σ₂=3, σ₃≥5", _bracketed((1, 3), (), 5), 0.681),
    CaseSpec("3b", "σ₂=3, σ₃=4, σ₄=5, σ₅≥6", _bracketed((1, 3), (4, 5), 6), 0.675),
    CaseSpec("4a", "σ₂=2, σ₃≥5", _bracketed((1, 2), (), 5), 0.697),
    CaseSpec(
        "4b",
        "σ₂=2, σ₃=4, σ₄=5, σ₅≥6",
        _with_extra(_bracketed((1, 2), (4, 5), 6), lambda g: 1.5 * g**3),
        0.674,
        displayed_lhs=_with_extra(_bracketed((1, 2), (4,), 5), lambda g: 1.5 * g**3),
    ),
    CaseSpec("4c", "σ₂=2, σ₃=3, σ₄≥6", _bracketed((1, 2), (3,), 6), 0.699),
    CaseSpec(
        "4d",
        "σ₂=2, σ₃=3, σ₄=5, σ₅≥6",
        _with_extra(_bracketed((1, 2), (3, 5), 6), lambda g: g**4),
        0.673,
        displayed_lhs=_with_extra(
            _bracketed((1, 2), (3, 5), 6), lambda g: g**4 * (2.0 * g - 1.0)
        ),
    ),
    CaseSpec("4e", "σ₂=2, σ₃=3, σ₄=4, σ₅≥6", _bracketed((1, 2), (3, 4), 6), 0.673),
    CaseSpec("4f", "σ₂=2, σ₃=3, σ₄=4, σ₅=5, σ₆≥7", _bracketed((1, 2), (3, 4, 5), 7), 0.682),
    CaseSpec(
        "4g",
        "σ₂=2, σ₃=3, σ₄=4, σ₅=5, σ₆=6, σ₇≥7",
        _bracketed((1, 2), (3, 4, 5, 6), 7),
        0.669,
        displayed_lhs=_bracketed((1, 2), (3, 5, 6), 7),
    ),
)


def case_by_id(case_id: str) -> CaseSpec:
    for case in POSITIVITY_CASES:
        if case.case_id == case_id:
            return case
    raise DomainError(f"unknown positivity case: {case_id}")


def transversality_bound(kappa: float) -> float:
    """2κ(1−2κ²)/(1−κ): uniform floor for |S(ξ)−S(η)| on |ξ−η| > 1/2, positive iff κ < 1/√2."""
    if not 0.5 < kappa < 1.0:
        raise DomainError(f"kappa must lie in (1/2, 1), got {kappa}")
    return 2.0 * kappa * (1.0 - 2.0 * kappa * kappa) / (1.0 - kappa)


def remark_bound(gamma: float) -> float:
    """(1/2)(2−3γ)/((2γ−1)(1−γ)), positive iff γ < 2/3."""
    if not 0.5 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (1/2, 1), got {gamma}")
    return 0.5 * (2.0 - 3.0 * gamma) / ((2.0 * gamma - 1.0) * (1.0 - gamma))


def case_threshold(case: CaseSpec, tol: float = DEFAULT_TOL, displayed: bool = False) -> float:
    """Root of the case's lower bound in the fixed bracket, by bisection."""
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    f = case.displayed_lhs if displayed and case.displayed_lhs is not None else case.lhs
    lo, hi = BRACKET
    if f(lo) * f(hi) >= 0:
        raise AnalysisError(
            f"case {case.case_id}: no sign change on [{lo}, {hi}] "
            f"(f={f(lo):.6g}, {f(hi):.6g})"
        )
    return float(bisect(f, lo, hi, xtol=tol))


def case_thresholds(tol: float = DEFAULT_TOL) -> dict[str, float]:
    return {case.case_id: case_threshold(case, tol) for case in POSITIVITY_CASES}


def limiting_case(tol: float = DEFAULT_TOL) -> CaseSpec:
    """The case whose threshold is smallest."""
    roots = case_thresholds(tol)
    return case_by_id(min(roots, key=roots.__getitem__))


def gamma_zero(tol: float = DEFAULT_TOL) -> float:
    """Smallest case threshold: J > 0 for every admissible jump pattern below it."""
    value = min(case_thresholds(tol).values())
    logger.debug("gamma_zero=%s", value)
    return value


@dataclass(frozen=True)
class SeparationReport:
    """Exhaustive minima over all registers of one depth."""

    gamma: float
    depth: int
    min_abs_Sdiff: float  # over |ξ−η| > 1/2
    min_abs_Hdiff: float  # over y > x + 1/2, every ξ
    min_abs_J: float  # over y > x + 1/2, ξ = 0
    s_slack: float
    h_slack: float

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "kappa": 1.0 / (2.0 * self.gamma),
            "depth": self.depth,
            "min_abs_Sdiff": self.min_abs_Sdiff,
            "min_abs_Hdiff": self.min_abs_Hdiff,
            "min_abs_J": self.min_abs_J,
            "s_slack": self.s_slack,
            "h_slack": self.h_slack,
        }


def _grid_words(depth: int) -> np.ndarray:
    return np.arange(1 << depth, dtype=np.uint64) << np.uint64(WORD_BITS - depth)


def _min_s_gap(s_values: np.ndarray, half: int) -> float:
    best = math.inf
    for b in range(len(s_values) - half - 1):
        gaps = np.abs(s_values[b + half + 1 :] - s_values[b])
        best = min(best, float(gaps.min()))
    return best


def _min_h_gap(
    t_values: np.ndarray, x_values: np.ndarray, sorted_s: np.ndarray, s_zero: float, half: int
) -> tuple[float, float]:
    """min |ΔT − Δx·s| over every s in sorted_s, and at s = S(0)."""
    best_any = math.inf
    best_zero = math.inf
    last = len(sorted_s) - 1
    for a in range(len(t_values) - half - 1):
        dt = t_values[a + half + 1 :] - t_values[a]
        dx = x_values[a + half + 1 :] - x_values[a]
        target = dt / dx
        idx = np.clip(np.searchsorted(sorted_s, target), 1, last)
        nearest = np.minimum(np.abs(target - sorted_s[idx - 1]), np.abs(target - sorted_s[idx]))
        best_any = min(best_any, float((nearest * dx).min()))
        best_zero = min(best_zero, float(np.abs(dt - dx * s_zero).min()))
    return best_any, best_zero


def empirical_separation(gamma: float, depth: int, truncation: int = 48) -> SeparationReport:
    """Exact minima of |S-differences| and |H-increments| on the macroscopic sets.

    Registers are the exact dyadic points of the given depth, so enlarging the
    depth only adds points and the minima can only shrink.
    """
    if not 2 <= depth <= MAX_EXHAUSTIVE_DEPTH:
        raise DomainError(f"exhaustive depth must lie in 2..{MAX_EXHAUSTIVE_DEPTH}, got {depth}")
    p = Params(gamma=gamma, truncation=truncation, depth=WORD_BITS)
    words = _grid_words(depth)
    s_values = stable_S_words(words, p)
    t_values = takagi_words(words, p)
    x_values = words_to_float(words)
    half = 1 << (depth - 1)

    min_s = _min_s_gap(s_values, half)
    min_h, min_j = _min_h_gap(t_values, x_values, np.unique(s_values), float(s_values[0]), half)

    s_slack = 2.0 * p.stable_tail + 4.0 * p.s_bound * 2.0**-52 * truncation
    roundoff = 4.0 * (p.takagi_bound + p.s_bound) * 2.0**-52 * truncation
    h_slack = p.stable_tail + 2.0 * p.takagi_tail + roundoff
    logger.info(
        "separation gamma=%s depth=%s: S=%.6g H=%.6g J=%.6g", gamma, depth, min_s, min_h, min_j
    )
    return SeparationReport(gamma, depth, min_s, min_h, min_j, s_slack, h_slack)

"""
Verification Suites
Named batteries of identity and bound checks, each reported as residuals against certified bounds.
"""

import logging
import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np

from src.bitreg import BitString, all_bitstrings, decode
from src.config import RunConfig
from src.errors import DomainError, TakagiLabError
from src.measures import (
    MacroscopicSet,
    char_function,
    interval_family,
    occupation_local_time,
    sample_chi,
    sample_rho,
    sbr_invariance_residual,
    telescope_chi_check,
    telescope_rho_check,
)
from src.rep import (
    MacroscopicWitness,
    h_diff_rep,
    h_diff_simple_rep,
    j_series_terms,
    remainder_bound,
    s_diff_rep,
    s_oneterm_rep,
    sigma_alpha_times,
)
from src.series import (
    Params,
    Residual,
    bridge_checks,
    bridge_H,
    fiber_gap,
    g_function,
    holder_slope,
    scaling_checks,
    stable_S,
    stable_S_direct,
)
from src.thresholds import (
    empirical_separation,
    gamma_zero,
    remark_bound,
    transversality_bound,
)

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 1000
EXHAUSTIVE_PAIR_DEPTH = 5  # (ξ, x) pairs of total depth 10
EXHAUSTIVE_REP_DEPTH = 6
MACROSCOPIC_DEPTH = 8
SEPARATION_DEPTH = 10
TRANSVERSAL_KAPPAS = (0.55, 0.6, 0.65, 1.0 / math.sqrt(2.0))
TELESCOPE_TERMS = 30
HOLDER_TOLERANCE = 0.08  # finite-grid regression sits below the exponent
LOCALTIME_GRID = 1 << 20
LOCALTIME_BINS = 256
LOCALTIME_CHAR_POINTS = 1 << 13
LOCALTIME_U_MAX = 100.0
LOCALTIME_RATIO = (0.8, 1.25)
FIBER_TRIALS = 4


@dataclass
class SuiteReport:
    """Outcome of one named battery."""

    name: str
    checks: list[Residual] = field(default_factory=list)

    @property
    def failures(self) -> list[Residual]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def worst(self) -> dict[str, Residual]:
        """Largest residual-to-bound excess per check name."""
        out: dict[str, Residual] = {}
        for c in self.checks:
            best = out.get(c.name)
            if best is None or c.residual - c.bound > best.residual - best.bound:
                out[c.name] = c
        return out

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failures": len(self.failures),
            "worst": {
                name: {"residual": c.residual, "bound": c.bound}
                for name, c in sorted(self.worst().items())
            },
        }


def _within(name: str, value: float, lo: float, hi: float) -> Residual:
    """Pass iff lo <= value <= hi."""
    return Residual(name, max(0.0, lo - value, value - hi), 0.0)


def _at_least(name: str, value: float, floor: float) -> Residual:
    return Residual(name, max(0.0, floor - value), 0.0)


class _Inputs:
    """Random registers from a Philox-keyed generator."""

    def __init__(self, seed: int):
        self.rng = np.random.Generator(np.random.Philox(key=seed))

    def register(self, depth: int) -> BitString:
        word = int(self.rng.integers(0, 2**64 - 1, dtype=np.uint64, endpoint=True))
        return BitString(word >> (64 - depth), depth)

    def pairs(self, depth: int, count: int) -> Iterator[tuple[BitString, BitString]]:
        for _ in range(count):
            yield self.register(depth), self.register(depth)


def _exhaustive_pairs(depth: int) -> Iterator[tuple[BitString, BitString]]:
    for a in all_bitstrings(depth):
        for b in all_bitstrings(depth):
            yield a, b


def _attractor(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    zero = BitString.zeros(cfg.depth)
    checks = [c for c in scaling_checks(zero, zero, p) if c.name == "attractor"]
    inputs = _Inputs(cfg.seed)
    for xi, x in inputs.pairs(cfg.depth, trials):
        checks.extend(c for c in scaling_checks(xi, x, p) if c.name == "attractor")
    for gamma in (0.6, 0.75):
        target = math.log(gamma) / math.log(0.5)
        slope = holder_slope(Params(gamma=gamma))
        checks.append(_within(f"holder_{gamma}", slope, target - HOLDER_TOLERANCE, target))
    return checks


def _scaling(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    checks = []
    for xi, x in _exhaustive_pairs(EXHAUSTIVE_PAIR_DEPTH):
        checks.extend(scaling_checks(xi, x, p))
    for xi, x in _Inputs(cfg.seed).pairs(cfg.depth, trials):
        checks.extend(scaling_checks(xi, x, p))
    residual, bound = sbr_invariance_residual(p, trials, cfg.seed)
    checks.append(Residual("sbr_invariance", residual, bound))
    return checks


def _bridge(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    inputs = _Inputs(cfg.seed)
    checks = []
    for _ in range(trials):
        xi, eta, x, y = (inputs.register(cfg.depth) for _ in range(4))
        checks.extend(bridge_checks(xi, eta, x, y, p))
    for _ in range(FIBER_TRIALS):
        xi, x, y = (inputs.register(cfg.depth) for _ in range(3))
        gap = fiber_gap(xi, x, y, p)
        direct = bridge_H(xi, y, p) - bridge_H(xi, x, p)
        checks.append(Residual.between("fiber_gap", gap, direct))
        s_here = stable_S(xi, p)
        for z in (x, y):
            checks.append(Residual.between("s_constant_in_x", stable_S_direct(xi, z, p), s_here))
    grid = [BitString(j, 10) for j in range(1 << 10)]
    g_values = [g_function(x, p) for x in grid]
    spread = max(g.value for g in g_values) - min(g.value for g in g_values)
    checks.append(Residual("g_constant", spread, 0.0))
    checks.append(Residual("g_value", abs(g_values[0].value + 2.0), g_values[0].tail_bound))
    return checks


def _representations(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    checks = []

    def compare(xi: BitString, x: BitString, y: BitString) -> None:
        direct = bridge_H(xi, y, p) - bridge_H(xi, x, p)
        checks.append(Residual.between("h_diff_rep", h_diff_rep(xi, x, y, p), direct))
        simple = h_diff_simple_rep(xi, x, y, p)
        checks.append(Residual.between("h_diff_simple_rep", simple.total, direct))

    def compare_s(xi: BitString, eta: BitString) -> None:
        direct = stable_S(xi, p) - stable_S(eta, p)
        checks.append(Residual.between("s_diff_rep", s_diff_rep(xi, eta, p), direct))
        checks.append(Residual.between("s_oneterm_rep", s_oneterm_rep(xi, p), stable_S(xi, p)))

    depth = EXHAUSTIVE_REP_DEPTH
    for xi, eta in _exhaustive_pairs(depth):
        compare_s(xi, eta)
    for x, y in _exhaustive_pairs(depth):
        for xi in (BitString.zeros(depth), BitString.ones(depth), x):
            compare(xi, x, y)
    inputs = _Inputs(cfg.seed)
    for _ in range(trials):
        xi, eta, x, y = (inputs.register(cfg.depth) for _ in range(4))
        compare_s(xi, eta)
        compare(xi, x, y)
    return checks


def _macroscopic(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    checks = []
    depth = MACROSCOPIC_DEPTH
    mismatches = 0
    alpha_violations = 0
    for x, y in _exhaustive_pairs(depth):
        far = decode(y) > decode(x) + 0.5
        if MacroscopicWitness.from_pair(x, y).holds != far:
            mismatches += 1
        if not far:
            continue
        sigma, alpha, counts = sigma_alpha_times(x, y)
        if alpha.taus and alpha.taus[0] < 2:
            alpha_violations += 1
        for s, r in zip(sigma.taus, counts):
            if r and alpha.taus[r - 1] > s - 1:
                alpha_violations += 1
        terms = j_series_terms(x, y, p)
        for ell in range(2, len(sigma) + 1):
            tail = abs(sum(terms[ell - 1 :]))
            checks.append(Residual("remainder_bound", tail, remainder_bound(sigma, ell, 1, p)))
    checks.append(Residual("macroscopic_translation", float(mismatches), 0.0))
    checks.append(Residual("alpha_interleaving", float(alpha_violations), 0.0))
    return checks


def _transversality(cfg: RunConfig, trials: int) -> list[Residual]:
    checks = []
    for kappa in TRANSVERSAL_KAPPAS:
        report = empirical_separation(1.0 / (2.0 * kappa), SEPARATION_DEPTH, cfg.truncation)
        floor = transversality_bound(kappa) - report.s_slack
        checks.append(_at_least(f"transversality_{kappa:.4f}", report.min_abs_Sdiff, floor))
    for gamma in (0.55, 0.6):
        report = empirical_separation(gamma, SEPARATION_DEPTH, cfg.truncation)
        floor = remark_bound(gamma) - report.h_slack
        checks.append(_at_least(f"remark_{gamma}", report.min_abs_J, floor))
    checks.append(_at_least("gamma_zero", gamma_zero(), 2.0 / 3.0))
    return checks


def _telescoping(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    checks = []
    rho_family = interval_family(2.0 * p.s_bound)
    chi_family = interval_family(p.takagi_bound + p.s_bound)
    rho = telescope_rho_check(
        p, rho_family, cfg.samples, cfg.seed, TELESCOPE_TERMS, threads=cfg.threads
    )
    chi = telescope_chi_check(
        p, chi_family, cfg.samples, cfg.seed, TELESCOPE_TERMS, threads=cfg.threads
    )
    for report in (rho, chi):
        for c in report.checks:
            checks.append(Residual(f"telescope_{report.measure}", c.discrepancy, c.slack))
    if p.kappa <= 1.0 / math.sqrt(2.0):
        rho_hat = sample_rho(
            p, cfg.samples, cfg.seed, cfg.bins, MacroscopicSet.DISTANCE, threads=cfg.threads
        )
        gap = transversality_bound(p.kappa) - 2.0 * p.stable_tail
        checks.append(_at_least("rho_hat_gap", rho_hat.absmin, gap))
    if p.gamma < 2.0 / 3.0:
        chi_hat = sample_chi(
            p,
            cfg.samples,
            cfg.seed,
            cfg.bins,
            MacroscopicSet.DISTANCE,
            xi=BitString.zeros(cfg.depth),
            threads=cfg.threads,
        )
        gap = remark_bound(p.gamma) - 2.0 * p.stable_tail
        checks.append(_at_least("chi_hat_gap", chi_hat.absmin, gap))
    return checks


def _localtime(cfg: RunConfig, trials: int) -> list[Residual]:
    p = cfg.params()
    checks = []
    inputs = _Inputs(cfg.seed)
    stride = LOCALTIME_GRID // LOCALTIME_CHAR_POINTS
    for _ in range(5):
        xi = inputs.register(cfg.depth)
        estimate = occupation_local_time(xi, p, LOCALTIME_GRID, LOCALTIME_BINS)
        mass_error = abs(estimate.measure.total_mass - 1.0)
        checks.append(Residual("occupation_mass", mass_error, 1e-12))
        checks.append(_within("l2_refinement", estimate.refinement_ratio, *LOCALTIME_RATIO))
        table = char_function(estimate.values[::stride], LOCALTIME_U_MAX, 2001)
        checks.append(_within("fourier_tail", table.tail_fraction(0.1), 0.0, 0.1))
    return checks


SUITES: dict[str, Callable[[RunConfig, int], list[Residual]]] = {
    "attractor": _attractor,
    "scaling": _scaling,
    "bridge": _bridge,
    "representations": _representations,
    "macroscopic": _macroscopic,
    "transversality": _transversality,
    "telescoping": _telescoping,
    "localtime": _localtime,
}


def suite_names() -> list[str]:
    return [*SUITES, "all"]


def verify_suite(name: str, cfg: RunConfig, trials: int = DEFAULT_TRIALS) -> list[SuiteReport]:
    """Run one named battery, or every battery for "all"."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise DomainError(f"unknown suite {name!r}; choose from {suite_names()}")
    reports = []
    for suite in names:
        report = SuiteReport(suite)
        try:
            report.checks = SUITES[suite](cfg, trials)
        except TakagiLabError as e:
            logger.error("suite %s aborted: %s", suite, e)
            report.checks = [Residual(f"{suite}_error", math.inf, 0.0)]
        logger.info(
            "suite %s: %s checks, %s failed", suite, len(report.checks), len(report.failures)
        )
        reports.append(report)
    return reports

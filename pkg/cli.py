#!/usr/bin/env python3
"""
Takagi Lab CLI
Emit curves, run verification suites, reproduce thresholds and estimate measures.
"""

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from src.artifacts import (
    write_char_table,
    write_curve,
    write_histogram,
    write_json,
    write_sidecar,
)
from src.bitreg import BitString, decode
from src.config import RunConfig
from src.errors import ConfigError, DomainError, TakagiLabError
from src.measures import (
    CharFunctionTable,
    EmpiricalMeasure,
    MacroscopicSet,
    char_function,
    interval_family,
    occupation_local_time,
    sample_chi,
    sample_rho,
    sample_sbr_marginal,
    sbr_samples,
    telescope_chi_check,
    telescope_rho_check,
)
from src.series import WORD_BITS, bridge_H, stable_S, takagi, takagi_words, words_to_float
from src.thresholds import (
    MAX_EXHAUSTIVE_DEPTH,
    POSITIVITY_CASES,
    case_threshold,
    empirical_separation,
    gamma_zero,
    limiting_case,
    remark_bound,
    transversality_bound,
)
from src.verify import DEFAULT_TRIALS, TRANSVERSAL_KAPPAS, suite_names, verify_suite

logger = logging.getLogger("takagi_lab")

DEFAULT_POINTS = 4096
DEFAULT_GRID = 1 << 20
DEFAULT_TERMS = 30
DEFAULT_TOL = 1e-9
DEFAULT_U_MAX = 100.0
DEFAULT_CHAR_POINTS = 2001
DEFAULT_SEPARATION_DEPTH = 14
CHAR_SAMPLE_CAP = 1 << 13  # draws fed to the characteristic function
THRESHOLD_BAND = 0.0015  # printed cutoffs are floors of the roots


def _emit(summary: dict) -> None:
    """The single JSON line on stdout."""
    print(json.dumps(summary, sort_keys=True))


def _out(args, default: str) -> str:
    return args.out if args.out else default


def _finish(cfg: RunConfig, out: str, n_samples: int, started: float) -> None:
    write_sidecar(out, cfg, n_samples, (time.perf_counter() - started) * 1000.0)


def _register(bits: str | None, depth: int) -> BitString:
    if bits is None:
        return BitString.zeros(depth)
    return BitString.from_bits(bits)


def _measure_summary(measure: EmpiricalMeasure) -> dict:
    return {
        "n_samples": measure.n_samples,
        "total_mass": measure.total_mass,
        "stderr_bound": measure.stderr_bound,
        "vmin": measure.vmin,
        "vmax": measure.vmax,
        "absmin": measure.absmin,
    }


def cmd_curve(args):
    """Emit x, T, H, S on a uniform grid."""
    cfg = RunConfig.from_args(args)
    p = cfg.params()
    started = time.perf_counter()
    xi = _register(args.xi, cfg.depth)
    s = stable_S(xi, p).value

    if args.x is not None:
        x = BitString.from_bits(args.x)
        _emit(
            {
                "command": "curve",
                "x": decode(x),
                "T": takagi(x, p).value,
                "H": bridge_H(xi, x, p).value,
                "S": s,
            }
        )
        return 0

    points = args.points or DEFAULT_POINTS
    words = (np.arange(points, dtype=np.float64) / points * 2.0**WORD_BITS).astype(np.uint64)
    x = words_to_float(words)
    t = takagi_words(words, p)
    out = _out(args, "curve.csv")
    rows = write_curve(out, x, t, t - x * s, np.float64(s))
    _finish(cfg, out, points, started)
    _emit({"command": "curve", "rows": rows, "out": out})
    return 0


def cmd_verify(args):
    """Run identity suites; exit 1 if any residual exceeds its bound."""
    cfg = RunConfig.from_args(args)
    started = time.perf_counter()
    trials = args.trials or DEFAULT_TRIALS
    reports = verify_suite(args.suite, cfg, trials)
    passed = all(r.passed for r in reports)
    out = _out(args, "verify.json")
    suites = [r.to_dict() for r in reports]
    write_json(out, {"config": cfg.to_dict(), "trials": trials, "suites": suites})
    _finish(cfg, out, trials, started)
    _emit(
        {
            "command": "verify",
            "suite": args.suite,
            "passed": passed,
            "failures": sum(len(r.failures) for r in reports),
            "out": out,
        }
    )
    return 0 if passed else 1


def cmd_thresholds(args):
    """Recompute every positivity-case root and γ₀."""
    cfg = RunConfig.from_args(args)
    started = time.perf_counter()
    tol = args.tol or DEFAULT_TOL
    cases = []
    in_band = True
    for case in POSITIVITY_CASES:
        root = case_threshold(case, tol)
        ok = case.printed_threshold <= root < case.printed_threshold + THRESHOLD_BAND
        in_band = in_band and ok
        entry = {
            "id": case.case_id,
            "condition": case.condition,
            "paper_value": case.printed_threshold,
            "computed_root": root,
        }
        if case.displayed_lhs is not None:
            entry["displayed_root"] = case_threshold(case, tol, displayed=True)
        cases.append(entry)
    g0 = gamma_zero(tol)
    payload = {
        "cases": cases,
        "gamma0": g0,
        "limiting_case": limiting_case(tol).case_id,
        "remark_bound": remark_bound(cfg.gamma),
        "tol": tol,
    }
    out = _out(args, "thresholds.json")
    write_json(out, payload)
    _finish(cfg, out, 0, started)
    passed = in_band and g0 > 2.0 / 3.0
    _emit({"command": "thresholds", "gamma0": g0, "passed": passed, "out": out})
    return 0 if passed else 1


def cmd_transversality(args):
    """Exhaustive S-difference minima against the transversality floor."""
    # --depth here is the exhaustive scan depth, not the register depth D
    depth = args.depth
    cfg = RunConfig.from_args(argparse.Namespace(**{**vars(args), "depth": None}))
    started = time.perf_counter()
    if not depth or depth > MAX_EXHAUSTIVE_DEPTH:
        depth = DEFAULT_SEPARATION_DEPTH
    if args.kappa is not None:
        kappas = [args.kappa]
    elif args.gamma is not None:
        kappas = [1.0 / (2.0 * args.gamma)]
    else:
        kappas = list(TRANSVERSAL_KAPPAS)
    rows = []
    passed = True
    for kappa in kappas:
        report = empirical_separation(1.0 / (2.0 * kappa), depth, cfg.truncation)
        bound = transversality_bound(kappa)
        ok = report.min_abs_Sdiff >= bound - report.s_slack
        passed = passed and ok
        rows.append({**report.to_dict(), "transversality_bound": bound, "passed": ok})
    out = _out(args, "transversality.json")
    write_json(out, {"depth": depth, "scans": rows})
    _finish(cfg, out, 0, started)
    _emit({"command": "transversality", "passed": passed, "out": out})
    return 0 if passed else 1


def _char_table(args, samples: np.ndarray, out: str) -> tuple[str, CharFunctionTable]:
    char_out = f"{out}.char.csv"
    points = args.points or DEFAULT_CHAR_POINTS
    table = char_function(samples[:CHAR_SAMPLE_CAP], args.u_max or DEFAULT_U_MAX, points)
    write_char_table(char_out, table)
    return char_out, table


def cmd_sbr(args):
    """Histogram of the SBR marginal, optionally with its |φ|² table."""
    cfg = RunConfig.from_args(args)
    p = cfg.params()
    started = time.perf_counter()
    measure = sample_sbr_marginal(p, cfg.samples, cfg.seed, cfg.bins, threads=cfg.threads)
    out = _out(args, "sbr.csv")
    write_histogram(out, measure)
    summary = {"command": "sbr", "out": out, **_measure_summary(measure)}
    if args.u_max is not None:
        samples = sbr_samples(p, min(cfg.samples, CHAR_SAMPLE_CAP), cfg.seed, threads=cfg.threads)
        summary["char_out"], _ = _char_table(args, samples, out)
    _finish(cfg, out, cfg.samples, started)
    _emit(summary)
    return 0


def cmd_rho(args):
    """Histogram of S(ξ) − S(η); with --macroscopic distance also checks the spectral gap."""
    cfg = RunConfig.from_args(args)
    p = cfg.params()
    started = time.perf_counter()
    restrict = MacroscopicSet(args.macroscopic)
    measure = sample_rho(p, cfg.samples, cfg.seed, cfg.bins, restrict, threads=cfg.threads)
    out = _out(args, "rho.csv")
    write_histogram(out, measure)
    _finish(cfg, out, cfg.samples, started)
    summary = {"command": "rho", "restrict": restrict.value, "out": out}
    summary.update(_measure_summary(measure))
    passed = True
    if restrict is MacroscopicSet.DISTANCE and p.kappa <= 1.0 / math.sqrt(2.0):
        gap = transversality_bound(p.kappa) - 2.0 * p.stable_tail
        passed = math.isnan(measure.absmin) or measure.absmin >= gap
        summary.update({"gap": gap, "passed": passed})
    _emit(summary)
    return 0 if passed else 1


def cmd_chi(args):
    """Histogram of H(ξ,x) − H(ξ,y); ξ fixed with --xi."""
    cfg = RunConfig.from_args(args)
    p = cfg.params()
    started = time.perf_counter()
    restrict = MacroscopicSet(args.macroscopic)
    xi = BitString.from_bits(args.xi) if args.xi is not None else None
    measure = sample_chi(p, cfg.samples, cfg.seed, cfg.bins, restrict, xi=xi, threads=cfg.threads)
    out = _out(args, "chi.csv")
    write_histogram(out, measure)
    _finish(cfg, out, cfg.samples, started)
    summary = {"command": "chi", "restrict": restrict.value, "out": out}
    summary.update(_measure_summary(measure))
    passed = True
    at_zero = xi is not None and xi.word == 0
    if restrict is MacroscopicSet.DISTANCE and at_zero and p.gamma < 2.0 / 3.0:
        gap = remark_bound(p.gamma) - 2.0 * p.stable_tail
        passed = math.isnan(measure.absmin) or measure.absmin >= gap
        summary.update({"gap": gap, "passed": passed})
    _emit(summary)
    return 0 if passed else 1


def cmd_localtime(args):
    """Occupation histogram of H(ξ,·), its L² refinement ratio and |φ_ξ|² table."""
    cfg = RunConfig.from_args(args)
    p = cfg.params()
    started = time.perf_counter()
    xi = _register(args.xi, cfg.depth)
    grid = args.grid or DEFAULT_GRID
    estimate = occupation_local_time(xi, p, grid, cfg.bins)
    out = _out(args, "localtime.csv")
    write_histogram(out, estimate.measure)
    stride = max(1, grid // CHAR_SAMPLE_CAP)
    char_out, table = _char_table(args, estimate.values[::stride], out)
    _finish(cfg, out, grid, started)
    _emit(
        {
            "command": "localtime",
            "out": out,
            "char_out": char_out,
            "l2_norm": estimate.l2_norm,
            "l2_norm_refined": estimate.l2_norm_refined,
            "refinement_ratio": estimate.refinement_ratio,
            "fourier_tail_fraction": table.tail_fraction(0.1),
        }
    )
    return 0


def cmd_telescope(args):
    """Telescoping checks for both increment measures."""
    cfg = RunConfig.from_args(args)
    p = cfg.params()
    started = time.perf_counter()
    terms = args.terms or DEFAULT_TERMS
    restrict = MacroscopicSet(args.macroscopic)
    reports = [
        telescope_rho_check(
            p, interval_family(2.0 * p.s_bound), cfg.samples, cfg.seed, terms, restrict,
            threads=cfg.threads,
        ),
        telescope_chi_check(
            p, interval_family(p.takagi_bound + p.s_bound), cfg.samples, cfg.seed, terms, restrict,
            threads=cfg.threads,
        ),
    ]
    out = _out(args, "telescope.json")
    write_json(out, {"reports": [r.to_dict() for r in reports]})
    _finish(cfg, out, cfg.samples, started)
    passed = all(r.passed for r in reports)
    _emit(
        {
            "command": "telescope",
            "passed": passed,
            "max_discrepancy": {r.measure: r.max_discrepancy for r in reports},
            "out": out,
        }
    )
    return 0 if passed else 1


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    roughness = common.add_mutually_exclusive_group()
    roughness.add_argument("--gamma", type=float, help="Roughness γ in (1/2, 1) (default: 0.6)")
    roughness.add_argument("--kappa", type=float, help="κ = 1/(2γ), instead of --gamma")
    common.add_argument("--depth", type=int, help="Register depth D (default: 64)")
    common.add_argument("--truncation", type=int, help="Series truncation N (default: 48)")
    common.add_argument("--samples", type=int, help="Monte-Carlo draws (default: 1000000)")
    common.add_argument("--seed", type=int, help="64-bit RNG seed (default: 42)")
    common.add_argument("--bins", type=int, help="Histogram bins (default: 512)")
    common.add_argument("--out", type=str, help="Artifact path; a .json sidecar goes next to it")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Takagi Lab - Takagi curves, baker dynamics and their measures"
    )
    common = _common_parser()
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # curve command
    curve = subparsers.add_parser("curve", parents=[common], help="Emit x,T,H,S on a grid")
    curve.add_argument("--points", type=int, help="Grid points (default: 4096)")
    curve.add_argument("--xi", type=str, help="ξ as a bit string (default: 0)")
    curve.add_argument("--x", type=str, help="Evaluate a single x given as a bit string")

    # verify command
    verify = subparsers.add_parser("verify", parents=[common], help="Run identity suites")
    verify.add_argument("--suite", choices=suite_names(), default="all", help="Suite name")
    verify.add_argument("--trials", type=int, help="Random inputs per suite (default: 1000)")

    # thresholds command
    thresholds = subparsers.add_parser(
        "thresholds", parents=[common], help="Reproduce the positivity thresholds"
    )
    thresholds.add_argument("--tol", type=float, help="Bisection tolerance (default: 1e-9)")

    # transversality command
    subparsers.add_parser(
        "transversality", parents=[common], help="Exhaustive S-difference minima"
    )

    # sampling commands
    sampling = {
        name: subparsers.add_parser(name, parents=[common], help=helptext)
        for name, helptext in (
            ("sbr", "SBR marginal histogram"),
            ("rho", "Histogram of S-differences"),
            ("chi", "Histogram of H-increments"),
        )
    }
    for name in ("rho", "chi"):
        sampling[name].add_argument(
            "--macroscopic",
            choices=[m.value for m in MacroscopicSet],
            default="none",
            help="Restrict the source pairs (default: none)",
        )
    sampling["chi"].add_argument("--xi", type=str, help="Fix ξ as a bit string")
    sampling["sbr"].add_argument("--u-max", type=float, help="Also write |φ|² up to this u")
    sampling["sbr"].add_argument(
        "--points", type=int, help="Char-function grid points (default: 2001)"
    )

    # localtime command
    localtime = subparsers.add_parser(
        "localtime", parents=[common], help="Occupation measure of H(ξ,·)"
    )
    localtime.add_argument("--xi", type=str, help="ξ as a bit string (default: 0)")
    localtime.add_argument("--grid", type=int, help="x-grid size (default: 1048576)")
    localtime.add_argument("--u-max", type=float, help="Char-function range (default: 100)")
    localtime.add_argument("--points", type=int, help="Char-function grid points (default: 2001)")

    # telescope command
    telescope = subparsers.add_parser(
        "telescope", parents=[common], help="Telescoping identities for ρ and χ"
    )
    telescope.add_argument("--terms", type=int, help="Dilation terms (default: 30)")
    telescope.add_argument(
        "--macroscopic",
        choices=[MacroscopicSet.DIGIT.value, MacroscopicSet.DISTANCE.value],
        default=MacroscopicSet.DIGIT.value,
        help="Restricted measure on the right-hand side (default: digit)",
    )
    return parser


def main(argv=None):
    """Main CLI entry point."""
    logging.basicConfig(
        stream=sys.stderr,
        level=os.environ.get("TAKAGI_LOG_LEVEL", "WARNING").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help(sys.stderr)
        return 2

    commands = {
        "curve": cmd_curve,
        "verify": cmd_verify,
        "thresholds": cmd_thresholds,
        "transversality": cmd_transversality,
        "sbr": cmd_sbr,
        "rho": cmd_rho,
        "chi": cmd_chi,
        "localtime": cmd_localtime,
        "telescope": cmd_telescope,
    }

    try:
        return commands[args.command](args)
    except (ConfigError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TakagiLabError as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())

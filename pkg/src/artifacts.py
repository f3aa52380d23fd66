"""
Artifacts
CSV and JSON writers for run outputs, plus the JSON sidecar written next to each artifact.
"""

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from src.config import RunConfig
from src.measures import CharFunctionTable, EmpiricalMeasure

logger = logging.getLogger(__name__)

HISTOGRAM_HEADER = ("bin_left", "bin_right", "mass")
CHAR_HEADER = ("u", "phi_sq", "cumulative")
CURVE_HEADER = ("x", "T", "H", "S")


def fmt(value: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return f"{float(value):.17g}"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> int:
    """Write a ',' separated, '\\n' terminated table; returns the row count."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
            count += 1
    logger.debug("wrote %s rows to %s", count, path)
    return count


def write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def sidecar_path(out_path: str | Path) -> Path:
    return Path(f"{out_path}.json")


def write_sidecar(out_path: str | Path, cfg: RunConfig, n_samples: int, wall_ms: float) -> Path:
    """The run record {"seed","gamma","depth","truncation","n_samples","wall_ms"}."""
    path = sidecar_path(out_path)
    write_json(
        path,
        {
            "seed": cfg.seed,
            "gamma": cfg.gamma,
            "depth": cfg.depth,
            "truncation": cfg.truncation,
            "n_samples": n_samples,
            "wall_ms": round(wall_ms, 3),
        },
    )
    return path


def histogram_rows(measure: EmpiricalMeasure) -> Iterable[tuple[float, float, float]]:
    edges = measure.bin_edges
    return zip(edges[:-1], edges[1:], measure.mass)


def write_histogram(path: str | Path, measure: EmpiricalMeasure) -> int:
    return write_csv(path, HISTOGRAM_HEADER, histogram_rows(measure))


def write_char_table(path: str | Path, table: CharFunctionTable) -> int:
    return write_csv(path, CHAR_HEADER, zip(table.u_grid, table.phi_sq, table.cumulative))


def write_curve(
    path: str | Path, x: np.ndarray, t: np.ndarray, h: np.ndarray, s: np.ndarray
) -> int:
    return write_csv(path, CURVE_HEADER, zip(x, t, h, np.broadcast_to(s, x.shape)))

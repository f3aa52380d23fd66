"""
Run Configuration
Defaults, TAKAGI_* environment overrides and CLI flag overlay for a single run.
"""

import argparse
import os
from dataclasses import dataclass, replace

from src.errors import ConfigError, DomainError
from src.series import DEFAULT_DEPTH, DEFAULT_GAMMA, DEFAULT_TRUNCATION, Params

DEFAULT_SAMPLES = 1_000_000
DEFAULT_BINS = 512
DEFAULT_SEED = 42
MAX_SEED = (1 << 64) - 1  # seeds key a 64-bit Philox lane


def env_threads() -> int | None:
    """TAKAGI_THREADS as an integer, or None when unset."""
    raw = os.environ.get("TAKAGI_THREADS")
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"TAKAGI_THREADS must be an integer, got {raw!r}") from None


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else TAKAGI_THREADS, else every core."""
    if threads is None:
        threads = env_threads()
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


@dataclass(frozen=True)
class RunConfig:
    """Parameters shared by every subcommand."""

    gamma: float = DEFAULT_GAMMA  # roughness, in (1/2, 1)
    depth: int = DEFAULT_DEPTH  # register depth D for sampling
    truncation: int = DEFAULT_TRUNCATION  # series index N
    samples: int = DEFAULT_SAMPLES  # Monte-Carlo draws
    seed: int = DEFAULT_SEED
    bins: int = DEFAULT_BINS
    out_path: str | None = None  # artifact path; the JSON sidecar goes next to it
    threads: int | None = None  # None defers to TAKAGI_THREADS / cpu count

    def __post_init__(self) -> None:
        if not 0.5 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0.5, 1), got {self.gamma}")
        if not 1 <= self.truncation <= self.depth:
            raise ConfigError(
                f"need 1 <= truncation <= depth, got N={self.truncation} D={self.depth}"
            )
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if self.bins < 1:
            raise ConfigError(f"bins must be >= 1, got {self.bins}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"thread count must be >= 1, got {self.threads}")

    @classmethod
    def from_env(cls) -> "RunConfig":
        """Create from TAKAGI_* environment variables."""
        try:
            return cls(
                gamma=float(os.environ.get("TAKAGI_GAMMA", str(DEFAULT_GAMMA))),
                depth=int(os.environ.get("TAKAGI_DEPTH", str(DEFAULT_DEPTH))),
                truncation=int(os.environ.get("TAKAGI_TRUNCATION", str(DEFAULT_TRUNCATION))),
                samples=int(os.environ.get("TAKAGI_SAMPLES", str(DEFAULT_SAMPLES))),
                seed=int(os.environ.get("TAKAGI_SEED", str(DEFAULT_SEED))),
                bins=int(os.environ.get("TAKAGI_BINS", str(DEFAULT_BINS))),
                threads=env_threads(),
            )
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(f"invalid TAKAGI_* setting: {e}") from e

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """Overlay parsed CLI flags on from_env(); flags left unset keep the env value."""
        base = cls.from_env()
        overrides: dict[str, object] = {}
        kappa = getattr(args, "kappa", None)
        if kappa is not None:
            if not 0.5 < kappa < 1.0:
                raise ConfigError(f"kappa must lie in (0.5, 1), got {kappa}")
            overrides["gamma"] = 1.0 / (2.0 * kappa)
        for field in ("gamma", "depth", "truncation", "samples", "seed", "bins"):
            value = getattr(args, field, None)
            if value is not None:
                overrides[field] = value
        out = getattr(args, "out", None)
        if out is not None:
            overrides["out_path"] = out
        return replace(base, **overrides)

    def params(self) -> Params:
        try:
            return Params(gamma=self.gamma, truncation=self.truncation, depth=self.depth)
        except DomainError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "depth": self.depth,
            "truncation": self.truncation,
            "samples": self.samples,
            "seed": self.seed,
            "bins": self.bins,
        }

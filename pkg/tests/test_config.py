import argparse
import os
from unittest.mock import patch

import pytest

from src.config import DEFAULT_SAMPLES, RunConfig, env_threads, resolve_threads
from src.errors import ConfigError


def _args(**kw):
    fields = dict.fromkeys(
        ("gamma", "kappa", "depth", "truncation", "samples", "seed", "bins", "out")
    )
    fields.update(kw)
    return argparse.Namespace(**fields)


class TestRunConfig:
    """Validation and defaults."""

    def test_defaults(self, clean_env):
        cfg = RunConfig.from_env()
        assert cfg.gamma == 0.6
        assert cfg.depth == 64
        assert cfg.truncation == 48
        assert cfg.samples == DEFAULT_SAMPLES
        assert cfg.seed == 42
        assert cfg.bins == 512
        assert cfg.threads is None

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": 0.5},
            {"gamma": 1.2},
            {"truncation": 70},
            {"truncation": 0},
            {"samples": 0},
            {"bins": 0},
            {"seed": -1},
            {"seed": 1 << 64},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_params_rejects_deep_registers(self):
        cfg = RunConfig(depth=80)
        with pytest.raises(ConfigError):
            cfg.params()

    def test_to_dict(self):
        d = RunConfig(gamma=0.7, seed=3).to_dict()
        assert d == {
            "gamma": 0.7,
            "depth": 64,
            "truncation": 48,
            "samples": DEFAULT_SAMPLES,
            "seed": 3,
            "bins": 512,
        }


class TestFromEnv:
    """TAKAGI_* environment overrides."""

    def test_reads_environment(self, clean_env):
        env = {"TAKAGI_GAMMA": "0.7", "TAKAGI_SEED": "9", "TAKAGI_THREADS": "2"}
        with patch.dict(os.environ, env):
            cfg = RunConfig.from_env()
        assert cfg.gamma == 0.7
        assert cfg.seed == 9
        assert cfg.threads == 2

    def test_unparseable_value(self, clean_env):
        with patch.dict(os.environ, {"TAKAGI_DEPTH": "deep"}):
            with pytest.raises(ConfigError):
                RunConfig.from_env()

    def test_out_of_range_value(self, clean_env):
        with patch.dict(os.environ, {"TAKAGI_GAMMA": "0.4"}):
            with pytest.raises(ConfigError, match="gamma"):
                RunConfig.from_env()


class TestFromArgs:
    """CLI flags overlay the environment."""

    def test_flags_win(self, clean_env):
        with patch.dict(os.environ, {"TAKAGI_SEED": "9", "TAKAGI_BINS": "64"}):
            cfg = RunConfig.from_args(_args(seed=5, out="run.csv"))
        assert cfg.seed == 5
        assert cfg.bins == 64
        assert cfg.out_path == "run.csv"

    def test_kappa_sets_gamma(self, clean_env):
        cfg = RunConfig.from_args(_args(kappa=0.625))
        assert cfg.gamma == pytest.approx(0.8)

    def test_kappa_range(self, clean_env):
        with pytest.raises(ConfigError):
            RunConfig.from_args(_args(kappa=0.4))


class TestThreads:
    """Worker count resolution."""

    def test_explicit(self, clean_env):
        assert resolve_threads(3) == 3

    def test_environment(self, clean_env):
        with patch.dict(os.environ, {"TAKAGI_THREADS": "2"}):
            assert resolve_threads() == 2

    def test_all_cores_by_default(self, clean_env):
        with patch("src.config.os.cpu_count", return_value=6):
            assert resolve_threads() == 6

    @pytest.mark.parametrize("raw", ["many", "0", "-2"])
    def test_bad_environment(self, clean_env, raw):
        with patch.dict(os.environ, {"TAKAGI_THREADS": raw}):
            with pytest.raises(ConfigError):
                resolve_threads()

    @pytest.mark.parametrize("raw", ["many", "0", "-2"])
    def test_from_env_rejects_what_resolve_rejects(self, clean_env, raw):
        with patch.dict(os.environ, {"TAKAGI_THREADS": raw}):
            with pytest.raises(ConfigError, match="TAKAGI_THREADS|thread count"):
                RunConfig.from_env()

    def test_from_env_and_resolve_agree(self, clean_env):
        with patch.dict(os.environ, {"TAKAGI_THREADS": "5"}):
            assert RunConfig.from_env().threads == env_threads() == resolve_threads() == 5

    def test_unset_environment_is_none(self, clean_env):
        assert env_threads() is None

import math
from unittest.mock import patch

import pytest

from src.config import RunConfig
from src.errors import CertifiedPrecisionError, DomainError
from src.series import Residual
from src.verify import SUITES, SuiteReport, suite_names, verify_suite


@pytest.fixture
def small_cfg(clean_env):
    return RunConfig(samples=20_000, seed=7, bins=64, threads=1)


class TestSuiteReport:
    """Aggregation of residual records."""

    def test_failures_and_worst(self):
        report = SuiteReport(
            "demo",
            [
                Residual("a", 0.1, 1.0),
                Residual("a", 0.9, 1.0),
                Residual("b", 2.0, 1.0),
            ],
        )
        assert not report.passed
        assert [c.name for c in report.failures] == ["b"]
        assert report.worst()["a"].residual == 0.9
        d = report.to_dict()
        assert d["n_checks"] == 3
        assert d["n_failures"] == 1
        assert d["worst"]["b"] == {"residual": 2.0, "bound": 1.0}

    def test_empty_report_passes(self):
        assert SuiteReport("empty").passed


class TestVerifySuite:
    """Dispatch and failure reporting."""

    def test_names(self):
        names = suite_names()
        assert names[-1] == "all"
        for required in ("attractor", "scaling", "representations", "macroscopic", "telescoping"):
            assert required in names

    def test_unknown_suite(self, small_cfg):
        with pytest.raises(DomainError):
            verify_suite("nope", small_cfg)

    def test_errors_become_failed_checks(self, small_cfg):
        def boom(cfg, trials):
            raise CertifiedPrecisionError("ran out of digits")

        with patch.dict(SUITES, {"attractor": boom}):
            (report,) = verify_suite("attractor", small_cfg, trials=1)
        assert not report.passed
        assert report.checks[0].name == "attractor_error"
        assert report.checks[0].residual == math.inf

    def test_all_runs_every_suite(self, small_cfg):
        calls = []

        def record(name):
            def run(cfg, trials):
                calls.append(name)
                return [Residual(name, 0.0, 0.0)]

            return run

        stubs = {name: record(name) for name in SUITES}
        with patch.dict(SUITES, stubs):
            reports = verify_suite("all", small_cfg, trials=1)
        assert calls == list(SUITES)
        assert all(r.passed for r in reports)


class TestSuites:
    """The cheaper batteries run end to end."""

    def test_attractor(self, small_cfg):
        (report,) = verify_suite("attractor", small_cfg, trials=50)
        assert report.passed, report.to_dict()

    def test_scaling(self, small_cfg):
        (report,) = verify_suite("scaling", small_cfg, trials=50)
        assert report.passed, report.to_dict()
        assert {"s_scaling", "g_scaling", "h_scaling", "sbr_invariance"} <= set(report.worst())

    def test_bridge(self, small_cfg):
        (report,) = verify_suite("bridge", small_cfg, trials=20)
        assert report.passed, report.to_dict()

    def test_macroscopic(self, small_cfg):
        (report,) = verify_suite("macroscopic", small_cfg, trials=1)
        assert report.passed, report.to_dict()
        assert report.worst()["macroscopic_translation"].residual == 0.0

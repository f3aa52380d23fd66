import math

import numpy as np
import pytest

from src.bitreg import BitString
from src.errors import DomainError, SamplingError
from src.measures import (
    CHUNK_SIZE,
    EmpiricalMeasure,
    MacroscopicSet,
    _Pushforward,
    char_function,
    interval_family,
    occupation_local_time,
    occupation_values,
    sample_chi,
    sample_rho,
    sample_sbr_marginal,
    sbr_invariance_residual,
    sbr_samples,
    telescope_chi_check,
    telescope_rho_check,
)
from src.series import Params
from src.thresholds import remark_bound, transversality_bound

N = 3 * CHUNK_SIZE + 17  # spans several chunks


class TestEmpiricalMeasure:
    """Histogram bookkeeping."""

    @pytest.fixture
    def measure(self):
        return EmpiricalMeasure(
            bin_edges=np.array([0.0, 1.0, 2.0]),
            counts=np.array([1, 3]),
            n_samples=4,
            seed=0,
            vmin=0.2,
            vmax=1.9,
            absmin=0.2,
        )

    def test_mass_and_widths(self, measure):
        assert measure.mass.tolist() == [0.25, 0.75]
        assert measure.widths.tolist() == [1.0, 1.0]
        assert measure.total_mass == 1.0
        assert measure.mass_between(0.0, 1.0) == 0.25
        assert measure.reflected_mass().tolist() == [0.75, 0.25]

    def test_l2_density_and_stderr(self, measure):
        assert measure.l2_density() == pytest.approx(0.625)
        assert measure.stderr_bound == pytest.approx(math.sqrt(0.1875 / 4))


class TestSampling:
    """Deterministic, thread-layout independent histograms."""

    def test_same_seed_same_counts_for_any_thread_count(self, params):
        one = sample_rho(params, N, 7, 64, threads=1)
        many = sample_rho(params, N, 7, 64, threads=3)
        assert np.array_equal(one.counts, many.counts)
        assert one.absmin == many.absmin

    def test_seed_changes_the_draws(self, params):
        a = sample_sbr_marginal(params, 5000, 1, 32, threads=1)
        b = sample_sbr_marginal(params, 5000, 2, 32, threads=1)
        assert not np.array_equal(a.counts, b.counts)

    def test_unrestricted_is_a_probability(self, params):
        m = sample_rho(params, 20_000, 3, 64, threads=1)
        assert m.total_mass == 1.0
        assert -2.0 * params.s_bound <= m.vmin <= m.vmax <= 2.0 * params.s_bound

    @pytest.mark.parametrize(
        ("restrict", "expected"),
        [(MacroscopicSet.DIGIT, 0.5), (MacroscopicSet.DISTANCE, 0.25)],
    )
    def test_restricted_mass(self, params, restrict, expected):
        m = sample_rho(params, 50_000, 11, 64, restrict, threads=1)
        assert m.total_mass == pytest.approx(expected, abs=0.01)

    def test_rho_is_symmetric(self, params):
        m = sample_rho(params, N, 5, 32, threads=2)
        assert np.max(np.abs(m.mass - m.reflected_mass())) < 0.01

    def test_sbr_samples_feed_the_marginal(self, params):
        m = sample_sbr_marginal(params, N, 9, 48, threads=2)
        draws = sbr_samples(params, N, 9, threads=2)
        assert draws.size == N
        assert np.array_equal(np.histogram(draws, bins=m.bin_edges)[0], m.counts)
        assert abs(float(draws.mean())) < 0.06

    def test_sbr_invariance(self, params):
        residual, bound = sbr_invariance_residual(params, 10_000, 4)
        assert residual <= bound

    def test_sbr_marginal_is_symmetric_within_its_support(self, params):
        m = sample_sbr_marginal(params, N, 13, 32, threads=2)
        assert m.total_mass == 1.0
        assert -params.s_bound <= m.vmin <= m.vmax <= params.s_bound
        assert np.max(np.abs(m.mass - m.reflected_mass())) <= 3.0 * 2.0 * m.stderr_bound

    def test_single_draw_is_a_unit_mass_bin(self, params):
        m = sample_sbr_marginal(params, 1, 42, 32, threads=1)
        assert m.total_mass == 1.0
        assert np.count_nonzero(m.counts) == 1
        assert m.mass.max() == 1.0

    def test_chi_is_symmetric(self, params):
        m = sample_chi(params, N, 6, 32, threads=2)
        assert m.total_mass == 1.0
        assert np.max(np.abs(m.mass - m.reflected_mass())) <= 3.0 * 2.0 * m.stderr_bound

    def test_chi_hat_carries_a_quarter(self, params):
        m = sample_chi(params, N, 8, 32, MacroscopicSet.DISTANCE, threads=2)
        assert abs(m.total_mass - 0.25) <= 3.0 * math.sqrt(0.25 * 0.75 / N)

    def test_bins_and_samples_must_be_positive(self, params):
        with pytest.raises(DomainError):
            sample_rho(params, 10, 1, 0, threads=1)
        with pytest.raises(DomainError):
            sample_rho(params, 0, 1, 8, threads=1)

    def test_samples_outside_support_abort(self):
        pf = _Pushforward(
            rows=1, support=0.1, evaluate=lambda w: (np.ones(w.shape[1]), w[0], w[0])
        )
        with pytest.raises(SamplingError):
            pf.draw(1, 0, 0, 8, MacroscopicSet.NONE)


class TestSpectralGaps:
    """Restricted increment measures keep away from zero."""

    def test_rho_hat_gap_below_critical_kappa(self):
        p = Params.from_kappa(0.6)
        m = sample_rho(p, 40_000, 2, 64, MacroscopicSet.DISTANCE, threads=1)
        assert m.absmin >= transversality_bound(0.6) - 2.0 * p.stable_tail

    def test_chi_hat_gap_at_xi_zero(self, params):
        m = sample_chi(
            params, 40_000, 2, 64, MacroscopicSet.DISTANCE, xi=BitString.zeros(64), threads=1
        )
        assert m.absmin >= remark_bound(0.6) - 2.0 * params.stable_tail


class TestTelescoping:
    """Dilation identities tying each measure to its restricted part."""

    def test_interval_family(self):
        family = interval_family(2.0, count=5)
        assert len(family) == 5
        assert family[0][0] == -2.0
        assert family[0][1] > 2.0
        for (_, hi), (lo, _) in zip(family[1:], family[2:]):
            assert hi == lo
        with pytest.raises(DomainError):
            interval_family(1.0, count=1)

    def test_rho_identity(self, params):
        family = interval_family(2.0 * params.s_bound)
        report = telescope_rho_check(params, family, 100_000, 3, 30, sigmas=5.0, threads=2)
        assert report.passed, report.to_dict()
        assert report.checks[0].lhs == 1.0
        assert report.dilation == params.kappa

    def test_chi_identity(self, params):
        family = interval_family(params.takagi_bound + params.s_bound)
        report = telescope_chi_check(params, family, 100_000, 3, 30, sigmas=5.0, threads=2)
        assert report.passed, report.to_dict()
        assert report.to_dict()["restrict"] == "digit"

    def test_single_term_misses_the_dilated_copies(self, params):
        """With one term only χ̌ itself is summed; the gap is the mass of the dilated copies."""
        family = interval_family(params.takagi_bound + params.s_bound)
        one = telescope_chi_check(params, family, 100_000, 3, 1, threads=2)
        full = telescope_chi_check(params, family, 100_000, 3, 30, threads=2)
        centre = len(family) // 2
        assert family[centre][0] < 0.0 < family[centre][1]
        short, whole = one.checks[centre], full.checks[centre]
        assert short.lhs == whole.lhs
        missing = whole.rhs - short.rhs
        assert missing > 0.0
        assert short.discrepancy == pytest.approx(missing, abs=whole.discrepancy + 1e-12)
        assert short.discrepancy > 3.0 * (short.slack - 0.5)
        assert short.discrepancy > 5.0 * whole.discrepancy

    def test_needs_restriction_and_terms(self, params):
        family = interval_family(1.0)
        with pytest.raises(DomainError):
            telescope_rho_check(params, family, 100, 1, 10, MacroscopicSet.NONE)
        with pytest.raises(DomainError):
            telescope_rho_check(params, family, 100, 1, 0)


class TestCharFunction:
    """Empirical |φ|² tables."""

    def test_point_mass_at_zero(self):
        table = char_function(np.zeros(10), 10.0, 201)
        assert np.all(table.phi_sq == 1.0)
        assert table.l2_density_estimate() == pytest.approx(20.0 / (2.0 * math.pi))
        assert table.tail_fraction(0.1) == pytest.approx(0.1)

    def test_two_point_law(self):
        table = char_function(np.array([-1.0, 1.0]), 5.0, 101)
        assert table.phi_sq == pytest.approx(np.cos(table.u_grid) ** 2, abs=1e-12)

    def test_grid_is_symmetric_through_zero(self):
        table = char_function(np.array([0.3]), 2.0, 10)
        assert table.u_grid.size == 11
        assert table.u_grid[5] == 0.0
        assert table.u_grid[-1] == 2.0

    @pytest.mark.parametrize(
        ("samples", "u_max", "points"),
        [(np.array([]), 1.0, 11), (np.ones(3), 0.0, 11), (np.ones(3), 1.0, 1)],
    )
    def test_bad_arguments(self, samples, u_max, points):
        with pytest.raises(DomainError):
            char_function(samples, u_max, points)

    def test_parseval_matches_the_histogram_density(self):
        """(1/2π)∫|φ|² and Σ f̂²Δx estimate the same ∫f², about 0.315 at κ = 0.65."""
        p = Params.from_kappa(0.65)
        n = 1 << 15
        table = char_function(sbr_samples(p, n, 21, threads=2), 100.0, 2001)
        histogram = sample_sbr_marginal(p, n, 21, 128, threads=2)
        fourier, binned = table.l2_density_estimate(), histogram.l2_density()
        assert fourier == pytest.approx(binned, rel=0.1)
        assert binned == pytest.approx(0.315, rel=0.1)

    def test_share_range(self):
        table = char_function(np.ones(3), 1.0, 11)
        with pytest.raises(DomainError):
            table.tail_fraction(0.0)


class TestOccupation:
    """Occupation measure of x ↦ H(ξ, x)."""

    def test_values_start_at_zero(self, params):
        values = occupation_values(BitString.zeros(64), params, 1024)
        assert values.size == 1024
        assert values[0] == 0.0

    def test_grid_too_small(self, params):
        with pytest.raises(DomainError):
            occupation_values(BitString.zeros(64), params, 1)

    def test_local_time_is_l2_stable(self, params):
        estimate = occupation_local_time(BitString.zeros(64), params, 1 << 18, 256)
        assert estimate.measure.total_mass == 1.0
        assert 0.8 < estimate.refinement_ratio < 1.25
        assert estimate.l2_norm > 0.0

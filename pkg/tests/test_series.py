import math

import numpy as np
import pytest
from hypothesis import given, settings

from src.bitreg import BitString, Phase
from src.errors import CertifiedPrecisionError, DomainError
from src.series import (
    Params,
    Residual,
    SeriesValue,
    bridge_checks,
    bridge_H,
    bridge_H_series,
    fiber_gap,
    g_function,
    holder_slope,
    jacobian,
    register_word,
    scaling_checks,
    stable_S,
    stable_S_direct,
    stable_S_words,
    stable_vector,
    takagi,
    takagi_words,
)
from tests.conftest import gammas, registers


class TestParams:
    """Parameter validation and derived bounds."""

    def test_defaults(self):
        p = Params(gamma=0.6)
        assert p.truncation == 48
        assert p.depth == 64
        assert p.kappa == pytest.approx(1 / 1.2)
        assert p.s_bound == pytest.approx(5.0)
        assert p.takagi_bound == pytest.approx(1.25)

    @pytest.mark.parametrize("gamma", [0.5, 1.0, 0.3])
    def test_gamma_outside_interval(self, gamma):
        with pytest.raises(DomainError):
            Params(gamma=gamma)

    def test_truncation_cannot_exceed_depth(self):
        with pytest.raises(DomainError):
            Params(gamma=0.6, truncation=40, depth=32)
        with pytest.raises(DomainError):
            Params(gamma=0.6, truncation=48, depth=65)

    def test_from_kappa(self):
        p = Params.from_kappa(0.6)
        assert p.gamma == pytest.approx(1 / 1.2)
        with pytest.raises(DomainError):
            Params.from_kappa(0.5)


class TestSeriesValue:
    """Tails propagate through arithmetic."""

    def test_tails_add_under_sum_and_difference(self):
        a = SeriesValue(1.0, 0.1)
        b = SeriesValue(0.5, 0.2)
        assert (a + b).tail_bound == pytest.approx(0.3)
        assert (a - b).value == 0.5
        assert (a - b).tail_bound == pytest.approx(0.3)
        assert (-a).tail_bound == 0.1

    def test_scaling_uses_absolute_factor(self):
        v = SeriesValue(2.0, 0.5).scaled(-3.0)
        assert v.value == -6.0
        assert v.tail_bound == 1.5
        assert SeriesValue(2.0, 0.5).shifted(1.0) == SeriesValue(3.0, 0.5)

    def test_agreement_and_residual(self):
        a = SeriesValue(1.0, 0.01)
        b = SeriesValue(1.015, 0.01)
        assert a.agrees_with(b)
        r = Residual.between("x", a, b)
        assert r.passed
        assert r.residual == pytest.approx(0.015)
        assert not Residual("y", 0.3, 0.2).passed


class TestTakagi:
    """The Takagi curve T."""

    def test_dyadic_values(self, params):
        assert takagi(BitString.zeros(64), params).value == 0.0
        assert takagi(BitString.from_bits("1"), params).value == 0.5
        assert takagi(BitString.from_bits("01"), params).value == pytest.approx(0.55)

    def test_short_registers_carry_no_truncation_tail(self, params):
        assert takagi(BitString.from_bits("0110"), params).tail_bound < 1e-14
        assert takagi(BitString.ones(64), params).tail_bound >= params.takagi_tail

    @given(x=registers(64))
    def test_bounded(self, x):
        p = Params(gamma=0.7)
        t = takagi(x, p)
        assert 0.0 <= t.value <= p.takagi_bound

    @given(x=registers(64))
    def test_vector_kernel_matches_scalar(self, x):
        p = Params(gamma=0.6)
        words = np.array([register_word(x)], dtype=np.uint64)
        assert takagi_words(words, p)[0] == pytest.approx(takagi(x, p).value, abs=1e-12)

    def test_register_word_rejects_deep_registers(self):
        with pytest.raises(DomainError):
            register_word(BitString(0, 65))


class TestStableSeries:
    """S, G and the direct baker-iterate reading of S."""

    def test_extremes(self, params):
        top = stable_S(BitString.zeros(64), params)
        bottom = stable_S(BitString.ones(64), params)
        assert abs(top.value - params.s_bound) <= top.tail_bound
        assert abs(bottom.value + params.s_bound) <= bottom.tail_bound

    @given(xi=registers(64))
    def test_vector_kernel_matches_scalar(self, xi):
        p = Params(gamma=0.65)
        words = np.array([register_word(xi)], dtype=np.uint64)
        assert stable_S_words(words, p)[0] == pytest.approx(stable_S(xi, p).value, abs=1e-12)

    @settings(max_examples=25)
    @given(xi=registers(64), x=registers(64))
    def test_constant_in_x(self, xi, x):
        p = Params(gamma=0.6)
        assert stable_S_direct(xi, x, p).agrees_with(stable_S(xi, p))

    @given(x=registers(12))
    def test_g_is_constant(self, x):
        g = g_function(x, Params(gamma=0.6))
        assert g.value == -2.0


class TestScaling:
    """One-step scaling identities and the invariance of the stable direction."""

    @settings(max_examples=50)
    @given(xi=registers(64), x=registers(64), gamma=gammas)
    def test_all_residuals_within_tails(self, xi, x, gamma):
        checks = scaling_checks(xi, x, Params(gamma=gamma))
        assert [c.name for c in checks] == [
            "s_scaling",
            "g_scaling",
            "h_scaling",
            "attractor",
            "stable_vector",
        ]
        assert all(c.passed for c in checks), checks

    def test_attractor_at_origin(self, params):
        zero = BitString.zeros(64)
        attractor = [c for c in scaling_checks(zero, zero, params) if c.name == "attractor"]
        assert attractor[0].residual == 0.0

    def test_needs_a_digit_each_way(self, params):
        with pytest.raises(CertifiedPrecisionError):
            scaling_checks(BitString.from_bits(""), BitString.from_bits("1"), params)

    def test_jacobian_shape(self, params):
        phase = Phase(BitString.from_bits("1"), BitString.from_bits("0"))
        d = jacobian(phase, params)
        assert d.shape == (3, 3)
        assert d[2, 1] == -0.5
        assert d[2, 2] == params.gamma
        assert stable_vector(BitString.zeros(64), params)[2] == pytest.approx(
            -stable_S(BitString.zeros(64), params).value
        )


class TestBridge:
    """The bridge function H and its two-sided series."""

    @given(xi=registers(64))
    def test_vanishes_at_zero(self, xi):
        p = Params(gamma=0.6)
        assert bridge_H(xi, BitString.zeros(64), p).value == 0.0

    @settings(max_examples=30)
    @given(xi=registers(64), eta=registers(64), x=registers(64), y=registers(64))
    def test_bridge_identities(self, xi, eta, x, y):
        checks = bridge_checks(xi, eta, x, y, Params(gamma=0.6))
        assert all(c.passed for c in checks), checks

    def test_series_matches_closed_form(self, params):
        xi = BitString((0xA5A5 << 48) | 0x1234, 64)
        x = BitString(0x3C3C_0000_FFFF_0101, 64)
        assert bridge_H_series(xi, x, params).agrees_with(bridge_H(xi, x, params))

    def test_series_needs_enough_digits(self, params):
        with pytest.raises(CertifiedPrecisionError):
            bridge_H_series(BitString.zeros(10), BitString.zeros(64), params)

    def test_fiber_gap_matches_increment(self, params):
        xi = BitString.from_bits("0110" * 16)
        x = BitString.from_bits("0001" * 16)
        y = BitString.from_bits("1011" * 16)
        gap = fiber_gap(xi, x, y, params)
        increment = bridge_H(xi, y, params) - bridge_H(xi, x, params)
        assert gap.agrees_with(increment)


class TestHolder:
    """Finite-grid Hölder regression."""

    @pytest.mark.parametrize("gamma", [0.6, 0.75])
    def test_slope_sits_just_below_the_exponent(self, gamma):
        target = math.log(gamma) / math.log(0.5)
        slope = holder_slope(Params(gamma=gamma))
        assert target - 0.08 < slope <= target

    def test_bad_scale_range(self, params):
        with pytest.raises(DomainError):
            holder_slope(params, grid_exponent=10, k_min=4, k_max=12)

    def test_bias_shrinks_at_finer_scales(self):
        p = Params(gamma=0.6)
        target = math.log(0.6) / math.log(0.5)
        coarse = holder_slope(p, k_min=4)
        fine = holder_slope(p, k_min=8)
        assert target - fine < target - coarse

    def test_bridge_value_at_one_half(self):
        p = Params(gamma=0.6)
        h = bridge_H(BitString.zeros(64), BitString.from_bits("1"), p)
        assert abs(h.value + 2.0) <= h.tail_bound

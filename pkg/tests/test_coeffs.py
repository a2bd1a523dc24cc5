import math

import numpy as np
import pytest

from kppspeed import coeffs
from kppspeed.errors import CoefficientError, PreconditionError

TWO_PI = 2.0 * math.pi

# trapezoid quadrature of 1/(1 + 0.5 sin x) on a 4096-point grid
# (analytic value: sqrt(3)/2)
HARMONIC_OF_SIN = 0.8660254037844387


class TestParser:
    def test_sin_expression_has_unit_mean(self):
        c = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 256)
        assert abs(np.mean(c.samples) - 1.0) < 1e-14

    def test_reciprocal_expression_min(self):
        c = coeffs.parse_coefficient("1/(1 - 0.5*sin(x))", TWO_PI, 256)
        assert np.min(c.samples) > 0
        j = int(np.argmin(c.samples))
        # minimum 2/3 at x = 3*pi/2
        assert abs(c.samples[j] - 2.0 / 3.0) < 1e-12
        assert abs(c.grid()[j] - 1.5 * math.pi) < c.spacing

    def test_unbalanced_parenthesis_position(self):
        with pytest.raises(CoefficientError) as err:
            coeffs.parse_coefficient("1 + 2*sin(x", TWO_PI, 256)
        assert err.value.position == 12

    def test_unknown_name(self):
        with pytest.raises(CoefficientError):
            coeffs.parse_coefficient("1 + tan(x)", TWO_PI, 256)

    def test_division_by_zero_at_node(self):
        with pytest.raises(CoefficientError) as err:
            coeffs.parse_coefficient("1/x", TWO_PI, 256)
        assert "division by zero" in str(err.value)

    def test_pi_constant_and_precedence(self):
        c = coeffs.parse_coefficient("2*pi - -1*cos(x)/2", TWO_PI, 64)
        x = c.grid()
        assert np.allclose(c.samples, 2 * math.pi + 0.5 * np.cos(x), rtol=0, atol=1e-15)

    def test_exp(self):
        c = coeffs.parse_coefficient("exp(sin(x))", TWO_PI, 64)
        assert np.allclose(c.samples, np.exp(np.sin(c.grid())), rtol=0, atol=1e-15)

    def test_grid_size_must_be_power_of_two(self):
        with pytest.raises(PreconditionError):
            coeffs.parse_coefficient("1", TWO_PI, 200)
        with pytest.raises(PreconditionError):
            coeffs.parse_coefficient("1", TWO_PI, 8)

    def test_period_must_be_positive(self):
        with pytest.raises(PreconditionError):
            coeffs.parse_coefficient("1", -1.0, 64)


class TestFourier:
    def test_fourier_record_matches_expression(self):
        c = coeffs.parse_coefficient("fourier: 1.0, [0.0,0.5]", TWO_PI, 256)
        e = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 256)
        assert np.allclose(c.samples, e.samples, rtol=0, atol=1e-14)

    def test_reciprocal_fourier(self):
        c = coeffs.parse_coefficient("reciprocal_fourier: 1.0, [0.0,-0.5]", TWO_PI, 256)
        e = coeffs.parse_coefficient("1/(1 - 0.5*sin(x))", TWO_PI, 256)
        assert np.allclose(c.samples, e.samples, rtol=0, atol=1e-14)

    def test_round_trip_is_bit_identical(self):
        c = coeffs.parse_coefficient(
            "fourier: 0.3333333333333333, [0.1,0.2], [-0.04,0.017]", TWO_PI, 128
        )
        again = coeffs.parse_coefficient(c.source, TWO_PI, 128)
        assert np.array_equal(c.samples, again.samples)

    def test_malformed_record(self):
        with pytest.raises(CoefficientError):
            coeffs.parse_coefficient("fourier: 1.0, [0.1]", TWO_PI, 64)
        with pytest.raises(CoefficientError):
            coeffs.parse_coefficient("fourier: ", TWO_PI, 64)


class TestMeans:
    def test_constant(self):
        c = coeffs.parse_coefficient("3", TWO_PI, 64)
        m = coeffs.means(c)
        assert m.arithmetic_mean == pytest.approx(3.0, abs=1e-15)
        assert m.harmonic_mean == pytest.approx(3.0, abs=1e-15)

    def test_reciprocal_has_unit_harmonic_mean(self):
        d = coeffs.parse_coefficient("1/(1 - 0.5*sin(x))", TWO_PI, 256)
        m = coeffs.means(d)
        assert m.arithmetic_mean > 1.0
        assert m.harmonic_mean == pytest.approx(1.0, abs=1e-14)

    def test_sin_harmonic_against_refined_quadrature(self):
        r = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 256)
        m = coeffs.means(r)
        assert m.arithmetic_mean == pytest.approx(1.0, abs=1e-14)
        assert m.harmonic_mean is not None and m.harmonic_mean < 1.0
        assert m.harmonic_mean == pytest.approx(HARMONIC_OF_SIN, abs=1e-13)

    def test_harmonic_absent_for_sign_changing(self):
        r = coeffs.parse_coefficient("1 + 2*sin(x)", TWO_PI, 256)
        m = coeffs.means(r)
        assert m.harmonic_mean is None
        assert m.arithmetic_mean == pytest.approx(1.0, abs=1e-14)

    def test_means_stable_under_refinement(self):
        c = coeffs.parse_coefficient("1 + 0.3*cos(x) + 0.1*sin(2*x)", TWO_PI, 256)
        m1 = coeffs.means(c)
        m2 = coeffs.means(c.resampled(512))
        assert abs(m1.arithmetic_mean - m2.arithmetic_mean) < 1e-13
        assert abs(m1.harmonic_mean - m2.harmonic_mean) < 1e-13

    @pytest.mark.parametrize("seed", range(8))
    def test_am_hm_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a0 = rng.uniform(1.0, 3.0)
        coeff = rng.uniform(-0.2, 0.2, size=4)
        text = (
            f"{a0} + {coeff[0]}*cos(x) + {coeff[1]}*sin(x)"
            f" + {coeff[2]}*cos(2*x) + {coeff[3]}*sin(2*x)"
        )
        c = coeffs.parse_coefficient(text, TWO_PI, 256)
        m = coeffs.means(c)
        assert m.harmonic_mean <= m.arithmetic_mean + 1e-14

    def test_am_hm_near_equality_forces_near_constant(self):
        c = coeffs.parse_coefficient("2 + 0.0000001*sin(x)", TWO_PI, 256)
        m = coeffs.means(c)
        if abs(m.arithmetic_mean - m.harmonic_mean) < 1e-10:
            assert np.max(c.samples) - np.min(c.samples) < 1e-6


class TestRescale:
    def test_identity_rescale(self):
        c = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 128)
        same = coeffs.rescale_period(c, TWO_PI)
        assert np.array_equal(c.samples, same.samples)
        assert same.period == c.period

    def test_means_invariant_under_dilation(self):
        d = coeffs.parse_coefficient("1/(1 - 0.5*sin(x))", TWO_PI, 256)
        tiny = coeffs.rescale_period(d, 0.01)
        m0, m1 = coeffs.means(d), coeffs.means(tiny)
        assert abs(m0.harmonic_mean - m1.harmonic_mean) < 1e-12
        assert abs(m0.arithmetic_mean - m1.arithmetic_mean) < 1e-12

    def test_samples_match_direct_evaluation(self):
        r = coeffs.parse_coefficient("1 + 0.5*sin(2*pi*x)", 1.0, 256)
        seven = coeffs.rescale_period(r, 7.0)
        x = seven.grid()
        assert np.allclose(seven.samples, 1 + 0.5 * np.sin(2 * math.pi * x / 7.0),
                           rtol=0, atol=1e-12)
        # evaluator agrees with the dilated expression off the grid too
        probe = np.array([0.31, 2.9, 6.5])
        assert np.allclose(seven.evaluate(probe), 1 + 0.5 * np.sin(2 * math.pi * probe / 7.0),
                           rtol=0, atol=1e-12)


class TestSamplesAndDiagnostics:
    def test_raw_samples_round_trip(self):
        data = 2.0 + np.sin(np.arange(64) * (TWO_PI / 64))
        c = coeffs.from_samples(data, TWO_PI)
        assert c.kind == "samples"
        assert np.array_equal(c.samples, data)
        # midpoints fall back to 2-point averages for raw data
        expected = 0.5 * (data + np.roll(data, -1))
        assert np.allclose(c.midpoint_values(), expected, rtol=0, atol=0)

    def test_resolution_diagnostic_recorded(self):
        smooth = coeffs.parse_coefficient("1 + 0.1*sin(x)", TWO_PI, 256)
        assert smooth.resolution_error < 1e-14
        # badly resolved: most of the mass sits in a spike narrower than h
        spiky = coeffs.parse_coefficient("1 + exp(-50*(1-cos(x)))", TWO_PI, 16)
        assert spiky.resolution_error > 1e-6

    def test_positivity_recheck_catches_subgrid_dip(self):
        # positive at all 16 nodes, negative at every midpoint
        c = coeffs.parse_coefficient("0.5 + cos(16*x)", TWO_PI, 16)
        assert np.min(c.samples) > 0
        with pytest.raises(PreconditionError):
            coeffs.require_positive(c)

    def test_samples_are_immutable(self):
        c = coeffs.parse_coefficient("1", TWO_PI, 64)
        with pytest.raises(ValueError):
            c.samples[0] = 2.0

    def test_derivative_spectral_accuracy(self):
        c = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 128)
        assert np.allclose(c.derivative_samples(), 0.5 * np.cos(c.grid()),
                           rtol=0, atol=1e-12)

import math

import numpy as np
import pytest

from kppspeed import coeffs, eigen, optimal, speed
from kppspeed.errors import PreconditionError

TWO_PI = 2.0 * math.pi

# independent oracle for d = 1, r = 1 + 0.5 sin x: dense full-spectrum
# eigensolves on a lambda sweep at N = 1024 refined by bisection, with the
# N = 1024 / N = 2048 values extrapolated
C_STAR_SIN_PAIR = 2.024107503453281


def random_smooth_pair(rng, n=256):
    """Fourier pairs of order <= 3 with min d bounded away from zero."""
    d_coeff = rng.uniform(-1.0, 1.0, size=(3, 2))
    r_coeff = rng.uniform(-1.0, 1.0, size=(3, 2))
    r_mean = rng.uniform(0.3, 1.5)

    def series(coeff, x):
        total = np.zeros_like(x)
        for k in range(1, 4):
            total += coeff[k - 1, 0] * np.cos(k * x) + coeff[k - 1, 1] * np.sin(k * x)
        return total

    dense = np.linspace(0.0, TWO_PI, 4097)
    d_floor = float(np.min(series(d_coeff, dense)))
    d_shift = 0.25 + rng.uniform(0.0, 1.0) - d_floor
    d = coeffs.derived_coefficient(
        lambda x: series(d_coeff, np.asarray(x, float)) + d_shift,
        TWO_PI, n, source="random diffusion",
    )
    r = coeffs.derived_coefficient(
        lambda x: series(r_coeff, np.asarray(x, float)) + r_mean,
        TWO_PI, n, source="random growth",
    )
    return d, r


class TestMinimalSpeed:
    def test_homogeneous(self, unit_pair):
        d, r = unit_pair
        result = speed.minimal_speed(d, r)
        assert result.c_star == pytest.approx(2.0, abs=1e-8)
        assert result.lambda_star == pytest.approx(1.0, abs=1e-8)
        assert result.lower_bound == pytest.approx(2.0, abs=1e-12)

    def test_exact_example(self, exact_pair):
        d, r = exact_pair
        result = speed.minimal_speed(d, r)
        assert result.c_star == pytest.approx(2.0, abs=1e-3)
        assert result.richardson_estimate == pytest.approx(2.0, abs=1e-5)
        assert result.lower_bound == pytest.approx(2.0, abs=1e-12)

    def test_sin_growth_against_sweep_oracle(self):
        d = coeffs.parse_coefficient("1", TWO_PI, 256)
        r = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 256)
        result = speed.minimal_speed(d, r)
        assert result.richardson_estimate == pytest.approx(C_STAR_SIN_PAIR, abs=1e-6)
        assert result.c_star > 2.0
        assert result.lower_bound == pytest.approx(2.0, abs=1e-12)

    def test_result_internal_consistency(self, exact_pair):
        d, r = exact_pair
        result = speed.minimal_speed(d, r)
        assert result.c_star == pytest.approx(-result.k_at_star / result.lambda_star, abs=1e-12)
        assert result.bracket[0] < result.lambda_star < result.bracket[1]
        for lam in result.bracket:
            pair = eigen.principal_eigenpair(eigen.assemble_operator(d, r, lam))
            assert -pair.k / lam >= result.c_star - 1e-12
        assert result.grid_size == 256
        assert result.evaluations > 17

    def test_rejects_nonpositive_growth_mean(self):
        d = coeffs.parse_coefficient("1", TWO_PI, 64)
        r = coeffs.parse_coefficient("-1", TWO_PI, 64)
        with pytest.raises(PreconditionError):
            speed.minimal_speed(d, r)

    def test_constant_scaling_is_sqrt_homogeneous(self):
        for k in (0.25, 1.0, 9.0):
            d = coeffs.parse_coefficient(f"{3.0 * k}", TWO_PI, 64)
            r = coeffs.parse_coefficient("2", TWO_PI, 64)
            result = speed.minimal_speed(d, r)
            assert result.c_star == pytest.approx(2.0 * math.sqrt(3.0 * k * 2.0), abs=1e-8)

    @pytest.mark.parametrize("seed", range(5))
    def test_lower_bound_holds_on_random_pairs(self, seed):
        rng = np.random.default_rng(1000 + seed)
        d, r = random_smooth_pair(rng)
        if coeffs.means(r).arithmetic_mean <= 0.2:
            pytest.skip("draw outside the admissible family")
        result = speed.minimal_speed(d, r)
        assert result.c_star >= result.lower_bound - 1e-6
        assert result.richardson_estimate >= result.lower_bound - 1e-6


class TestLowerBound:
    def test_homogeneous(self, unit_pair):
        assert speed.lower_bound(*unit_pair) == pytest.approx(2.0, abs=1e-14)

    def test_exact_example(self, exact_pair):
        assert speed.lower_bound(*exact_pair) == pytest.approx(2.0, abs=1e-13)

    def test_reciprocal_diffusion_with_unit_growth(self):
        d = coeffs.parse_coefficient("1/(1 - 0.5*sin(x))", TWO_PI, 256)
        r = coeffs.parse_coefficient("1", TWO_PI, 256)
        assert speed.lower_bound(d, r) == pytest.approx(2.0, abs=1e-13)


class TestEqualityReport:
    def test_exact_example(self, exact_pair):
        report = speed.equality_report(*exact_pair)
        assert report.condition_residual < 1e-10
        assert abs(report.speed_gap) < 1e-6
        assert report.lambda0 == pytest.approx(1.0, abs=1e-13)
        assert report.eigenfunction_deviation > 0.01

    def test_constant_pair(self, unit_pair):
        report = speed.equality_report(*unit_pair)
        assert report.condition_residual < 1e-14
        assert abs(report.speed_gap) < 1e-9
        assert report.eigenfunction_deviation < 1e-10

    def test_sin_growth_violates_condition(self):
        d = coeffs.parse_coefficient("1", TWO_PI, 256)
        r = coeffs.parse_coefficient("1 + 0.5*sin(x)", TWO_PI, 256)
        report = speed.equality_report(d, r)
        assert report.condition_residual == pytest.approx(0.5, abs=1e-12)
        assert report.speed_gap > 1e-3

    def test_equivalence_on_constructed_optimum(self):
        # residual ~ 0 must come with gap ~ 0 and lambda* ~ lambda0
        d = coeffs.parse_coefficient("1 + 0.5*cos(x)", TWO_PI, 256)
        r_d = optimal.optimal_growth(d, 1.0)
        report = speed.equality_report(d, r_d)
        assert report.condition_residual < 1e-8
        assert abs(report.speed_gap) < 1e-4
        result = speed.minimal_speed(d, r_d)
        assert abs(result.lambda_star - report.lambda0) < 1e-4 * report.lambda0

    def test_uniqueness_margin_at_shifted_rates(self, exact_pair):
        d, r = exact_pair
        lam0 = 1.0
        g0 = None
        values = {}
        for factor in (0.9, 1.0, 1.1):
            pair = eigen.principal_eigenpair(eigen.assemble_operator(d, r, lam0 * factor))
            values[factor] = -pair.k / (lam0 * factor)
        assert values[0.9] > values[1.0] + 1e-6
        assert values[1.1] > values[1.0] + 1e-6
        # and the variational minimizer at lambda0 is the flat profile
        result = eigen.variational_value(d, r, lam0)
        flat = result.phi * math.sqrt(TWO_PI)
        assert np.max(flat) - np.min(flat) < 1e-6

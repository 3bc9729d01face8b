"""Invariant measure: CDF, sampling, digit law."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from ncf import (
    DensityFunction,
    GaussMeasure,
    NcfParams,
    digit_law,
    gn_cdf,
    gn_measure,
    gn_quantile,
    gn_sample,
)


@pytest.fixture(params=[1, 2, 5])
def gm(request):
    return GaussMeasure(NcfParams(request.param))


class TestDensity:
    def test_normalized(self, gm):
        total, _ = integrate.quad(lambda x: gm.density(x), 0, 1, epsabs=1e-14)
        assert abs(total - 1.0) <= 1e-12

    def test_positive_decreasing(self, gm):
        x = np.linspace(0, 1, 101)
        d = gm.density(x)
        assert np.all(d > 0)
        assert np.all(np.diff(d) < 0)


class TestCdf:
    def test_endpoints(self, gm):
        assert gn_cdf(0.0, gm) == 0.0
        assert gn_cdf(1.0, gm) == pytest.approx(1.0, abs=1e-15)

    def test_half_value_n1(self):
        gm1 = GaussMeasure(NcfParams(1))
        assert gn_cdf(0.5, gm1) == pytest.approx(math.log(1.5) / math.log(2), abs=1e-15)

    def test_quadrature_cross_check(self, gm):
        for x in (0.1, 0.37, 0.5, 0.93):
            val, _ = integrate.quad(lambda t: gm.density(t), 0, x, epsabs=1e-13)
            assert gn_cdf(x, gm) == pytest.approx(val, abs=1e-11)

    def test_monotone(self, gm):
        x = np.linspace(0, 1, 200)
        assert np.all(np.diff(gn_cdf(x, gm)) > 0)

    def test_domain(self, gm):
        with pytest.raises(ValueError):
            gn_cdf(-0.1, gm)
        with pytest.raises(ValueError):
            gn_cdf(1.1, gm)


class TestMeasure:
    def test_full_and_empty(self, gm):
        assert gn_measure(0, 1, gm) == pytest.approx(1.0, abs=1e-15)
        assert gn_measure(0.4, 0.4, gm) == 0.0

    def test_interval_value_n2(self):
        gm2 = GaussMeasure(NcfParams(2))
        expect = math.log(15 / 14) / math.log(3 / 2)
        assert gn_measure(1 / 3, 1 / 2, gm2) == pytest.approx(expect, abs=1e-12)
        val, _ = integrate.quad(lambda t: gm2.density(t), 1 / 3, 1 / 2, epsabs=1e-13)
        assert val == pytest.approx(expect, abs=1e-10)

    def test_order_required(self, gm):
        with pytest.raises(ValueError):
            gn_measure(0.6, 0.2, gm)


class TestSampling:
    def test_quantile_endpoints(self, gm):
        assert gn_quantile(0.0, gm) == 0.0
        assert gn_quantile(1.0 - 1e-12, gm) < 1.0
        assert gn_quantile(1.0, gm) == pytest.approx(1.0, abs=1e-12)

    def test_inverse_consistency(self, gm):
        u = np.linspace(0, 1, 33)
        assert np.max(np.abs(gn_cdf(gn_quantile(u, gm), gm) - u)) <= 1e-12

    def test_ks_against_cdf(self, gm):
        rng = np.random.default_rng(12345)
        sample = gn_sample(gm, rng, 10**6)
        stat = stats.kstest(sample, lambda x: gn_cdf(x, gm)).statistic
        assert stat <= 1.63 / math.sqrt(10**6)


class TestDigitLaw:
    def test_sums_to_one(self, gm):
        n = gm.n
        head = sum(digit_law(i, gm) for i in range(n, n + 2000))
        # telescoping tail: mass beyond i_max is log((i+1)/i * (N+1)/N ... )
        i_top = n + 2000
        tail = math.log((i_top + 1) / i_top) / gm.log_norm
        assert head + tail == pytest.approx(1.0, abs=1e-9)

    def test_known_values(self):
        gm1 = GaussMeasure(NcfParams(1))
        gm2 = GaussMeasure(NcfParams(2))
        assert digit_law(1, gm1) == pytest.approx(math.log(4 / 3) / math.log(2), abs=1e-14)
        assert digit_law(2, gm2) == pytest.approx(math.log(9 / 8) / math.log(3 / 2), abs=1e-14)

    def test_quadrature_oracle(self, gm):
        # mass of the first-digit cell (N/(i+1), N/i]
        n = gm.n
        for i in range(n, n + 6):
            val, _ = integrate.quad(lambda t: gm.density(t), n / (i + 1), n / i,
                                    epsabs=1e-13)
            assert digit_law(i, gm) == pytest.approx(val, abs=1e-10)

    def test_decreasing_in_i(self, gm):
        vals = [digit_law(i, gm) for i in range(gm.n, gm.n + 40)]
        assert all(a > b > 0 for a, b in zip(vals, vals[1:]))

    def test_domain(self, gm):
        with pytest.raises(ValueError):
            digit_law(gm.n - 1, gm)

    def test_independent_of_n_up_to_normalizer(self):
        gm1 = GaussMeasure(NcfParams(1))
        gm3 = GaussMeasure(NcfParams(3))
        for i in range(3, 30):
            lhs = digit_law(i, gm1) * gm1.log_norm
            rhs = digit_law(i, gm3) * gm3.log_norm
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_monte_carlo_frequencies(self, gm):
        rng = np.random.default_rng(777)
        k = 10**6
        x = gn_sample(gm, rng, k)
        x = x[x > 0]
        first_digit = np.floor(gm.n / x)
        for i in range(gm.n, gm.n + 21):
            p = digit_law(i, gm)
            freq = float(np.mean(first_digit == i))
            se = math.sqrt(p * (1 - p) / k)
            assert abs(freq - p) <= 4 * se + 1e-9


class TestMapInvarianceAtIntervalLevel:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_preimage_mass_matches(self, n):
        # the preimage of [0, u) under the map is a union of branch pieces
        # (N/(u+i), N/i] for i >= N, plus tail handled in closed form
        gm = GaussMeasure(NcfParams(n))
        for u in np.linspace(0.05, 1.0, 12):
            u = float(u)
            i_max = 5000
            total = 0.0
            for i in range(n, i_max):
                lo = n / (u + i)
                hi = min(n / i, 1.0)
                if hi > lo:
                    total += gn_measure(lo, hi, gm)
            # the sliver masses telescope beyond i_max: log(1 + u/i_max)
            total += math.log1p(u / i_max) / gm.log_norm
            assert total == pytest.approx(gn_measure(0.0, u, gm), abs=1e-9)


class TestDensityFunction:
    def test_accepts_normalized(self):
        DensityFunction(lambda x: 1.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            DensityFunction(lambda x: 2.0)

"""Distribution of map iterates: limits, rates, operator vs simulation."""

import math

import numpy as np
import pytest
from scipy import integrate

from ncf import (
    FitError,
    GaussMeasure,
    NcfParams,
    distribution_at,
    gauss_initial,
    gn_cdf,
    lebesgue_measure,
    limit_cdf,
    pushforward_density,
    run_experiment,
    tilted_measure,
)
from ncf.gausskuzmin import density_from_grid, initial_grid_density


class TestLimitCdf:
    def test_classical_law(self):
        # N = 1 limit is log2(1 + x)
        for x in (0.0, 0.25, 0.5, 0.75, 1.0):
            assert limit_cdf(x, NcfParams(1)) == pytest.approx(
                math.log2(1 + x), abs=1e-12)

    def test_general_form(self):
        for n in (2, 5):
            params = NcfParams(n)
            for x in (0.2, 0.7):
                want = math.log((x + n) / n) / math.log((n + 1) / n)
                assert limit_cdf(x, params) == pytest.approx(want, abs=1e-12)


class TestInitialMeasures:
    def test_density_grid_roundtrip(self):
        # Lebesgue -> relative density -> Lebesgue returns the constant 1
        params = NcfParams(2)
        f0 = initial_grid_density(lebesgue_measure(), params, 512)
        h = density_from_grid(f0, params)
        for t in (0.0, 0.3, 0.8, 1.0):
            assert h(t) == pytest.approx(1.0, abs=1e-12)

    def test_invariant_start_has_unit_relative_density(self):
        params = NcfParams(3)
        f0 = initial_grid_density(gauss_initial(params), params, 256)
        assert np.max(np.abs(f0.values - 1.0)) <= 1e-12

    def test_tilted_density_normalized(self):
        val, _ = integrate.quad(tilted_measure().density, 0, 1, epsabs=1e-13)
        assert val == pytest.approx(1.0, abs=1e-12)


class TestPushforward:
    @pytest.mark.parametrize("n", [1, 2])
    def test_mass_preserved(self, n):
        # DensityFunction validates unit mass at construction
        h = pushforward_density(lebesgue_measure(), NcfParams(n))
        val, _ = integrate.quad(h, 0, 1, epsabs=1e-10, limit=200)
        assert val == pytest.approx(1.0, abs=1e-7)

    def test_invariant_density_is_fixed(self):
        params = NcfParams(1)
        gm = GaussMeasure(params)
        h = pushforward_density(gauss_initial(params), params, m=2048)
        for t in (0.1, 0.5, 0.9):
            assert h(t) == pytest.approx(float(gm.density(t)), abs=1e-6)


class TestDistributionAt:
    def test_n_zero_is_initial_cdf(self):
        params = NcfParams(1)
        for x in (0.0, 0.3, 0.7, 1.0):
            got = distribution_at(lebesgue_measure(), 0, x, params)
            assert got == pytest.approx(x, abs=1e-7)

    def test_one_step_uniform_series_oracle(self):
        # P(frac(1/U) < 1/2) telescopes to 2 - 2 log 2
        i = np.arange(1, 10**7, dtype=float)
        series = float(np.sum(1.0 / i - 1.0 / (i + 0.5)))
        closed = 2 - 2 * math.log(2)
        assert series == pytest.approx(closed, abs=1e-6)
        got = distribution_at(lebesgue_measure(), 1, 0.5, NcfParams(1), m=2048)
        assert got == pytest.approx(closed, abs=1e-6)

    def test_monotone_in_x(self):
        params = NcfParams(2)
        vals = [distribution_at(lebesgue_measure(), 3, x, params)
                for x in np.linspace(0.0, 1.0, 21)]
        assert vals[0] == pytest.approx(0.0, abs=1e-7)
        assert vals[-1] == pytest.approx(1.0, abs=1e-7)
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n_steps,x", [(1, 0.4), (3, 0.6), (5, 0.25)])
    def test_operator_agrees_with_montecarlo(self, n_steps, x):
        params = NcfParams(1)
        mu = tilted_measure()
        op = distribution_at(mu, n_steps, x, params)
        rng = np.random.default_rng(1234)
        k = 200_000
        mc = distribution_at(mu, n_steps, x, params, method="montecarlo",
                             n_paths=k, rng=rng)
        se = math.sqrt(max(mc * (1 - mc), 1e-12) / k)
        assert abs(op - mc) <= 4 * se + 1e-3

    def test_converges_to_limit(self):
        params = NcfParams(2)
        mu = lebesgue_measure()
        errs = [abs(distribution_at(mu, n, 0.4, params) - limit_cdf(0.4, params))
                for n in (1, 3, 6, 12)]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-6

    def test_domain_errors(self):
        params = NcfParams(1)
        with pytest.raises(ValueError):
            distribution_at(lebesgue_measure(), -1, 0.5, params)
        with pytest.raises(ValueError):
            distribution_at(lebesgue_measure(), 2, 1.5, params)
        with pytest.raises(ValueError):
            distribution_at(lebesgue_measure(), 2, 0.5, params, method="exact")


class TestRunExperiment:
    def test_lebesgue_classical(self):
        rep = run_experiment(lebesgue_measure(), NcfParams(1),
                             rng=np.random.default_rng(7))
        assert rep.q_fit is not None and 0.25 <= rep.q_fit <= 0.40
        assert rep.theta_bound is not None and rep.theta_bound > 0
        lo, hi = rep.fit_window
        window = rep.sup_errors[lo - 1:hi]
        assert all(a > b for a, b in zip(window, window[1:]))
        assert rep.sup_errors[-1] < 1e-6
        assert max(abs(r) for r in rep.fit_residuals) < 0.5
        for cell in rep.method_agreement:
            assert abs(cell["operator"] - cell["montecarlo"]) <= cell["band"]

    def test_invariant_start_is_flat(self):
        # starting from the invariant measure there is nothing to decay
        rep = run_experiment(gauss_initial(NcfParams(2)), NcfParams(2),
                             require_fit=False, rng=np.random.default_rng(9))
        assert max(rep.sup_errors) < 1e-7

    def test_invariant_start_requires_fit_flag(self):
        with pytest.raises(FitError):
            run_experiment(gauss_initial(NcfParams(2)), NcfParams(2),
                           rng=np.random.default_rng(9))

    @pytest.mark.parametrize("n", [2, 5])
    def test_tilted_start_decays(self, n):
        rep = run_experiment(tilted_measure(), NcfParams(n), n_max=30,
                             rng=np.random.default_rng(11))
        assert rep.q_fit is not None and 0.0 < rep.q_fit < 0.5
        assert rep.sup_errors[-1] < rep.sup_errors[0]

    def test_report_serializes(self):
        rep = run_experiment(lebesgue_measure(), NcfParams(1), n_max=10,
                             rng=np.random.default_rng(3))
        d = rep.to_dict()
        assert set(d) == {"n_values", "sup_errors", "q_fit", "theta_bound",
                          "fit_window", "fit_residuals", "method_agreement"}
        assert len(d["sup_errors"]) == 10

    def test_rejects_small_nmax(self):
        with pytest.raises(ValueError):
            run_experiment(lebesgue_measure(), NcfParams(1), n_max=3)

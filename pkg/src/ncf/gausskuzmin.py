"""Gauss-Kuzmin experiments: propagate an initial law under the interval map.

For an initial probability measure with density h on [0,1], the distribution
of the n-th map iterate is an integral of the n-th transfer-operator iterate
of f0(x) = log((N+1)/N) (x+N) h(x) against the invariant measure; f0 is the
density of the initial measure relative to the invariant one, so f0 -> 1 and
the distributions converge to the invariant CDF at a geometric rate.  The
harness computes the per-n sup error over an x grid, fits the rate, and
cross-checks the operator route against seeded Monte Carlo orbit simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import NcfParams
from .errors import FitError, charge
from .measure import DensityFunction, GaussMeasure, gn_cdf, gn_quantile
from .transfer import GridFunction, apply_transfer, default_branch_cutoff, _fit_window


@dataclass(frozen=True)
class InitialMeasure:
    density: DensityFunction
    lipschitz: bool = True


@dataclass(frozen=True)
class GkReport:
    n_values: tuple
    sup_errors: tuple
    q_fit: Optional[float]
    theta_bound: Optional[float]
    fit_window: Optional[tuple]
    fit_residuals: tuple
    method_agreement: tuple   # dicts with n, x, operator, montecarlo, band

    def to_dict(self) -> dict:
        return {
            "n_values": list(self.n_values),
            "sup_errors": list(self.sup_errors),
            "q_fit": self.q_fit,
            "theta_bound": self.theta_bound,
            "fit_window": list(self.fit_window) if self.fit_window else None,
            "fit_residuals": list(self.fit_residuals),
            "method_agreement": [dict(c) for c in self.method_agreement],
        }


def lebesgue_measure() -> InitialMeasure:
    return InitialMeasure(DensityFunction(lambda x: 1.0, lipschitz_bound=0.0))


def gauss_initial(params: NcfParams) -> InitialMeasure:
    gm = GaussMeasure(params)
    return InitialMeasure(DensityFunction(lambda x: float(gm.density(x)),
                                          lipschitz_bound=1.0 / gm.log_norm))


def tilted_measure() -> InitialMeasure:
    """Density proportional to 1 + x/2."""
    return InitialMeasure(DensityFunction(lambda x: (1.0 + x / 2.0) / 1.25,
                                          lipschitz_bound=0.4))


def limit_cdf(x, params: NcfParams):
    """The limiting distribution of the map iterates: the invariant CDF."""
    return gn_cdf(x, GaussMeasure(params))


def initial_grid_density(mu: InitialMeasure, params: NcfParams, m: int) -> GridFunction:
    """f0 = d(mu)/d(invariant measure) sampled on the operator grid."""
    gm = GaussMeasure(params)
    x = np.linspace(0.0, 1.0, m + 1)
    h = np.array([mu.density(float(t)) for t in x])
    return GridFunction(gm.log_norm * (x + params.n_param) * h)


def density_from_grid(f0: GridFunction, params: NcfParams) -> DensityFunction:
    """Convert a grid density relative to the invariant measure back to a
    Lebesgue density."""
    gm = GaussMeasure(params)
    x = f0.nodes
    vals = f0.values / (gm.log_norm * (x + params.n_param))
    vals = vals / np.trapezoid(vals, x)  # remove the grid's O(h^2) mass drift

    def h(t):
        return float(np.interp(t, x, vals))

    return DensityFunction(h, mass_tol=1e-6)


def pushforward_density(mu: InitialMeasure, params: NcfParams, m: int = 1024) -> DensityFunction:
    """Density of the image measure after one map step."""
    f0 = initial_grid_density(mu, params, m)
    return density_from_grid(apply_transfer(f0, params), params)


def _cdf_on_grid(f: GridFunction, gm: GaussMeasure) -> np.ndarray:
    """Cumulative integral of f against the invariant measure at the nodes.

    Split as closed-form CDF plus the cumulative trapezoid of (f - 1) times
    the density, so the quadrature error scales with |f - 1| rather than
    with the full integrand.
    """
    x = f.nodes
    resid = (f.values - 1.0) * gm.density(x)
    h = x[1] - x[0]
    cum = np.concatenate([[0.0], np.cumsum((resid[:-1] + resid[1:]) * (h / 2.0))])
    return gn_cdf(x, gm) + cum


def _sample_initial(mu: InitialMeasure, n_paths: int, rng: np.random.Generator,
                    inv_grid: int = 4096) -> np.ndarray:
    """Inverse-CDF sampling of the initial measure on a fine numeric grid."""
    x = np.linspace(0.0, 1.0, inv_grid + 1)
    dens = np.array([mu.density(float(t)) for t in x])
    h = x[1] - x[0]
    cdf = np.concatenate([[0.0], np.cumsum((dens[:-1] + dens[1:]) * (h / 2.0))])
    cdf /= cdf[-1]
    return np.interp(rng.random(n_paths), cdf, x)


def _iterate_map(y: np.ndarray, n: int, n_param: int) -> np.ndarray:
    for _ in range(n):
        out = np.zeros_like(y)
        nz = y > 0.0
        q = n_param / y[nz]
        out[nz] = q - np.floor(q)
        y = out
    return y


def distribution_at(mu: InitialMeasure, n: int, x: float, params: NcfParams,
                    method: str = "operator", m: int = 1024,
                    n_paths: int = 100_000,
                    rng: Optional[np.random.Generator] = None) -> float:
    """Probability that the n-th map iterate of a mu-distributed point is < x."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if method == "operator":
        charge(max(n, 1) * m * default_branch_cutoff(params), "distribution_at operator")
        gm = GaussMeasure(params)
        f = initial_grid_density(mu, params, m)
        for _ in range(n):
            f = apply_transfer(f, params)
        cum = _cdf_on_grid(f, gm)
        return float(np.interp(x, f.nodes, cum))
    if method == "montecarlo":
        charge(max(n, 1) * n_paths, "distribution_at montecarlo")
        if rng is None:
            rng = np.random.default_rng(0)
        y = _sample_initial(mu, n_paths, rng)
        y = _iterate_map(y, n, params.n_param)
        return float(np.mean(y < x))
    raise ValueError(f"unknown method {method!r}")


def run_experiment(mu: InitialMeasure, params: NcfParams, n_max: int = 40,
                   x_grid: int = 257, m: int = 1024,
                   spot_paths: int = 100_000,
                   rng: Optional[np.random.Generator] = None,
                   require_fit: bool = True) -> GkReport:
    """Per-n sup error against the limit law, geometric-rate fit, and
    operator-vs-Monte-Carlo spot checks."""
    if n_max < 5:
        raise ValueError(f"n_max must be >= 5, got {n_max}")
    if rng is None:
        rng = np.random.default_rng(0)
    charge(n_max * m * default_branch_cutoff(params), "run_experiment")
    gm = GaussMeasure(params)
    xs = np.linspace(0.0, 1.0, x_grid)
    limit = gn_cdf(xs, gm)
    f = initial_grid_density(mu, params, m)
    sup_errors = np.empty(n_max)
    err_rows = []
    for k in range(n_max):
        f = apply_transfer(f, params)
        cum = _cdf_on_grid(f, gm)
        err = np.interp(xs, f.nodes, cum) - limit
        err_rows.append(err)
        sup_errors[k] = float(np.max(np.abs(err)))
    idx = _fit_window(sup_errors)
    q_fit = theta_bound = None
    window = None
    residuals = ()
    if len(idx) >= 3:
        ns = np.array(idx, dtype=float) + 1.0
        logs = np.log(sup_errors[idx])
        slope, intercept = np.polyfit(ns, logs, 1)
        q_fit = float(math.exp(slope))
        residuals = tuple(float(r) for r in (logs - (slope * ns + intercept)))
        window = (idx[0] + 1, idx[-1] + 1)
        # envelope constant of the error term relative to the limit CDF
        mask = limit >= 0.05
        theta_bound = max(
            float(np.max(np.abs(err_rows[j][mask]) / limit[mask])) / q_fit ** (j + 1)
            for j in idx
        )
    elif require_fit:
        raise FitError(
            f"only {len(idx)} admissible points before the error floor; "
            "cannot fit a geometric rate"
        )
    cells = []
    for n_spot, x_spot in ((2, 0.25), (4, 0.5), (6, 0.75)):
        n_spot = min(n_spot, n_max)
        op = distribution_at(mu, n_spot, x_spot, params, method="operator", m=m)
        mc = distribution_at(mu, n_spot, x_spot, params, method="montecarlo",
                             n_paths=spot_paths, rng=rng)
        band = 4.0 * math.sqrt(max(mc * (1 - mc), 1e-12) / spot_paths) + 1e-4
        cells.append({"n": n_spot, "x": x_spot, "operator": op,
                      "montecarlo": mc, "band": band})
    return GkReport(
        n_values=tuple(range(1, n_max + 1)),
        sup_errors=tuple(float(e) for e in sup_errors),
        q_fit=q_fit,
        theta_bound=theta_bound,
        fit_window=window,
        fit_residuals=residuals,
        method_agreement=tuple(cells),
    )

"""The invariant measure of the N-continued-fraction map.

Density 1/((x+N) log((N+1)/N)) on [0,1]: closed-form CDF, interval measure,
inverse-CDF sampling, and the induced law of the first digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .core import NcfParams


@dataclass(frozen=True)
class GaussMeasure:
    params: NcfParams
    log_norm: float = field(init=False)

    def __post_init__(self):
        n = self.params.n_param
        object.__setattr__(self, "log_norm", math.log((n + 1) / n))

    @property
    def n(self) -> int:
        return self.params.n_param

    def density(self, x):
        """dG/dx = 1/((x+N) log((N+1)/N)); strictly decreasing on [0,1]."""
        return 1.0 / ((np.asarray(x, dtype=float) + self.n) * self.log_norm)


@dataclass(frozen=True)
class DensityFunction:
    """A probability density on [0,1], checked to integrate to 1 at construction."""

    evaluator: Callable[[float], float]
    lipschitz_bound: Optional[float] = None
    mass_tol: float = 1e-9

    def __post_init__(self):
        total, _ = integrate.quad(self.evaluator, 0.0, 1.0, epsabs=1e-12, limit=200)
        if abs(total - 1.0) > self.mass_tol:
            raise ValueError(f"density integrates to {total!r}, not 1")

    def __call__(self, x):
        return self.evaluator(x)


def gn_cdf(x, gm: GaussMeasure):
    """log((x+N)/N) / log((N+1)/N); 0 at x=0, 1 at x=1."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > 1):
        raise ValueError("gn_cdf argument outside [0, 1]")
    out = np.log1p(xa / gm.n) / gm.log_norm
    return float(out) if np.isscalar(x) or xa.ndim == 0 else out


def gn_measure(a: float, b: float, gm: GaussMeasure) -> float:
    """Measure of [a, b]."""
    if a > b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    return gn_cdf(b, gm) - gn_cdf(a, gm)


def gn_quantile(u, gm: GaussMeasure):
    """Exact inverse of gn_cdf: N ((N+1)/N)^u - N."""
    ua = np.asarray(u, dtype=float)
    out = gm.n * np.exp(ua * gm.log_norm) - gm.n
    return float(out) if np.isscalar(u) or ua.ndim == 0 else out


def gn_sample(gm: GaussMeasure, rng: np.random.Generator, size=None):
    """Inverse-CDF samples from an explicit seeded generator."""
    return gn_quantile(rng.random(size), gm)


def digit_law(i: int, gm: GaussMeasure) -> float:
    """Probability that the first digit equals i under the invariant measure.

    The digit-i cell is (N/(i+1), N/i], so the mass is
    log((i+1)^2 / (i (i+2))) / log((N+1)/N); the series over i >= N
    telescopes to 1.
    """
    if i < gm.n:
        raise ValueError(f"digit must be >= N = {gm.n}, got {i}")
    return math.log((i + 1) ** 2 / (i * (i + 2))) / gm.log_norm

"""N-continued-fraction expansions.

The interval map x -> N/x - floor(N/x) on [0,1] generates, for each integer
N >= 1, a continued-fraction expansion x = N/(a_1 + N/(a_2 + ...)) whose
digits a_k are integers >= N.  This module provides the map itself (float and
exact-rational paths), digit extraction, finite-expansion evaluation, the
convergent recurrence, and the attracting point of the inverse-branch
iteration x -> N/(x+N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Real = Union[int, float, Fraction]


@dataclass(frozen=True)
class NcfParams:
    """The expansion parameter N >= 1."""

    n_param: int

    def __post_init__(self):
        if not isinstance(self.n_param, int) or self.n_param < 1:
            raise ValueError(f"n_param must be an integer >= 1, got {self.n_param!r}")


@dataclass(frozen=True)
class DigitSequence:
    """Partial quotients of an expansion; terminated means the orbit hit 0."""

    digits: tuple
    terminated: bool

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)


def _check_unit_interval(x: Real) -> None:
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if x < 0 or x > 1:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")


def gauss_map(x: float, params: NcfParams) -> float:
    """One step of the interval map N/x - floor(N/x); fixes 0."""
    _check_unit_interval(x)
    if x == 0:
        return 0.0
    n = params.n_param
    q = n / x
    return q - math.floor(q)


def gauss_map_rational(x: Fraction, params: NcfParams) -> Fraction:
    """Exact image of a rational under the map; the oracle for the float path."""
    _check_unit_interval(x)
    if x == 0:
        return Fraction(0)
    q = Fraction(params.n_param) / x
    return q - math.floor(q)


def digits(x: Real, params: NcfParams, max_len: int) -> DigitSequence:
    """First max_len digits a_k = floor(N / T^{k-1}(x)).

    Rational inputs are expanded exactly and always terminate (denominators
    strictly decrease); float inputs follow the binary64 orbit.  x = 0 is a
    domain error: its first digit would be infinite.
    """
    _check_unit_interval(x)
    if x == 0:
        raise ValueError("digits undefined at x = 0 (first digit is infinite)")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    n = params.n_param
    out = []
    if isinstance(x, (Fraction, int)):
        y = Fraction(x)
        for _ in range(max_len):
            q = Fraction(n) / y
            a = math.floor(q)
            out.append(a)
            y = q - a
            if y == 0:
                return DigitSequence(tuple(out), True)
        return DigitSequence(tuple(out), False)
    y = float(x)
    for _ in range(max_len):
        q = n / y
        a = math.floor(q)
        out.append(a)
        y = q - a
        if y == 0.0:
            return DigitSequence(tuple(out), True)
    return DigitSequence(tuple(out), False)


def evaluate(seq: Union[DigitSequence, Sequence[int]], params: NcfParams) -> Fraction:
    """Exact value of the finite expansion N/(a_1 + N/(a_2 + ...))."""
    ds = tuple(seq)
    if not ds:
        raise ValueError("cannot evaluate an empty digit sequence")
    if any(a < 1 for a in ds):
        raise ValueError("all digits must be >= 1")
    n = params.n_param
    acc = Fraction(0)
    for a in reversed(ds):
        acc = Fraction(n) / (a + acc)
    return acc


def convergents(seq: Union[DigitSequence, Sequence[int]], params: NcfParams) -> list:
    """Successive values of the digit prefixes, via the recurrence
    p_k = a_k p_{k-1} + N p_{k-2}, q_k = a_k q_{k-1} + N q_{k-2}."""
    ds = tuple(seq)
    if not ds:
        raise ValueError("cannot take convergents of an empty digit sequence")
    if any(a < 1 for a in ds):
        raise ValueError("all digits must be >= 1")
    n = params.n_param
    p_prev2, p_prev = 1, 0
    q_prev2, q_prev = 0, 1
    out = []
    for a in ds:
        p = a * p_prev + n * p_prev2
        q = a * q_prev + n * q_prev2
        out.append(Fraction(p, q))
        p_prev2, p_prev = p_prev, p
        q_prev2, q_prev = q_prev, q
    return out


def fixed_point(params: NcfParams) -> float:
    """The attracting point x* = (-N + sqrt(N^2 + 4N))/2 of x -> N/(x+N).

    Satisfies N/x* = x* + N, so the map fixes it: T(x*) = x*.
    """
    n = params.n_param
    return (-n + math.sqrt(n * n + 4 * n)) / 2

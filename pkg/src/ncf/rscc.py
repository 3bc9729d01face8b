"""Random systems with complete connections (place-dependent IFS).

A system is a state interval W, a countable event alphabet, a transition
function u(w, x) and a place-dependent probability P(w, x) with
sum_x P(w, x) = 1.  Instances provided here:

* the N-continued-fraction system on [0,1] with events i >= N,
  u(x, i) = N/(x+i) and P(x, i) = (x+N)/((x+i)(x+i+1))
  (N = 1 is the classical regular-continued-fraction system);
* a two-state Mealy machine with alphabet {1, 2}, u(i, j) = j and
  transition probabilities parameterized by (alpha, beta).

On top of the instances: path probabilities, one- and k-step state kernels,
Cesaro kernel averages, contraction-coefficient estimation, the
support-shrinking orbit witness, shifted path laws, and the stationary path
law computed by quadrature against the invariant measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .core import NcfParams, fixed_point
from .errors import BudgetExceededError, charge
from .measure import GaussMeasure
from . import transfer


@dataclass(frozen=True)
class RsccSystem:
    """State interval, countable events, transition u, probabilities P.

    For finite alphabets `events` lists them and `states` lists the (finite,
    real-embedded) state space.  For countable alphabets `events` is None,
    `first_event` starts the enumeration and `tail_mass(w, m)` gives the exact
    mass sum_{x >= m} P(w, x).  All callables accept numpy arrays in w.
    """

    name: str
    state_lo: float
    state_hi: float
    transition: Callable
    probability: Callable
    events: Optional[tuple] = None
    states: Optional[tuple] = None
    first_event: int = 0
    tail_mass: Optional[Callable] = None
    event_lipschitz: Optional[Callable] = None  # sup_w |du/dw| for events >= arg
    sample_event: Optional[Callable] = None     # inverse-CDF map (w, u01) -> event
    params: Optional[NcfParams] = None

    @property
    def finite(self) -> bool:
        return self.events is not None


class EventWord(tuple):
    """A finite string of events; concatenation is tuple addition."""

    def __new__(cls, letters=()):
        return super().__new__(cls, tuple(letters))


@dataclass(frozen=True)
class TailSet:
    """The event set {i : i >= m} of a countable alphabet."""

    m: int


@dataclass(frozen=True)
class MealySystem:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise ValueError("alpha and beta must lie in [0, 1]")

    def kernel(self) -> np.ndarray:
        return np.array([[self.alpha, 1 - self.alpha],
                         [self.beta, 1 - self.beta]])

    def kernel_exact(self):
        """2x2 kernel over exact rationals (row sums exactly 1)."""
        a = Fraction(self.alpha)
        b = Fraction(self.beta)
        return [[a, 1 - a], [b, 1 - b]]

    def stationary(self) -> np.ndarray:
        denom = 1 - self.alpha + self.beta
        if denom == 0:
            raise ValueError("no unique stationary vector when alpha=1, beta=0")
        return np.array([self.beta / denom, (1 - self.alpha) / denom])


@dataclass(frozen=True)
class ContractionReport:
    r_values: tuple
    big_r: float
    certified: bool


@dataclass(frozen=True)
class RegularityReport:
    x_star: float
    starts: tuple
    dist_curves: tuple       # per start: array of |x_n - x*|, n = 1..n_max
    ratio_limit: float       # analytic per-step factor N/(x*+N)^2


class Estimate(NamedTuple):
    value: float
    se: float


# ---------------------------------------------------------------------------
# instances


def make_ncf_rscc(params: NcfParams) -> RsccSystem:
    n = params.n_param

    def u(w, i):
        return n / (np.asarray(w, dtype=float) + i)

    def p(w, i):
        w = np.asarray(w, dtype=float)
        return (w + n) / ((w + i) * (w + i + 1.0))

    def tail(w, m):
        w = np.asarray(w, dtype=float)
        return (w + n) / (w + m)

    def lip(i):
        return n / (i * i)

    def sample(w, u01):
        # smallest i with P(w, {N..i}) > u01, in closed form from the tail mass
        w = np.asarray(w, dtype=float)
        t = (w + n) / (1.0 - u01) - w - 1.0
        i = np.floor(t) + 1.0
        return np.maximum(i, float(n))

    return RsccSystem(
        name=f"ncf(N={n})", state_lo=0.0, state_hi=1.0,
        transition=u, probability=p,
        first_event=n, tail_mass=tail, event_lipschitz=lip,
        sample_event=sample, params=params,
    )


def make_mealy_rscc(alpha: float, beta: float) -> RsccSystem:
    m = MealySystem(alpha, beta)

    def u(w, j):
        return np.asarray(w, dtype=float) * 0.0 + j

    def p(w, j):
        w = np.asarray(w, dtype=float)
        row1 = m.alpha if j == 1 else 1 - m.alpha
        row2 = m.beta if j == 1 else 1 - m.beta
        return np.where(w == 1.0, row1, row2)

    return RsccSystem(
        name=f"mealy(alpha={alpha}, beta={beta})",
        state_lo=1.0, state_hi=2.0,
        transition=u, probability=p,
        events=(1, 2), states=(1.0, 2.0),
        event_lipschitz=lambda i: 0.0,
    )


# ---------------------------------------------------------------------------
# path probabilities


def path_probability(sys: RsccSystem, w, word) -> float:
    """Product of one-step probabilities along the orbit of a word."""
    letters = tuple(word)
    if not letters:
        raise ValueError("path probability needs a non-empty word")
    prob = 1.0
    state = w
    for x in letters:
        prob = prob * sys.probability(state, x)
        state = sys.transition(state, x)
    return float(prob) if np.isscalar(w) else prob


def act(sys: RsccSystem, w, word):
    """Right action of a word on a state: w x1...xr."""
    state = w
    for x in tuple(word):
        state = sys.transition(state, x)
    return state


def event_set_probability(sys: RsccSystem, w, events: Union[Sequence[int], TailSet]) -> float:
    """P(w, A) for a finite event set or a tail set of the alphabet."""
    if isinstance(events, TailSet):
        if sys.tail_mass is None:
            raise ValueError("tail sets need a tail-mass function")
        return float(sys.tail_mass(w, events.m))
    return float(sum(sys.probability(w, x) for x in events))


# ---------------------------------------------------------------------------
# state kernels


def q_kernel_interval(sys: RsccSystem, x: float, u_end: float) -> float:
    """Q(x, [0, u_end)) for the continued-fraction system, in closed form.

    A branch i lands in [0, u_end) iff N/(x+i) < u_end iff i >= E where
    E = floor(N/u_end - x) + 1; the branch masses telescope, leaving
    (x+N)/(x+m) with m = max(E, N).
    """
    if sys.params is None:
        raise ValueError("q_kernel_interval needs the continued-fraction system")
    n = sys.params.n_param
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if not (0.0 < u_end <= 1.0):
        raise ValueError(f"u_end must lie in (0, 1], got {u_end}")
    e = math.floor(n / u_end - x) + 1
    m = max(e, n)
    return (x + n) / (x + m)


def q_kernel_interval_bruteforce(sys: RsccSystem, x: float, u_end: float,
                                 i_max: int = 20000) -> float:
    """Branch-by-branch sum with the exact tail remainder; the oracle for the
    closed form above."""
    if sys.params is None:
        raise ValueError("needs the continued-fraction system")
    n = sys.params.n_param
    i = np.arange(n, i_max + 1, dtype=float)
    inside = n / (x + i) < u_end
    total = float(np.sum(sys.probability(x, i)[inside]))
    # all branches beyond i_max land below u_end
    if n / (x + i_max + 1) >= u_end:
        raise ValueError("i_max too small for this (x, u_end)")
    return total + float(sys.tail_mass(x, i_max + 1))


def q_kernel(sys: RsccSystem, x: float, a: float, b: float) -> float:
    """Q(x, [a, b)) for the continued-fraction system, by additivity."""
    lo = q_kernel_interval(sys, x, a) if a > 0 else 0.0
    hi = q_kernel_interval(sys, x, b) if b > 0 else 0.0
    return hi - lo


def kernel_matrix(sys: RsccSystem) -> np.ndarray:
    """One-step state-to-state kernel of a finite system."""
    if not sys.finite or sys.states is None:
        raise ValueError("kernel_matrix needs a finite state space")
    states = sys.states
    k = np.zeros((len(states), len(states)))
    for a, w in enumerate(states):
        for x in sys.events:
            wn = float(sys.transition(w, x))
            b = states.index(wn)
            k[a, b] += float(sys.probability(w, x))
    return k


def _state_index(sys: RsccSystem, source) -> int:
    return sys.states.index(float(source))


def _target_indicator(sys: RsccSystem, target) -> np.ndarray:
    """Indicator vector of a collection of states of a finite system."""
    members = set(float(t) for t in target)
    return np.array([1.0 if s in members else 0.0 for s in sys.states])


def q_step(sys: RsccSystem, k: int, source: float, target,
           method: str = "auto", grid_m: int = 1024,
           n_paths: int = 100_000, rng: Optional[np.random.Generator] = None) -> float:
    """k-step kernel Q^(k)(source, target).

    Finite systems: exact matrix power.  The continued-fraction system:
    either grid recursion (the k-step kernel of an interval target is the
    transfer operator applied k-1 times to the one-step kernel) or seeded
    Monte Carlo path simulation; `target` is an (a, b) half-open interval.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if sys.finite:
        km = np.linalg.matrix_power(kernel_matrix(sys), k)
        row = km[_state_index(sys, source)]
        return float(row @ _target_indicator(sys, target))
    a, b = target
    if method in ("auto", "grid"):
        return _q_step_grid(sys, k, source, a, b, grid_m)
    if method == "mc":
        return q_step_mc(sys, k, source, a, b, n_paths, rng).value
    raise ValueError(f"unknown method {method!r}")


def _q_step_grid(sys: RsccSystem, k: int, source: float, a: float, b: float,
                 grid_m: int) -> float:
    charge(k * grid_m * transfer.default_branch_cutoff(sys.params), "q_step grid recursion")
    nodes = np.linspace(0.0, 1.0, grid_m + 1)
    g = transfer.GridFunction(np.array([q_kernel(sys, float(x), a, b) for x in nodes]))
    for _ in range(k - 1):
        g = transfer.apply_transfer(g, sys.params)
    return float(g(source))


def simulate_paths(sys: RsccSystem, source: float, steps: int, n_paths: int,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Terminal states of n_paths seeded chains run for `steps` steps."""
    if rng is None:
        rng = np.random.default_rng(0)
    if sys.sample_event is None:
        raise ValueError("system has no event sampler")
    charge(steps * n_paths, "path simulation")
    w = np.full(n_paths, float(source))
    for _ in range(steps):
        i = sys.sample_event(w, rng.random(n_paths))
        w = sys.transition(w, i)
    return w


def q_step_mc(sys: RsccSystem, k: int, source: float, a: float, b: float,
              n_paths: int = 100_000,
              rng: Optional[np.random.Generator] = None) -> Estimate:
    """Monte Carlo estimate of Q^(k)(source, [a, b)) with its standard error."""
    w = simulate_paths(sys, source, k, n_paths, rng)
    hits = ((w >= a) & (w < b)).astype(float)
    p = float(np.mean(hits))
    se = math.sqrt(max(p * (1 - p), 1e-12) / n_paths)
    return Estimate(p, se)


def q_cesaro(sys: RsccSystem, n: int, source: float, target,
             grid_m: int = 1024) -> float:
    """(1/n) sum_{k<=n} Q^(k)(source, target).

    Finite systems use the eigendecomposition partial-sum closed form so that
    very large n is exact to rounding; the continued-fraction system averages
    grid recursions.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if sys.finite:
        kmat = kernel_matrix(sys)
        if n <= 64:
            acc = np.zeros_like(kmat)
            p = np.eye(kmat.shape[0])
            for _ in range(n):
                p = p @ kmat
                acc += p
            avg = acc / n
        else:
            vals, vecs = np.linalg.eig(kmat)
            inv = np.linalg.inv(vecs)
            sums = np.empty_like(vals)
            for j, lam in enumerate(vals):
                if abs(lam - 1.0) < 1e-12:
                    sums[j] = 1.0
                else:
                    sums[j] = lam * (1 - lam ** n) / ((1 - lam) * n)
            avg = (vecs * sums) @ inv
            avg = avg.real
        row = avg[_state_index(sys, source)]
        return float(row @ _target_indicator(sys, target))
    a, b = target
    charge(n * grid_m * transfer.default_branch_cutoff(sys.params), "q_cesaro grid recursion")
    nodes = np.linspace(0.0, 1.0, grid_m + 1)
    g = transfer.GridFunction(np.array([q_kernel(sys, float(x), a, b) for x in nodes]))
    acc = g.values.copy()
    for _ in range(n - 1):
        g = transfer.apply_transfer(g, sys.params)
        acc += g.values
    return float(transfer.GridFunction(acc / n)(source))


# ---------------------------------------------------------------------------
# contraction coefficients


def _pair_grid(sys: RsccSystem, grid: int, extra_pairs: int,
               rng: np.random.Generator):
    if sys.finite:
        states = np.array(sys.states)
        w1, w2 = np.meshgrid(states, states)
        mask = w1 != w2
        return w1[mask], w2[mask]
    nodes = np.linspace(sys.state_lo, sys.state_hi, grid + 1)
    w1 = nodes[:-1]
    w2 = nodes[1:]
    if extra_pairs > 0:
        a = rng.random(extra_pairs) * (sys.state_hi - sys.state_lo) + sys.state_lo
        b = rng.random(extra_pairs) * (sys.state_hi - sys.state_lo) + sys.state_lo
        keep = np.abs(a - b) > 1e-6
        w1 = np.concatenate([w1, a[keep]])
        w2 = np.concatenate([w2, b[keep]])
    return w1, w2


def _truncated_alphabet(sys: RsccSystem, k: int, event_cap: int):
    if sys.finite:
        return list(sys.events)
    width = max(2, int(round(event_cap ** (1.0 / k))))
    return list(range(sys.first_event, sys.first_event + width))


def _r_k_estimate(sys: RsccSystem, k: int, w1: np.ndarray, w2: np.ndarray,
                  event_cap: int) -> float:
    events = _truncated_alphabet(sys, k, event_cap)
    charge(len(events) ** k * w1.size * k, f"r_{k} word enumeration")
    denom = np.abs(w1 - w2)
    total = np.zeros_like(w1)
    one_step_bound = sys.event_lipschitz(sys.first_event) if sys.event_lipschitz else 1.0
    stack = [(0, w1, w2, np.ones_like(w1))]
    while stack:
        depth, a, b, prob = stack.pop()
        if depth == k:
            total += prob * np.abs(a - b) / denom
            continue
        if not sys.finite and sys.tail_mass is not None:
            # events beyond the truncation, bounded via the derivative envelope
            m = events[-1] + 1
            lip_tail = sys.event_lipschitz(m) if sys.event_lipschitz else 0.0
            remaining = one_step_bound ** (k - depth - 1)
            total += prob * sys.tail_mass(a, m) * (np.abs(a - b) / denom) * lip_tail * remaining
        for x in events:
            stack.append((depth + 1, sys.transition(a, x), sys.transition(b, x),
                          prob * sys.probability(a, x)))
    return float(np.max(total))


def _big_r_estimate(sys: RsccSystem, w1: np.ndarray, w2: np.ndarray,
                    n_events: int = 64) -> float:
    denom = np.abs(w1 - w2)
    best = 0.0
    if sys.finite:
        events = list(sys.events)
        for mask in range(1, 2 ** len(events)):
            subset = [x for j, x in enumerate(events) if mask >> j & 1]
            d = sum(sys.probability(w1, x) - sys.probability(w2, x) for x in subset)
            best = max(best, float(np.max(np.abs(d) / denom)))
        return best
    events = list(range(sys.first_event, sys.first_event + n_events))
    diffs = np.stack([sys.probability(w1, x) - sys.probability(w2, x) for x in events])
    # singletons and prefix sets {first..m}
    best = max(best, float(np.max(np.abs(diffs) / denom)))
    best = max(best, float(np.max(np.abs(np.cumsum(diffs, axis=0)) / denom)))
    if sys.tail_mass is not None:
        for m in events:
            d = sys.tail_mass(w1, m) - sys.tail_mass(w2, m)
            best = max(best, float(np.max(np.abs(d) / denom)))
    return best


def contraction_coefficients(sys: RsccSystem, k_max: int = 2, grid: int = 512,
                             event_cap: int = 2048, extra_pairs: int = 128,
                             margin: float = 1e-6,
                             rng: Optional[np.random.Generator] = None) -> ContractionReport:
    """Estimate the trajectory-contraction coefficients r_k and the event
    Lipschitz bound R over a grid of state pairs; certify when some r_k is
    bounded away from 1."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if rng is None:
        rng = np.random.default_rng(20240824)
    w1, w2 = _pair_grid(sys, grid, extra_pairs, rng)
    r_values = tuple(_r_k_estimate(sys, k, w1, w2, event_cap)
                     for k in range(1, k_max + 1))
    big_r = _big_r_estimate(sys, w1, w2)
    certified = (math.isfinite(r_values[0])
                 and any(r < 1.0 - margin for r in r_values)
                 and math.isfinite(big_r))
    return ContractionReport(r_values=r_values, big_r=big_r, certified=certified)


# ---------------------------------------------------------------------------
# regularity witness


def regularity_witness(sys: RsccSystem, starts: Sequence[float],
                       n_max: int) -> RegularityReport:
    """Follow the lowest-branch orbit x -> N/(x+N) from each start.

    Every step stays inside the support of the next kernel iterate, so the
    distance curve |x_n - x*| upper-bounds the distance from the supports to
    the attracting point; it contracts by N/(x*+N)^2 per step.
    """
    if sys.params is None:
        raise ValueError("regularity_witness needs the continued-fraction system")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    n = sys.params.n_param
    x_star = fixed_point(sys.params)
    curves = []
    for x0 in starts:
        x = float(x0)
        dist = np.empty(n_max)
        for j in range(n_max):
            x = n / (x + n)
            dist[j] = abs(x - x_star)
        curves.append(dist)
    ratio_limit = n / (x_star + n) ** 2
    return RegularityReport(x_star=x_star, starts=tuple(float(s) for s in starts),
                            dist_curves=tuple(curves), ratio_limit=ratio_limit)


# ---------------------------------------------------------------------------
# shifted path laws and their limit


def _word_set_probability(sys: RsccSystem, w, word_set) -> np.ndarray:
    """P_r(w, A) for a finite collection of words (or a one-letter tail set),
    vectorized over w."""
    if isinstance(word_set, TailSet):
        return np.asarray(sys.tail_mass(w, word_set.m), dtype=float)
    total = np.zeros_like(np.asarray(w, dtype=float))
    for word in word_set:
        total = total + path_probability(sys, w, word)
    return total


def shifted_path_probability(sys: RsccSystem, w: float, n: int, r: int, word_set,
                             n_paths: int = 100_000,
                             rng: Optional[np.random.Generator] = None) -> Estimate:
    """Probability that the events at positions n..n+r-1 form a word in the set.

    Exact via the kernel matrix for finite systems; for the
    continued-fraction system the n-1 burn-in steps are simulated and the
    final word probability is taken conditionally on the terminal state,
    which removes the last layer of sampling noise.
    """
    if n < 1 or r < 1:
        raise ValueError("n and r must be >= 1")
    if not isinstance(word_set, TailSet):
        word_set = [tuple(word) for word in word_set]
        if any(len(word) != r for word in word_set):
            raise ValueError("every word must have length r")
    elif r != 1:
        raise ValueError("tail sets are one-letter word sets")
    if sys.finite:
        km = np.linalg.matrix_power(kernel_matrix(sys), n - 1)
        dist = km[_state_index(sys, w)]
        states = np.array(sys.states)
        probs = _word_set_probability(sys, states, word_set)
        return Estimate(float(dist @ probs), 0.0)
    states = simulate_paths(sys, w, n - 1, n_paths, rng)
    vals = _word_set_probability(sys, states, word_set)
    mean = float(np.mean(vals))
    se = float(np.std(vals) / math.sqrt(n_paths))
    return Estimate(mean, se)


def limit_path_law(sys: RsccSystem, r: int, word_set) -> float:
    """Stationary law of r-letter words: quadrature of P_r(., A) against the
    invariant measure of the continued-fraction system."""
    if sys.params is None:
        raise ValueError("limit_path_law needs the continued-fraction system")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    gm = GaussMeasure(sys.params)

    def integrand(w):
        return float(_word_set_probability(sys, w, word_set)) * gm.density(w)

    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-12, limit=200)
    return val


# ---------------------------------------------------------------------------
# Mealy diagram export


def mealy_dot_export(m: MealySystem) -> str:
    """GraphViz digraph of the two-state machine; edges labeled event/probability."""
    probs = {(1, 1): m.alpha, (1, 2): 1 - m.alpha,
             (2, 1): m.beta, (2, 2): 1 - m.beta}
    lines = ["digraph mealy {", "  rankdir=LR;", "  node [shape=circle];"]
    for i in (1, 2):
        for k in (1, 2):
            j = k  # u(i, k) = k
            lines.append(f'  {i} -> {j} [label="{k}/{probs[(i, k)]!r}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

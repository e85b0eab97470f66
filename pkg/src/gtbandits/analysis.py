"""Instance complexity measures, regret, and theoretical regret-bound curves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BadArguments, BadParameters, OracleMismatch
from .graph import CliquePartition
from .rewards import TOL

DEFAULT_Q_GRID = tuple(np.linspace(0.0, 1.0, 21))


def _ceil(x: float) -> int:
    # guard against 0.5 * 12 / 3 landing a hair above an integer
    return max(1, math.ceil(x - 1e-9))


class ComplexityProfile:
    """Per-round increments of a set of curves, tabulated on demand.

    ``max_gamma[n - 1]`` is the largest increment mu_i(n+1) - mu_i(n) over arms
    and ``max_abs_gamma`` its magnitude counterpart. Tables grow as larger M
    are requested, so bound curves can be evaluated past the instance horizon.
    """

    def __init__(self, curves: Sequence, horizon: int):
        self.curves = tuple(curves)
        self.horizon = int(horizon)
        self.k = len(self.curves)
        self._size = 0
        self._extend(max(self.horizon + 1, 2))

    @classmethod
    def of(cls, instance) -> "ComplexityProfile":
        if isinstance(instance, ComplexityProfile):
            return instance
        return cls(instance.curves, instance.horizon)

    def _extend(self, size: int) -> None:
        if size <= self._size:
            return
        size = max(size, 2 * self._size)
        n = np.arange(size + 1)
        table = np.vstack([np.asarray(c(n), dtype=float) for c in self.curves])
        g = np.diff(table[:, 1:], axis=1)  # g[:, n-1] = gamma(n), n = 1..size-1
        self.mu0 = table[:, 0]
        self.mu1 = table[:, 1]
        self.max_gamma = g.max(axis=0)
        self.max_abs_gamma = np.abs(g).max(axis=0)
        self._size = size

    def gammas(self, M: int) -> np.ndarray:
        """max_i gamma_i(n) for n = 1..M-1."""
        self._extend(M)
        return self.max_gamma[:M - 1]

    def upsilon(self, M: int, q: float) -> float:
        if M < 1 or not 0 <= q <= 1:
            raise BadArguments(f"need M >= 1 and q in [0, 1], got M={M}, q={q}")
        g = self.gammas(M)
        if q == 0:
            return float(np.count_nonzero(g > TOL))
        return float(np.sum(np.power(np.maximum(g, 0.0), q)))

    def total_decrement(self, M: int, signed: bool = False) -> float:
        if M < 1:
            raise BadArguments(f"need M >= 1, got {M}")
        self._extend(M)
        if signed:
            return float(np.sum(self.max_gamma[:M - 1]))
        return float(np.sum(self.max_abs_gamma[:M - 1]))

    def max_variation_detail(self) -> tuple[float, str]:
        """Largest single-step change, and which candidate produced it.

        Candidates are the increments for n = 1..T, the step from n = 0 to 1,
        and the gap between each arm's value at n = 0 and the largest such value.
        """
        T = self.horizon
        self._extend(T + 1)
        steps = float(self.max_abs_gamma[:T].max()) if T >= 1 else 0.0
        first = float(np.abs(self.mu1 - self.mu0).max())
        conv = float((self.mu0.max() - self.mu0).max())
        best = max(steps, first, conv)
        if best == steps:
            return steps, "increments"
        if best == first:
            return first, "first-step"
        return conv, "initial-gap"

    def max_variation(self) -> float:
        return self.max_variation_detail()[0]


def upsilon(instance, M: int, q: float) -> float:
    """Sum over n < M of the largest increment across arms, raised to q.

    At q = 0 this counts rounds with a strictly positive largest increment.
    """
    return ComplexityProfile.of(instance).upsilon(M, q)


def total_decrement(instance, M: int, signed: bool = False) -> float:
    """Sum over n < M of the largest per-arm change magnitude (``signed`` keeps the raw max)."""
    return ComplexityProfile.of(instance).total_decrement(M, signed)


def max_variation(instance) -> float:
    return ComplexityProfile.of(instance).max_variation()


def regret(instance, run_or_value, oracle) -> float:
    """J* - J for a run result or a bare cumulative expected reward."""
    if oracle.horizon != instance.horizon or oracle.k != instance.k:
        raise OracleMismatch(f"oracle solved T={oracle.horizon}, k={oracle.k}; instance has "
                             f"T={instance.horizon}, k={instance.k}")
    fp = getattr(oracle, "fingerprint", None)
    if fp is not None and fp != instance.fingerprint():
        raise OracleMismatch("oracle was computed for a different instance")
    J = getattr(run_or_value, "J", run_or_value)
    return float(oracle.value) - float(J)


@dataclass
class BoundCurve:
    theorem: str
    constants_mode: str
    horizons: list
    values: list
    q_star: list
    params: dict = field(default_factory=dict)

    def rows(self) -> Iterable[tuple]:
        for T, q, v in zip(self.horizons, self.q_star, self.values):
            yield self.theorem, T, q, v, self.constants_mode


def _check_grid(horizons, q_grid=None):
    horizons = [int(T) for T in horizons]
    if not horizons or min(horizons) < 1:
        raise BadParameters("horizon grid must contain positive integers")
    if q_grid is not None:
        q_grid = [float(q) for q in q_grid]
        if not q_grid or min(q_grid) < 0 or max(q_grid) > 1:
            raise BadParameters("q grid must lie in [0, 1]")
    return horizons, q_grid


def _minimize_over_q(fn, q_grid):
    best_v, best_q = math.inf, None
    for q in q_grid:
        v = fn(q)
        if v < best_v:
            best_v, best_q = v, q
    return best_v, best_q


def bound_rising_stochastic(profile, partition: CliquePartition, epsilon: float, alpha: float, sigma: float,
                            horizons, q_grid=DEFAULT_Q_GRID, theorem: str = "rising-stochastic-block") -> BoundCurve:
    """Explicit-constant regret bound for the sliding-window optimistic policy on rising instances.

    ``partition`` is the true clique partition for block-diagonal graphs, or
    the connected components for general graphs. Arms alone in their block
    contribute through the singleton count.
    """
    if not 0 < epsilon < 0.5 or not alpha > 2 or sigma < 0:
        raise BadParameters("need epsilon in (0, 1/2), alpha > 2 and sigma >= 0")
    horizons, q_grid = _check_grid(horizons, q_grid)
    prof = ComplexityProfile.of(profile)
    k = partition.k
    singles = sum(1 for b in partition.blocks if len(b) == 1)
    big = [len(b) for b in partition.blocks if len(b) > 1]
    c_window = math.ceil(1 / (1 - 2 * epsilon))
    c_eps = math.ceil(1 / epsilon)
    values, qs = [], []
    for T in horizons:
        lnT = math.log(T)
        base = (1 + 2 * k / (alpha - 2) + 5 * k + k / epsilon
                + (3 * k / epsilon) * (2 * sigma * T) ** (2 / 3) * (10 * alpha * lnT) ** (1 / 3) + 2 * k)
        span = (1 - 2 * epsilon) * T
        harmonic = max(1.0, 1.0 + math.log(epsilon * T))

        def at(q):
            v = base
            if singles:
                v += singles * T ** q * c_window * prof.upsilon(_ceil(span / singles), q)
            e = 1 / (1 + q)
            inner = k * prof.upsilon(_ceil(span / k), q) ** e
            inner += sum(s * prof.upsilon(_ceil(span / s), q) ** e for s in big)
            v += T ** (2 * q * e) * harmonic ** (q * e) * c_eps * c_window * inner
            return v

        v, q = _minimize_over_q(at, q_grid)
        values.append(v)
        qs.append(q)
    params = {"epsilon": epsilon, "alpha": alpha, "sigma": sigma, "q_grid": list(q_grid),
              "partition": partition.one_based(), "singletons": singles}
    return BoundCurve(theorem, "explicit", horizons, values, qs, params)


def bound_rotting(profile, partition: CliquePartition, alpha: float, sigma: float, horizons,
                  theorem: str = "rotting-block") -> BoundCurve:
    """Explicit-constant regret bound for the windowed pessimistic policy on rotting block-diagonal instances.

    Each clique's pull count is replaced by its proportional share |C| T / k.
    """
    if alpha < 5 or sigma < 0:
        raise BadParameters("need alpha >= 5 and sigma >= 0")
    horizons, _ = _check_grid(horizons)
    prof = ComplexityProfile.of(profile)
    L = prof.max_variation()
    k = partition.k
    sizes = partition.sizes()
    values = []
    for T in horizons:
        lnT = math.log(T)
        V = prof.total_decrement(T)
        share = [s * T / k for s in sizes]
        good = (2 * k * sigma * math.sqrt(lnT) + L * sum(s * s for s in sizes)
                + 2 * sigma * sum(math.sqrt(s * n * lnT) for s, n in zip(sizes, share)))
        bad = 2 * k * L
        drift = (6 * k * V
                 + 4 * (8 * alpha * sigma) ** (2 / 3) * sum((V * s * n * n * lnT) ** (1 / 3) for s, n in zip(sizes, share))
                 + 2 * (2 * math.sqrt(2) * alpha * sigma) ** (1 / 3)
                 * sum((V * V * s * s * n * math.sqrt(lnT)) ** (1 / 3) for s, n in zip(sizes, share)))
        values.append(good + bad + drift)
    params = {"alpha": alpha, "sigma": sigma, "partition": partition.one_based(), "L": L}
    return BoundCurve(theorem, "explicit", horizons, values, [None] * len(horizons), params)


def bound_rising_deterministic(profile, partition: CliquePartition, horizons, q_grid=DEFAULT_Q_GRID,
                               theorem: str = "rising-deterministic-block") -> BoundCurve:
    """Order-level (unit constant) bound for the two-point extrapolation policies.

    The term for choosing among cliques disappears when there is a single
    clique, and the within-clique term only involves cliques with two or more arms.
    """
    horizons, q_grid = _check_grid(horizons, q_grid)
    prof = ComplexityProfile.of(profile)
    sizes = partition.sizes()
    values, qs = [], []
    for T in horizons:
        def at(q):
            v = 0.0
            if len(sizes) > 1:
                v += T ** q * sum(s * prof.upsilon(_ceil(T / s), q) for s in sizes)
            e = 1 / (1 + q)
            v += sum(s * T ** (q * e) * prof.upsilon(_ceil(T / s), q) ** e for s in sizes if s > 1)
            return v

        v, q = _minimize_over_q(at, q_grid)
        values.append(v)
        qs.append(q)
    params = {"q_grid": list(q_grid), "partition": partition.one_based()}
    return BoundCurve(theorem, "order", horizons, values, qs, params)

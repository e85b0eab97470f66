"""Reward estimators and confidence radii used by the learning policies.

All functions read a ``History`` and never modify it. ``t`` is always the
round about to be played, so the arm's statistics cover rounds 1..t-1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import History, internal_times_under
from .errors import InvariantViolation, NonDeterministicHistory
from .graph import CliquePartition

INF = math.inf


@dataclass(frozen=True)
class WindowConfig:
    """Noise scale, confidence exponent (delta_t = t**-alpha) and window fraction."""

    sigma: float
    alpha: float
    epsilon: Optional[float] = None

    def delta(self, t: int) -> float:
        return float(t) ** -self.alpha

    def log_inv_delta(self, t: int) -> float:
        return self.alpha * math.log(t)

    def window(self, n_pulls: int) -> int:
        return int(math.floor(self.epsilon * n_pulls))


def _extrapolate(obs: np.ndarray, times: np.ndarray, t: int) -> float:
    x_last, x_prev = obs[-1], obs[-2]
    t_last, t_prev = times[-1], times[-2]
    if t_last == t_prev:
        raise InvariantViolation(f"repeated internal time {t_last} between consecutive pulls")
    return float(x_last + (t - t_last) * (x_last - x_prev) / (t_last - t_prev))


def _require_deterministic(history: History) -> None:
    if history.sigma is not None and history.sigma > 0:
        raise NonDeterministicHistory("two-point extrapolation needs noiseless observations")


def det_estimate(history: History, arm: int, t: int) -> float:
    """Linear extrapolation to time t through the arm's last two observations.

    The slope uses internal times; +inf until the arm has two pulls.
    """
    _require_deterministic(history)
    if history.pulls[arm] < 2:
        return INF
    return _extrapolate(history.observations(arm), history.internal_times(arm), t)


def det_estimate_sub(history: History, arm: int, t: int, sub_partition: CliquePartition) -> float:
    """As ``det_estimate`` but with internal times counted under the partition's block matrix."""
    _require_deterministic(history)
    if history.pulls[arm] < 2:
        return INF
    sub = sub_partition.matrix()
    if history.aux_graph is not None and history.aux_graph == sub:
        times = history.aux_internal_times(arm)
    else:
        times = internal_times_under(history, arm, sub)
    return _extrapolate(history.observations(arm), times, t)


def _windowed(x: np.ndarray, t: int, h: int) -> float:
    n = len(x)
    recent = x[n - h:]
    older = x[n - 2 * h:n - h]
    lags = t - np.arange(n - h + 1, n + 1)
    return float(np.sum(recent + lags * (recent - older) / h) / h)


def windowed_estimate(history: History, arm: int, t: int, h: int) -> float:
    """Average over the last h pulls of the reward plus a slope-based projection to time t.

    The slope pairs each recent sample with the one h pulls earlier. Returns
    +inf when h is 0 or larger than half the pull count.
    """
    n = int(history.pulls[arm])
    if h < 1 or h > n // 2:
        return INF
    return _windowed(history.observations(arm), t, h)


def expected_windowed_estimate(instance, history: History, arm: int, t: int, h: int) -> float:
    """``windowed_estimate`` evaluated on the true means at the recorded internal times."""
    n = int(history.pulls[arm])
    if h < 1 or h > n // 2:
        return INF
    mu = instance.means[arm, history.internal_times(arm)]
    return _windowed(mu, t, h)


def beta_radius(config: WindowConfig, t: int, n_pulls: int, h: int) -> float:
    if h < 1:
        raise ValueError("window must be at least 1")
    return config.sigma * (t - n_pulls + h - 1) * math.sqrt(10.0 * config.log_inv_delta(t) / h ** 3)


def rotting_window_estimate(history: History, arm: int, t: int, h: int) -> float:
    """Mean of the h most recent rewards of ``arm``."""
    n = int(history.pulls[arm])
    if not 1 <= h <= n:
        raise ValueError(f"window {h} outside [1, {n}]")
    s = history.prefix_sums(arm)
    return float((s[n] - s[n - h]) / h)


def rotting_radius(config: WindowConfig, t: int, h: int) -> float:
    if h < 1:
        raise ValueError("window must be at least 1")
    return math.sqrt(2.0 * config.sigma ** 2 * (math.log(2.0) + config.log_inv_delta(t)) / h)


def rotting_index(history: History, arm: int, t: int, config: WindowConfig) -> float:
    """Smallest upper confidence value over all windows h = 1..N (+inf before the first pull)."""
    n = int(history.pulls[arm])
    if n == 0:
        return INF
    s = history.prefix_sums(arm)
    h = np.arange(1, n + 1)
    means = (s[n] - s[n - 1::-1]) / h
    if config.sigma == 0:
        return float(means.min())
    width = math.sqrt(2.0 * config.sigma ** 2 * (math.log(2.0) + config.log_inv_delta(t)))
    return float(np.min(means + width / np.sqrt(h)))

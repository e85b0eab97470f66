"""Simulation engine: trigger bookkeeping, episodes and sequence evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import HorizonExceeded, InvalidArm
from .graph import CliquePartition, ConnectivityMatrix


class History:
    """Everything that happened in one episode, indexed by round t = 1..T.

    Trigger counts follow the rule that a pull of arm a advances every arm j
    with adj[a, j] = 1, the pulled arm included. The internal time of a pull is
    the pulled arm's trigger count right after that pull.

    Per-arm arrays are preallocated to length T and exposed as read-only views
    trimmed to the current pull count.
    """

    def __init__(self, graph: ConnectivityMatrix, horizon: int, aux_graph: Optional[ConnectivityMatrix] = None,
                 sigma: Optional[float] = None):
        k = graph.k
        self.graph = graph
        self.k = k
        self.horizon = int(horizon)
        self.sigma = sigma
        self.t = 0
        self.actions: list[int] = []
        self.rewards: list[float] = []
        self.pulls = np.zeros(k, dtype=np.int64)
        self.triggers = np.zeros(k, dtype=np.int64)
        self._adj = graph.adj
        self._obs = np.zeros((k, self.horizon))
        self._csum = np.zeros((k, self.horizon + 1))
        self._pull_t = np.zeros((k, self.horizon), dtype=np.int64)
        self._internal = np.zeros((k, self.horizon), dtype=np.int64)
        self.aux_graph = aux_graph
        if aux_graph is not None:
            if aux_graph.k != k:
                raise ValueError("auxiliary matrix has a different arm count")
            self.aux_triggers = np.zeros(k, dtype=np.int64)
            self._aux_internal = np.zeros((k, self.horizon), dtype=np.int64)

    def record(self, arm: int, reward: float) -> None:
        if self.t >= self.horizon:
            raise HorizonExceeded(f"history already holds {self.horizon} rounds")
        if not 0 <= arm < self.k:
            raise InvalidArm(f"arm {arm} not in [0, {self.k})")
        self.t += 1
        self.actions.append(arm)
        self.rewards.append(reward)
        self.triggers += self._adj[arm]
        n = self.pulls[arm]
        self._obs[arm, n] = reward
        self._csum[arm, n + 1] = self._csum[arm, n] + reward
        self._pull_t[arm, n] = self.t
        self._internal[arm, n] = self.triggers[arm]
        if self.aux_graph is not None:
            self.aux_triggers += self.aux_graph.adj[arm]
            self._aux_internal[arm, n] = self.aux_triggers[arm]
        self.pulls[arm] = n + 1

    def observations(self, arm: int) -> np.ndarray:
        return self._obs[arm, :self.pulls[arm]]

    def prefix_sums(self, arm: int) -> np.ndarray:
        """Running sums of the arm's observations, starting with 0."""
        return self._csum[arm, :self.pulls[arm] + 1]

    def pull_times(self, arm: int) -> np.ndarray:
        return self._pull_t[arm, :self.pulls[arm]]

    def internal_times(self, arm: int) -> np.ndarray:
        return self._internal[arm, :self.pulls[arm]]

    def aux_internal_times(self, arm: int) -> np.ndarray:
        if self.aux_graph is None:
            raise ValueError("history has no auxiliary matrix")
        return self._aux_internal[arm, :self.pulls[arm]]

    def recompute_triggers(self, graph: Optional[ConnectivityMatrix] = None) -> np.ndarray:
        """Trigger counts summed from scratch over the action log."""
        adj = (graph or self.graph).adj
        out = np.zeros(self.k, dtype=np.int64)
        for a in self.actions:
            out += adj[a]
        return out


def record_pull(history: History, instance, arm: int, reward: float) -> History:
    history.record(arm, reward)
    return history


def clique_trigger_count(history: History, partition: CliquePartition, block) -> int:
    """Total pulls of the arms in ``block``."""
    block = tuple(sorted(block))
    if block not in partition.blocks:
        raise ValueError(f"{block} is not a block of the partition")
    return int(history.pulls[list(block)].sum())


def internal_times_under(history: History, arm: int, graph: ConnectivityMatrix) -> np.ndarray:
    """Internal times of ``arm``'s pulls had the triggers followed ``graph`` instead."""
    col = graph.adj[:, arm]
    counts = np.cumsum(col[np.asarray(history.actions, dtype=np.int64)]) if history.actions else np.zeros(0)
    return counts[history.pull_times(arm) - 1].astype(np.int64)


def evaluate_sequence(instance, actions: Sequence[int]) -> float:
    """Cumulative expected reward of a fixed action sequence."""
    return float(sequence_rewards(instance, actions).sum())


def sequence_rewards(instance, actions: Sequence[int]) -> np.ndarray:
    if len(actions) > instance.horizon:
        raise InvalidArm(f"sequence of length {len(actions)} exceeds horizon {instance.horizon}")
    adj = instance.graph.adj
    trig = np.zeros(instance.k, dtype=np.int64)
    out = np.zeros(len(actions))
    for t, a in enumerate(actions):
        if not 0 <= a < instance.k:
            raise InvalidArm(f"arm {a} not in [0, {instance.k})")
        trig += adj[a]
        out[t] = instance.means[a, trig[a]]
    return out


@dataclass
class RunResult:
    actions: np.ndarray
    rewards: np.ndarray
    expected_rewards: np.ndarray
    regret_curve: Optional[np.ndarray] = None
    final_regret: Optional[float] = None

    @property
    def J(self) -> float:
        return float(self.expected_rewards.sum())

    def cumulative_expected(self) -> np.ndarray:
        return np.cumsum(self.expected_rewards)


def run_episode(instance, policy, rng, oracle=None, history: Optional[History] = None) -> RunResult:
    """Play ``policy`` for T rounds and collect the trajectory.

    ``oracle`` may be an object with ``value`` and optionally ``prefix_values``
    (see ``policies.OracleSolution``) or a plain number. The policy only sees
    its own arm choices and rewards through ``update``.
    """
    T = instance.horizon
    k = instance.k
    hist = history if history is not None else History(instance.graph, T, sigma=instance.sigma)
    policy.reset(k, T, rng)
    noise = rng.standard_normal(T) * instance.sigma if instance.sigma > 0 else None
    means = instance.means
    expected = np.zeros(T)
    for t in range(1, T + 1):
        arm = policy.select(t)
        if not 0 <= arm < k:
            raise InvalidArm(f"policy {getattr(policy, 'name', policy)} chose arm {arm}")
        mu = means[arm, hist.triggers[arm] + 1]
        reward = mu + noise[t - 1] if noise is not None else mu
        hist.record(arm, reward)
        expected[t - 1] = mu
        policy.update(arm, reward)
    result = RunResult(np.asarray(hist.actions), np.asarray(hist.rewards), expected)
    if oracle is not None:
        value = float(getattr(oracle, "value", oracle))
        result.final_regret = value - result.J
        prefix = getattr(oracle, "prefix_values", None)
        if prefix is not None:
            result.regret_curve = np.asarray(prefix) - result.cumulative_expected()
    return result

"""Learning policies, comparison baselines and optimal-value oracles.

Every policy follows the same protocol: ``reset(k, horizon, rng)`` once per
episode, then ``select(t)`` and ``update(arm, reward)`` every round. Policies
only learn about their own pulls; the ones that need the connectivity matrix
receive it at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import History, evaluate_sequence, sequence_rewards
from .errors import BadParameters, InstanceTooLarge, NotBlockDiagonal, StochasticInstance
from .estimators import INF, WindowConfig, beta_radius, det_estimate, det_estimate_sub, rotting_index, windowed_estimate
from .graph import DEFAULT_EXACT_CAP, ConnectivityMatrix, block_diagonal_partition, maximal_sub_matrix
from .rewards import GtbInstance, Kind

TIE_TOL = 1e-12
DEFAULT_BRUTE_FORCE_CAP = 10 ** 7


def select_arm(indices, pulls) -> int:
    """Argmax of ``indices``; near-ties go to the least pulled arm, then the lowest index.

    Preferring the least pulled arm among +inf indices is what turns the
    initialization phases into round-robin sweeps.
    """
    idx = np.asarray(indices, dtype=float)
    top = idx.max()
    if math.isinf(top):
        cand = np.flatnonzero(idx == top)
    else:
        cand = np.flatnonzero(idx >= top - TIE_TOL * max(1.0, abs(top)))
    if len(cand) == 1:
        return int(cand[0])
    p = np.asarray(pulls)[cand]
    return int(cand[np.argmin(p)])


class Policy:
    name = "policy"

    def reset(self, k: int, horizon: int, rng=None) -> None:
        self.k = k
        self.horizon = horizon
        self.rng = rng

    def select(self, t: int) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float) -> None:
        pass


class _TrackingPolicy(Policy):
    """Keeps a private history of its own pulls."""

    def _tracking_graph(self, k):
        return ConnectivityMatrix.identity(k)

    def reset(self, k, horizon, rng=None):
        super().reset(k, horizon, rng)
        self.history = self._new_history(k, horizon)

    def _new_history(self, k, horizon):
        return History(self._tracking_graph(k), horizon)

    def update(self, arm, reward):
        self.history.record(arm, reward)


class DRBDUB(_TrackingPolicy):
    """Deterministic rising bandit on a block-diagonal graph.

    Pulls each arm twice, then follows the largest two-point extrapolation of
    each arm's reward to the current round.
    """

    name = "dr_bd_ub"

    def __init__(self, graph: ConnectivityMatrix, sigma: float = 0.0):
        if sigma > 0:
            raise StochasticInstance("requires noiseless rewards")
        if block_diagonal_partition(graph) is None:
            raise NotBlockDiagonal("connectivity matrix is not block-diagonal")
        self.graph = graph
        self.last_indices = None

    def _new_history(self, k, horizon):
        return History(self.graph, horizon, sigma=0.0)

    def select(self, t):
        h = self.history
        est = [det_estimate(h, i, t) for i in range(self.k)]
        self.last_indices = est
        return select_arm(est, h.pulls)


class DRGUB(_TrackingPolicy):
    """Deterministic rising bandit on an arbitrary graph.

    Works with the largest clique-structured matrix contained in the graph:
    the exact minimum clique partition when k <= exact_cap, a greedy one
    otherwise. ``partition_mode`` records which was used.
    """

    name = "dr_g_ub"

    def __init__(self, graph: ConnectivityMatrix, sigma: float = 0.0, exact_cap: int = DEFAULT_EXACT_CAP):
        if sigma > 0:
            raise StochasticInstance("requires noiseless rewards")
        self.graph = graph
        self.partition_mode = "exact" if graph.k <= exact_cap else "greedy"
        self.partition = maximal_sub_matrix(graph, self.partition_mode, cap=exact_cap)
        self._sub = self.partition.matrix()

    def _new_history(self, k, horizon):
        return History(self.graph, horizon, aux_graph=self._sub, sigma=0.0)

    def select(self, t):
        h = self.history
        est = [det_estimate_sub(h, i, t, self.partition) for i in range(self.k)]
        return select_arm(est, h.pulls)


class RSquareUCB(_TrackingPolicy):
    """Optimistic sliding-window policy for stochastic rising rewards.

    Uses the last floor(epsilon * N) samples of each arm, projects them forward
    with a slope estimate and adds a confidence width. Ignores the graph.
    """

    name = "r_square_ucb"

    def __init__(self, sigma: float, epsilon: float = 0.25, alpha: float = 3.0):
        if not 0 < epsilon < 0.5:
            raise BadParameters(f"epsilon must lie in (0, 1/2), got {epsilon}")
        if not alpha > 2:
            raise BadParameters(f"alpha must exceed 2, got {alpha}")
        if sigma < 0:
            raise BadParameters("sigma must be nonnegative")
        self.config = WindowConfig(sigma, alpha, epsilon)
        self.last_indices = None

    def index(self, arm, t):
        n = int(self.history.pulls[arm])
        h = self.config.window(n)
        if h == 0:
            return INF
        return windowed_estimate(self.history, arm, t, h) + beta_radius(self.config, t, n, h)

    def select(self, t):
        idx = [self.index(i, t) for i in range(self.k)]
        self.last_indices = idx
        return select_arm(idx, self.history.pulls)


class RawUCB(_TrackingPolicy):
    """Rotting-bandit policy: each arm's index is its most pessimistic windowed upper bound."""

    name = "raw_ucb"

    def __init__(self, sigma: float, alpha: float = 5.0):
        if not alpha >= 5:
            raise BadParameters(f"alpha must be at least 5, got {alpha}")
        if sigma < 0:
            raise BadParameters("sigma must be nonnegative")
        self.config = WindowConfig(sigma, alpha)
        self.last_indices = None

    def select(self, t):
        idx = [rotting_index(self.history, i, t, self.config) for i in range(self.k)]
        self.last_indices = idx
        return select_arm(idx, self.history.pulls)


class FixedArm(Policy):
    def __init__(self, arm: int):
        self.arm = arm
        self.name = f"fixed_arm_{arm + 1}"

    def select(self, t):
        return self.arm


class RoundRobin(Policy):
    name = "round_robin"

    def select(self, t):
        return (t - 1) % self.k


class UniformRandom(Policy):
    name = "uniform_random"

    def select(self, t):
        return int(self.rng.integers(self.k))


class Scripted(Policy):
    """Replays a fixed action sequence."""

    name = "scripted"

    def __init__(self, actions: Sequence[int], name: str = "scripted"):
        self.actions = list(actions)
        self.name = name

    def select(self, t):
        return self.actions[t - 1]


def baselines(k: int) -> list[Policy]:
    return [FixedArm(i) for i in range(k)] + [UniformRandom(), RoundRobin()]


def dr_bd_ub(instance_view, graph=None) -> DRBDUB:
    return DRBDUB(graph or instance_view.graph, instance_view.sigma)


def dr_g_ub(instance_view, graph=None, exact_cap: int = DEFAULT_EXACT_CAP) -> DRGUB:
    return DRGUB(graph or instance_view.graph, instance_view.sigma, exact_cap)


def r_square_ucb(config: WindowConfig) -> RSquareUCB:
    return RSquareUCB(config.sigma, config.epsilon if config.epsilon is not None else 0.25, config.alpha)


def raw_ucb(config: WindowConfig) -> RawUCB:
    return RawUCB(config.sigma, config.alpha)


# Oracles ---------------------------------------------------------------------


@dataclass
class OracleSolution:
    value: float
    method: str
    horizon: int
    k: int
    fingerprint: str
    actions: Optional[tuple] = None
    round_rewards: Optional[np.ndarray] = None
    clique: Optional[tuple] = None
    extra: dict = field(default_factory=dict)

    @property
    def prefix_values(self) -> Optional[np.ndarray]:
        if self.round_rewards is None:
            return None
        return np.cumsum(self.round_rewards)

    def policy(self) -> Scripted:
        if self.actions is None:
            raise ValueError("oracle has no action sequence")
        return Scripted(self.actions, name="oracle")


def _solution(instance, value, method, actions=None, **kw) -> OracleSolution:
    rewards = sequence_rewards(instance, actions) if actions is not None else None
    return OracleSolution(float(value), method, instance.horizon, instance.k, instance.fingerprint(),
                          tuple(int(a) for a in actions) if actions is not None else None, rewards, **kw)


def _require_blocks(instance):
    part = block_diagonal_partition(instance.graph)
    if part is None:
        raise NotBlockDiagonal("closed-form oracle needs a block-diagonal connectivity matrix")
    return part


def oracle_rising_block(instance: GtbInstance) -> OracleSolution:
    """Commit to the clique with the largest sum over rounds of its best member's mean.

    Inside a clique every pull advances all members, so the member pulled at
    round t earns its mean at t.
    """
    part = _require_blocks(instance)
    T = instance.horizon
    best, best_score = None, -INF
    for block in part.blocks:
        score = float(instance.means[list(block), 1:T + 1].max(axis=0).sum())
        if score > best_score:
            best, best_score = block, score
    sub = instance.means[list(best), 1:T + 1]
    actions = [best[int(j)] for j in sub.argmax(axis=0)]
    sol = _solution(instance, best_score, "closed-form-rising", actions, clique=best)
    sol.extra["sequence_value"] = float(sol.round_rewards.sum())
    return sol


def oracle_rotting_block(instance: GtbInstance) -> OracleSolution:
    """Greedy on the next-pull mean; cross-checked against per-clique sums of best means."""
    part = _require_blocks(instance)
    T = instance.horizon
    means = instance.means
    adj = instance.graph.adj
    trig = np.zeros(instance.k, dtype=np.int64)
    actions = []
    for _ in range(T):
        nxt = means[np.arange(instance.k), trig + 1]
        a = int(np.argmax(nxt))
        actions.append(a)
        trig += adj[a]
    counts = np.bincount(actions, minlength=instance.k)
    per_clique = 0.0
    for block in part.blocks:
        n_c = int(counts[list(block)].sum())
        if n_c:
            per_clique += float(means[list(block), 1:n_c + 1].max(axis=0).sum())
    sol = _solution(instance, 0.0, "closed-form-rotting", actions)
    sol.value = float(sol.round_rewards.sum())
    sol.extra["per_clique_value"] = per_clique
    sol.extra["clique_pulls"] = {block: int(counts[list(block)].sum()) for block in part.blocks}
    return sol


def oracle_brute_force(instance: GtbInstance, cap: int = DEFAULT_BRUTE_FORCE_CAP) -> OracleSolution:
    """Exact optimum over all k**T sequences with a simple branch-and-bound."""
    k, T = instance.k, instance.horizon
    if k ** T > cap:
        raise InstanceTooLarge(k ** T, cap)
    means = instance.means.tolist()
    rows = [list(np.flatnonzero(instance.graph.adj[a])) for a in range(k)]
    top = float(instance.means[:, 1:T + 1].max())
    trig = [0] * k
    seq = [0] * T
    best_val = -INF
    best_seq = None

    def search(t, acc):
        nonlocal best_val, best_seq
        if t == T:
            if acc > best_val:
                best_val, best_seq = acc, list(seq)
            return
        if acc + (T - t) * top <= best_val:
            return
        for a in range(k):
            for j in rows[a]:
                trig[j] += 1
            seq[t] = a
            search(t + 1, acc + means[a][trig[a]])
            for j in rows[a]:
                trig[j] -= 1

    search(0, 0.0)
    return _solution(instance, best_val, "brute-force", best_seq)


def solve_oracle(instance: GtbInstance, mode: str = "auto", cap: int = DEFAULT_BRUTE_FORCE_CAP) -> OracleSolution:
    """Pick the matching oracle: closed form on block-diagonal graphs, exhaustive search otherwise."""
    if mode == "brute-force":
        return oracle_brute_force(instance, cap)
    blocky = block_diagonal_partition(instance.graph) is not None
    if mode == "closed-form" or blocky:
        if instance.kind is Kind.RISING:
            return oracle_rising_block(instance)
        return oracle_rotting_block(instance)
    if mode != "auto":
        raise ValueError(f"unknown oracle mode {mode!r}")
    return oracle_brute_force(instance, cap)


def lower_bound_pair_solutions(nu: GtbInstance, nu_prime: GtbInstance) -> tuple[OracleSolution, OracleSolution]:
    """Optimal plays for the two lower-bound instances at any even horizon.

    Alternating the two side arms collects 2/3 per round on the first instance;
    always pulling the hub arm collects 1 per round on the second.
    """
    T = nu.horizon
    alt = [1 + (t % 2) for t in range(T)]
    hub = [0] * T
    return (_solution(nu, evaluate_sequence(nu, alt), "known-construction", alt),
            _solution(nu_prime, evaluate_sequence(nu_prime, hub), "known-construction", hub))

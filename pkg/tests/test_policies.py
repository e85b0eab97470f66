import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gtbandits.dynamics import History, evaluate_sequence, run_episode
from gtbandits.errors import BadParameters, InstanceTooLarge, NotBlockDiagonal, StochasticInstance
from gtbandits.graph import CliquePartition, ConnectivityMatrix
from gtbandits.policies import (DRBDUB, DRGUB, FixedArm, RawUCB, RoundRobin, RSquareUCB, UniformRandom,
                                baselines, oracle_brute_force, oracle_rising_block, oracle_rotting_block,
                                select_arm, solve_oracle)
from gtbandits.rewards import (Constant, ExponentialDecay, ExponentialRise, GtbInstance, Kind, RandomInstanceSpec,
                               SaturatingLinear, StepDown, random_instance, rising_clique_gadget,
                               rotting_independent_set_gadget)

from oracles import exhaustive_optimum, min_clique_partition_size


def random_sizes(rng, k):
    cuts = sorted(rng.choice(np.arange(1, k), size=int(rng.integers(0, k)), replace=False)) if k > 1 else []
    edges = [0, *cuts, k]
    return [int(b - a) for a, b in zip(edges, edges[1:])]


def actions_of(instance, policy, seed=0):
    return [int(a) for a in run_episode(instance, policy, np.random.default_rng(seed)).actions]


def test_select_arm_ties():
    assert select_arm([1.0, 3.0, 2.0], [0, 0, 0]) == 1
    assert select_arm([math.inf, math.inf], [3, 2]) == 1
    assert select_arm([0.5, 0.5, 0.5], [2, 1, 1]) == 1
    assert select_arm([0.5, 0.5 + 1e-15], [0, 0]) == 0


def test_dr_bd_ub_hand_trace():
    inst = GtbInstance([SaturatingLinear(0.1, 1.0), Constant(0.45)], ConnectivityMatrix.identity(2), 8)
    assert actions_of(inst, DRBDUB(inst.graph)) == [0, 1, 0, 1, 0, 0, 0, 0]


def test_dr_bd_ub_restless_matches_greedy_on_current_means():
    curves = [SaturatingLinear(0.004, 0.9), Constant(0.3), SaturatingLinear(0.008, 0.61)]
    inst = GtbInstance(curves, ConnectivityMatrix.complete(3), 200)
    acts = actions_of(inst, DRBDUB(inst.graph))
    for t in range(7, 201):
        assert acts[t - 1] == int(np.argmax([c(t) for c in curves])), t


def test_dr_bd_ub_single_arm_and_errors():
    inst = GtbInstance([ExponentialRise(0.8, 0.7)], ConnectivityMatrix.identity(1), 10)
    assert actions_of(inst, DRBDUB(inst.graph)) == [0] * 10
    with pytest.raises(StochasticInstance):
        DRBDUB(ConnectivityMatrix.identity(2), sigma=0.1)
    with pytest.raises(NotBlockDiagonal):
        DRBDUB(ConnectivityMatrix.from_edges(3, [(0, 1), (1, 2)]))
    with pytest.raises(StochasticInstance):
        DRGUB(ConnectivityMatrix.identity(2), sigma=0.1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_dr_g_ub_matches_dr_bd_ub_on_block_graphs(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 6))
    spec = RandomInstanceSpec(Kind.RISING, k, 40, ["exponential_rise", "saturating_linear", "constant"],
                              blocks=random_sizes(rng, k))
    inst = random_instance(spec, rng)
    assert actions_of(inst, DRGUB(inst.graph)) == actions_of(inst, DRBDUB(inst.graph))


def test_dr_g_ub_partitions():
    path = ConnectivityMatrix.from_edges(3, [(0, 1), (1, 2)])
    pol = DRGUB(path)
    assert pol.partition == CliquePartition(((0, 1), (2,)))
    assert len(pol.partition.blocks) == min_clique_partition_size(path.adj.tolist())
    assert pol.partition_mode == "exact"
    assert DRGUB(ConnectivityMatrix.complete(4)).partition.blocks == ((0, 1, 2, 3),)
    assert DRGUB(ConnectivityMatrix.identity(12), exact_cap=10).partition_mode == "greedy"
    inst = GtbInstance([ExponentialRise(0.9, 0.9), ExponentialRise(0.8, 0.7), Constant(0.5)], path, 30)
    acts = actions_of(inst, pol)
    assert len(acts) == 30 and set(acts) <= {0, 1, 2}


def test_r_square_ucb_opening_is_round_robin():
    for sigma in (0.0, 0.3):
        inst = GtbInstance([ExponentialRise(0.9, 0.9), Constant(0.5), ExponentialRise(0.7, 0.5)],
                           ConnectivityMatrix.identity(3), 40, sigma=sigma)
        acts = actions_of(inst, RSquareUCB(sigma, 0.25, 3.0), seed=5)
        assert acts[:12] == [0, 1, 2] * 4


def test_r_square_ucb_constant_convergence_and_symmetry():
    inst = GtbInstance([Constant(0.3), Constant(0.6), Constant(0.5)], ConnectivityMatrix.identity(3), 300)
    acts = actions_of(inst, RSquareUCB(0.0))
    assert acts[12:] == [1] * (300 - 12)
    twins = GtbInstance([Constant(0.4), Constant(0.4)], ConnectivityMatrix.identity(2), 101)
    acts = actions_of(twins, RSquareUCB(0.0))
    counts = np.cumsum(np.eye(2)[acts], axis=0)
    assert np.abs(counts[:, 0] - counts[:, 1]).max() <= 1


def test_r_square_ucb_parameters():
    for kw in ({"epsilon": 0.5}, {"epsilon": 0.0}, {"alpha": 2.0}):
        with pytest.raises(BadParameters):
            RSquareUCB(0.1, **kw)
    with pytest.raises(BadParameters):
        RSquareUCB(-1.0)


def test_r_square_ucb_ignores_the_graph():
    curves = [ExponentialRise(0.9, 0.95), ExponentialRise(0.6, 0.8)]
    a = GtbInstance(curves, ConnectivityMatrix.identity(2), 60, sigma=0.2)
    b = GtbInstance([ExponentialRise(0.9, 0.95), ExponentialRise(0.6, 0.8)], ConnectivityMatrix.identity(2), 60, sigma=0.2)
    assert actions_of(a, RSquareUCB(0.2), 9) == actions_of(b, RSquareUCB(0.2), 9)


def test_r_square_ucb_optimism_monitor():
    # with noise the selected index should rarely fall below the best arm's current mean
    inst = GtbInstance([ExponentialRise(0.9, 0.98), ExponentialRise(0.7, 0.9), Constant(0.5)],
                       ConnectivityMatrix.identity(3), 600, sigma=0.2)
    misses = rounds = 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        pol = RSquareUCB(0.2)
        pol.reset(3, inst.horizon, rng)
        env = History(inst.graph, inst.horizon)
        for t in range(1, inst.horizon + 1):
            a = pol.select(t)
            if all(math.isfinite(x) for x in pol.last_indices):
                rounds += 1
                best_now = max(inst.means[i, env.triggers[i]] for i in range(3))
                misses += pol.last_indices[a] < best_now
            r = inst.means[a, env.triggers[a] + 1] + 0.2 * rng.standard_normal()
            env.record(a, r)
            pol.update(a, r)
    assert rounds > 0 and misses / rounds <= 0.05


def test_raw_ucb_basics():
    one = GtbInstance([ExponentialDecay(0.9, 0.9)], ConnectivityMatrix.identity(1), 12, kind=Kind.ROTTING)
    assert actions_of(one, RawUCB(0.0)) == [0] * 12
    eq = GtbInstance([Constant(0.5)] * 3, ConnectivityMatrix.identity(3), 61, kind=Kind.ROTTING)
    acts = actions_of(eq, RawUCB(0.0))
    counts = np.cumsum(np.eye(3)[acts], axis=0)
    assert (counts.max(axis=1) - counts.min(axis=1)).max() <= 3
    with pytest.raises(BadParameters):
        RawUCB(0.1, alpha=4.0)


def test_raw_ucb_abandons_dead_arm():
    inst = GtbInstance([StepDown(1.0, 3), Constant(0.5)], ConnectivityMatrix.identity(2), 20, kind=Kind.ROTTING)
    acts = actions_of(inst, RawUCB(0.0))
    # arm 0 pays 1 for three pulls, then 0; the first 0 observed kills its index
    assert acts[:5] == [0, 1, 0, 0, 0]
    assert acts.count(0) == 4 and acts[5:] == [1] * 15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_raw_ucb_overestimates_without_noise(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    spec = RandomInstanceSpec(Kind.ROTTING, k, 50, ["step_down", "exponential_decay", "constant"],
                              blocks=random_sizes(rng, k))
    inst = random_instance(spec, rng)
    pol = RawUCB(0.0)
    pol.reset(k, inst.horizon, rng)
    env = History(inst.graph, inst.horizon)
    for t in range(1, inst.horizon + 1):
        a = pol.select(t)
        for i in range(k):
            if env.pulls[i]:
                assert pol.last_indices[i] >= inst.means[i, env.triggers[i] + 1] - 1e-12
        r = inst.means[a, env.triggers[a] + 1]
        env.record(a, r)
        pol.update(a, r)


def test_baselines():
    inst = GtbInstance([Constant(0.1), Constant(0.2), Constant(0.3)], ConnectivityMatrix.identity(3), 6)
    assert actions_of(inst, FixedArm(0)) == [0] * 6
    assert actions_of(inst, RoundRobin()) == [0, 1, 2, 0, 1, 2]
    a = actions_of(inst.with_horizon(30), UniformRandom(), seed=4)
    assert a == actions_of(inst.with_horizon(30), UniformRandom(), seed=4)
    assert a != actions_of(inst.with_horizon(30), UniformRandom(), seed=5)
    names = [p.name for p in baselines(3)]
    assert names == ["fixed_arm_1", "fixed_arm_2", "fixed_arm_3", "uniform_random", "round_robin"]


def test_oracle_rising_example():
    inst = GtbInstance([SaturatingLinear(0.1, 0.5), SaturatingLinear(0.05, 0.6), Constant(0.4)],
                       ConnectivityMatrix.from_blocks([[0, 1], [2]]), 5)
    sol = oracle_rising_block(inst)
    assert sol.value == pytest.approx(2.0) and sol.clique == (2,)
    assert inst.means[[0, 1], 1:6].max(axis=0).sum() == pytest.approx(1.5)
    assert exhaustive_optimum(inst) == pytest.approx(2.0)
    assert sol.extra["sequence_value"] == pytest.approx(sol.value)
    assert evaluate_sequence(inst, sol.actions) == pytest.approx(sol.value)


def test_oracle_rising_rested_and_restless():
    curves = [ExponentialRise(0.9, 0.3), SaturatingLinear(0.05, 0.7), Constant(0.45)]
    rested = GtbInstance(curves, ConnectivityMatrix.identity(3), 12)
    best = max(sum(c(n) for n in range(1, 13)) for c in curves)
    assert oracle_rising_block(rested).value == pytest.approx(best)
    restless = GtbInstance(curves, ConnectivityMatrix.complete(3), 12)
    assert oracle_rising_block(restless).value == pytest.approx(sum(max(c(t) for c in curves) for t in range(1, 13)))


def test_oracle_rotting_examples():
    inst = GtbInstance([StepDown(1.0, 2), Constant(0.6)], ConnectivityMatrix.identity(2), 4, kind=Kind.ROTTING)
    sol = oracle_rotting_block(inst)
    assert sol.value == pytest.approx(3.2) and sol.extra["per_clique_value"] == pytest.approx(3.2)
    assert exhaustive_optimum(inst) == pytest.approx(3.2)
    flat = GtbInstance([Constant(0.2), Constant(0.7), Constant(0.5)], ConnectivityMatrix.from_blocks([[0, 2], [1]]),
                       9, kind=Kind.ROTTING)
    assert oracle_rotting_block(flat).value == pytest.approx(9 * 0.7)
    with pytest.raises(NotBlockDiagonal):
        oracle_rotting_block(GtbInstance([Constant(0.1)] * 3, ConnectivityMatrix.from_edges(3, [(0, 1), (1, 2)]), 3,
                                         kind=Kind.ROTTING))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Kind.RISING, Kind.ROTTING]))
def test_brute_force_matches_exhaustive_search(seed, kind):
    rng = np.random.default_rng(seed)
    k, T = int(rng.integers(1, 4)), int(rng.integers(1, 7))
    fams = ["exponential_rise", "saturating_linear", "constant"] if kind is Kind.RISING else \
        ["step_down", "exponential_decay", "constant"]
    inst = random_instance(RandomInstanceSpec(kind, k, T, fams, edge_density=float(rng.uniform())), rng)
    sol = oracle_brute_force(inst)
    assert sol.value == pytest.approx(exhaustive_optimum(inst), abs=1e-12)
    assert evaluate_sequence(inst, sol.actions) == sol.value


def test_brute_force_cap_and_dispatch():
    inst = GtbInstance([Constant(0.1)] * 4, ConnectivityMatrix.identity(4), 12)
    with pytest.raises(InstanceTooLarge):
        oracle_brute_force(inst)
    assert solve_oracle(inst).method == "closed-form-rising"
    path = GtbInstance([Constant(0.1)] * 3, ConnectivityMatrix.from_edges(3, [(0, 1), (1, 2)]), 4)
    assert solve_oracle(path).method == "brute-force"


def test_gadget_optima():
    T = 3
    tri = rising_clique_gadget(3, [(0, 1), (1, 2), (0, 2)], T)
    target = sum(1 + t / 9 for t in range(1, 4))
    assert oracle_brute_force(tri).value == pytest.approx(target, abs=1e-12)
    path = rising_clique_gadget(3, [(0, 1), (1, 2)], T)
    assert oracle_brute_force(path).value < target - 1e-9
    empty = rotting_independent_set_gadget(3, [], 3)
    assert oracle_brute_force(empty).value == pytest.approx(3.0)
    complete = rotting_independent_set_gadget(3, [(0, 1), (1, 2), (0, 2)], 2)
    assert oracle_brute_force(complete).value < 2 - 1e-9

"""Experiment configuration: JSON parsing, instance construction and policy factory.

Arm indices in config files are 1-based.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .graph import ConnectivityMatrix, block_diagonal_partition
from .policies import (DRBDUB, DRGUB, FixedArm, RawUCB, RoundRobin, RSquareUCB, UniformRandom,
                       DEFAULT_BRUTE_FORCE_CAP)
from .rewards import (GtbInstance, Kind, RandomInstanceSpec, curve_from_spec, random_instance,
                      rising_clique_gadget, rotting_independent_set_gadget, rotting_lower_bound_pair)

ALGORITHMS = ("dr_bd_ub", "dr_g_ub", "r_square_ucb", "raw_ucb", "fixed_arm", "uniform_random",
              "round_robin", "oracle")
ORACLE_MODES = ("auto", "closed-form", "brute-force", "none")
INSTANCE_SEED_KEY = 2 ** 32 - 1


def load_json(path) -> dict:
    """Read a JSON document, reporting syntax errors with file, line and column."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None


def _pairs(raw, k):
    out = []
    for pair in raw:
        if len(pair) != 2:
            raise ConfigError(f"edge {pair} must have two endpoints")
        i, j = int(pair[0]) - 1, int(pair[1]) - 1
        if not (0 <= i < k and 0 <= j < k):
            raise ConfigError(f"edge {pair} refers to an arm outside 1..{k}")
        out.append((i, j))
    return out


def parse_graph(spec, k: int) -> ConnectivityMatrix:
    """"identity", "complete", {"edges": [[1, 2], ...]}, {"blocks": [[1, 2], [3]]} or {"matrix": [[...]]}."""
    if spec in (None, "identity"):
        return ConnectivityMatrix.identity(k)
    if spec == "complete":
        return ConnectivityMatrix.complete(k)
    if isinstance(spec, dict):
        if "edges" in spec:
            return ConnectivityMatrix.from_edges(k, _pairs(spec["edges"], k))
        if "blocks" in spec:
            blocks = [[int(i) - 1 for i in b] for b in spec["blocks"]]
            return ConnectivityMatrix.from_blocks(blocks, k)
        if "matrix" in spec:
            return ConnectivityMatrix(spec["matrix"])
    raise ConfigError(f"unrecognised graph spec {spec!r}")


def _construction(spec: dict) -> GtbInstance:
    kind = spec.get("type")
    T = int(spec.get("horizon", 0))
    if kind == "rotting-lb":
        nu, nu_prime = rotting_lower_bound_pair(T)
        return nu_prime if spec.get("variant", "nu") == "nu_prime" else nu
    n = int(spec["nodes"])
    edges = _pairs(spec.get("edges", []), n)
    if kind == "rising-clique":
        return rising_clique_gadget(n, edges, T)
    if kind == "rotting-independent-set":
        return rotting_independent_set_gadget(n, edges, T)
    raise ConfigError(f"unknown construction {kind!r}")


def build_instance(spec: dict, seed: int = 0) -> GtbInstance:
    if "construction" in spec:
        return _construction(spec["construction"])
    if "random" in spec:
        r = dict(spec["random"])
        r.setdefault("kind", spec.get("kind", "rising"))
        r.setdefault("horizon", spec.get("horizon"))
        r.setdefault("sigma", spec.get("sigma", 0.0))
        ranges = {fam: {p: tuple(v) for p, v in params.items()} for fam, params in r.pop("ranges", {}).items()}
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(INSTANCE_SEED_KEY,)))
        return random_instance(RandomInstanceSpec(ranges=ranges, **r), rng)
    try:
        kind = Kind(spec.get("kind", "rising"))
    except ValueError:
        raise ConfigError(f"kind must be 'rising' or 'rotting', got {spec.get('kind')!r}") from None
    if "horizon" not in spec:
        raise ConfigError("instance needs a horizon")
    graph_spec = spec.get("graph")
    if "arms" in spec:
        k = int(spec.get("k", len(spec["arms"])))
        curves = [curve_from_spec(c) for c in spec["arms"]]
    elif "block_curves" in spec:
        if not (isinstance(graph_spec, dict) and "blocks" in graph_spec):
            raise ConfigError("block_curves needs a graph given as blocks")
        blocks = graph_spec["blocks"]
        if len(blocks) != len(spec["block_curves"]):
            raise ConfigError("one curve per block expected")
        k = int(spec.get("k", sum(len(b) for b in blocks)))
        curves = [None] * k
        for block, c in zip(blocks, spec["block_curves"]):
            for i in block:
                curves[int(i) - 1] = curve_from_spec(c)
        if any(c is None for c in curves):
            raise ConfigError("blocks do not cover every arm")
    else:
        raise ConfigError("instance needs 'arms', 'block_curves', 'random' or 'construction'")
    graph = parse_graph(graph_spec, k)
    return GtbInstance(curves, graph, int(spec["horizon"]), float(spec.get("sigma", 0.0)), kind,
                       gadget=bool(spec.get("gadget", False)))


def instance_to_spec(instance: GtbInstance) -> dict:
    d = instance.describe()
    spec = {"kind": d["kind"], "horizon": d["horizon"], "sigma": d["sigma"], "k": d["k"],
            "graph": {"edges": d["edges"]}, "arms": d["arms"]}
    if instance.gadget:
        spec["gadget"] = True
    return spec


@dataclass
class AlgorithmSpec:
    name: str
    label: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    instance: dict
    algorithms: list
    replications: int = 1
    seed: int = 0
    output: Optional[str] = None
    horizons: Optional[list] = None
    bounds: dict = field(default_factory=dict)
    oracle: str = "auto"
    cap: int = DEFAULT_BRUTE_FORCE_CAP

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if "instance" not in raw:
            raise ConfigError("config needs an 'instance' section")
        algos, seen = [], {}
        for entry in raw.get("algorithms", []):
            if isinstance(entry, str):
                entry = {"name": entry}
            name = entry.get("name")
            if name not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {name!r}; expected one of {', '.join(ALGORITHMS)}")
            params = dict(entry.get("params", {}))
            label = entry.get("label") or (f"{name}_{params['arm']}" if name == "fixed_arm" and "arm" in params else name)
            if label in seen:
                seen[label] += 1
                label = f"{label}_{seen[label]}"
            else:
                seen[label] = 0
            algos.append(AlgorithmSpec(name, label, params))
        reps = int(raw.get("replications", 1))
        if reps < 1:
            raise ConfigError("replications must be at least 1")
        oracle = raw.get("oracle", "auto")
        if oracle not in ORACLE_MODES:
            raise ConfigError(f"oracle must be one of {ORACLE_MODES}")
        bounds = dict(raw.get("bounds", {}))
        horizons = bounds.pop("horizons", None) or raw.get("T_grid")
        return cls(raw["instance"], algos, reps, int(raw.get("seed", 0)), raw.get("output"), horizons,
                   bounds, oracle, int(raw.get("cap", DEFAULT_BRUTE_FORCE_CAP)))


def make_policy(spec: AlgorithmSpec, instance: GtbInstance, oracle=None):
    p = spec.params
    sigma = float(p.get("sigma", instance.sigma))
    name = spec.name
    if name == "dr_bd_ub":
        return DRBDUB(instance.graph, sigma)
    if name == "dr_g_ub":
        return DRGUB(instance.graph, sigma, int(p.get("exact_cap", 10)))
    if name == "r_square_ucb":
        return RSquareUCB(sigma, float(p.get("epsilon", 0.25)), float(p.get("alpha", 3.0)))
    if name == "raw_ucb":
        return RawUCB(sigma, float(p.get("alpha", 5.0)))
    if name == "fixed_arm":
        arm = int(p.get("arm", 1)) - 1
        if not 0 <= arm < instance.k:
            raise ConfigError(f"fixed_arm arm {arm + 1} outside 1..{instance.k}")
        return FixedArm(arm)
    if name == "uniform_random":
        return UniformRandom()
    if name == "round_robin":
        return RoundRobin()
    if name == "oracle":
        if oracle is None or oracle.actions is None:
            raise ConfigError("the oracle algorithm needs an oracle with an action sequence")
        return oracle.policy()
    raise ConfigError(f"unknown algorithm {name!r}")


def is_block_diagonal(instance: GtbInstance) -> bool:
    return block_diagonal_partition(instance.graph) is not None

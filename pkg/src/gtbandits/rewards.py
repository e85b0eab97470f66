"""Reward curves, instances, assumption checks and instance generators."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import GenerationFailed, IndexOutOfRange, InvalidInstance, OddHorizon
from .graph import ConnectivityMatrix

TOL = 1e-12


class Kind(str, Enum):
    RISING = "rising"
    ROTTING = "rotting"


# Curves are evaluated on integer trigger counts n >= 0. Every family accepts a
# scalar or an integer numpy array and returns the same shape.


@dataclass(frozen=True)
class Constant:
    c: float

    def __call__(self, n):
        return np.zeros(np.shape(n)) + self.c if np.ndim(n) else float(self.c)


@dataclass(frozen=True)
class SaturatingLinear:
    """min(slope * n, cap)"""

    slope: float
    cap: float

    def __call__(self, n):
        v = np.minimum(self.slope * np.asarray(n, dtype=float), self.cap)
        return v if np.ndim(n) else float(v)


@dataclass(frozen=True)
class ExponentialRise:
    """c * (1 - rho**n)"""

    c: float
    rho: float

    def __call__(self, n):
        v = self.c * (1.0 - np.power(self.rho, np.asarray(n, dtype=float)))
        return v if np.ndim(n) else float(v)


@dataclass(frozen=True)
class StepDown:
    """level while n <= cutoff, zero afterwards"""

    level: float
    cutoff: int

    def __call__(self, n):
        v = np.where(np.asarray(n) <= self.cutoff, float(self.level), 0.0)
        return v if np.ndim(n) else float(v)


@dataclass(frozen=True)
class ExponentialDecay:
    """c * rho**n"""

    c: float
    rho: float

    def __call__(self, n):
        v = self.c * np.power(self.rho, np.asarray(n, dtype=float))
        return v if np.ndim(n) else float(v)


@dataclass(frozen=True)
class Tabulated:
    """Explicit values for n = 1, 2, ...; held at the last value beyond the table.

    ``zero`` is the value at n = 0 and defaults to the first entry.
    """

    values: tuple
    zero: Optional[float] = None

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("tabulated curve needs at least one value")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __call__(self, n):
        table = np.array((self.values[0] if self.zero is None else self.zero,) + self.values)
        idx = np.minimum(np.asarray(n), len(self.values))
        v = table[idx]
        return v if np.ndim(n) else float(v)


CURVE_FAMILIES = {
    "constant": Constant,
    "saturating_linear": SaturatingLinear,
    "exponential_rise": ExponentialRise,
    "step_down": StepDown,
    "exponential_decay": ExponentialDecay,
    "tabulated": Tabulated,
}
_FAMILY_NAME = {cls: name for name, cls in CURVE_FAMILIES.items()}


def curve_to_spec(curve) -> dict:
    spec = {"family": _FAMILY_NAME[type(curve)]}
    for name in curve.__dataclass_fields__:
        val = getattr(curve, name)
        if val is None:
            continue
        spec[name] = list(val) if isinstance(val, tuple) else val
    return spec


def curve_from_spec(spec: dict):
    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in CURVE_FAMILIES:
        raise ValueError(f"unknown curve family {family!r}; expected one of {sorted(CURVE_FAMILIES)}")
    cls = CURVE_FAMILIES[family]
    if cls is Tabulated and "values" in spec:
        spec["values"] = tuple(spec["values"])
    try:
        return cls(**spec)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {exc}") from None


class GtbInstance:
    """Curves, connectivity matrix, horizon, noise scale and monotonicity kind.

    Means are tabulated for n = 0..T+1 on construction. ``gadget`` instances
    (hardness reductions) may leave the unit interval.
    """

    def __init__(self, curves: Sequence, graph: ConnectivityMatrix, horizon: int, sigma: float = 0.0,
                 kind: Kind | str = Kind.RISING, gadget: bool = False):
        self.curves = tuple(curves)
        self.graph = graph
        self.horizon = int(horizon)
        self.sigma = float(sigma)
        self.kind = Kind(kind)
        self.gadget = bool(gadget)
        if len(self.curves) != graph.k:
            raise InvalidInstance(f"{len(self.curves)} curves for a graph with {graph.k} arms")
        if self.horizon < 1:
            raise InvalidInstance("horizon must be positive")
        if not self.sigma >= 0:
            raise InvalidInstance("sigma must be nonnegative")
        n = np.arange(self.horizon + 2)
        table = np.vstack([np.asarray(c(n), dtype=float) for c in self.curves])
        if not np.isfinite(table).all():
            raise InvalidInstance("curve values must be finite")
        if not self.gadget:
            inner = table[:, 1:self.horizon + 1]
            if inner.min() < -TOL or inner.max() > 1 + TOL:
                arm, step = np.unravel_index(np.argmax((inner < -TOL) | (inner > 1 + TOL)), inner.shape)
                raise InvalidInstance(f"mean of arm {arm} at n={step + 1} is outside [0, 1]")
        table.setflags(write=False)
        self.means = table

    @property
    def k(self) -> int:
        return self.graph.k

    def mean(self, arm: int, n: int) -> float:
        if 0 <= n < self.means.shape[1]:
            return float(self.means[arm, n])
        return float(self.curves[arm](n))

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "horizon": self.horizon,
            "sigma": self.sigma,
            "gadget": self.gadget,
            "edges": [[i + 1, j + 1] for i, j in self.graph.edges()],
            "k": self.k,
            "arms": [curve_to_spec(c) for c in self.curves],
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_horizon(self, horizon: int) -> "GtbInstance":
        return GtbInstance(self.curves, self.graph, horizon, self.sigma, self.kind, self.gadget)

    def __repr__(self):
        return (f"GtbInstance(k={self.k}, T={self.horizon}, sigma={self.sigma}, "
                f"kind={self.kind.value}, edges={self.graph.edges()})")


def gamma(instance: GtbInstance, arm: int, n: int) -> float:
    """Increment mu(n+1) - mu(n) for 1 <= n <= T-1."""
    if not 0 <= arm < instance.k:
        raise IndexOutOfRange(f"arm {arm} not in [0, {instance.k})")
    if not 1 <= n <= instance.horizon - 1:
        raise IndexOutOfRange(f"n={n} not in [1, {instance.horizon - 1}]")
    return instance.mean(arm, n + 1) - instance.mean(arm, n)


@dataclass
class Violation:
    clause: str
    arm: int
    n: int
    gammas: tuple

    def __str__(self):
        vals = ", ".join(f"{g:.6g}" for g in self.gammas)
        return f"{self.clause} violated by arm {self.arm + 1} at n={self.n} (gamma: {vals})"


@dataclass
class AssumptionReport:
    kind: Kind
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.passed


def check_assumption(instance: GtbInstance, tol: float = TOL) -> AssumptionReport:
    """Scan increments over n in [1, T-1].

    Rising instances need nonnegative, nonincreasing increments; rotting
    instances need nonpositive ones. Reports the first violation per clause
    and arm.
    """
    report = AssumptionReport(instance.kind)
    T = instance.horizon
    for arm in range(instance.k):
        g = np.diff(instance.means[arm, 1:T + 1])  # g[n-1] = gamma(n)
        if instance.kind is Kind.RISING:
            bad = np.flatnonzero(g < -tol)
            if len(bad):
                n = int(bad[0]) + 1
                report.violations.append(Violation("monotonicity", arm, n, (float(g[n - 1]),)))
            bad = np.flatnonzero(g[1:] > g[:-1] + tol)
            if len(bad):
                n = int(bad[0]) + 2
                report.violations.append(Violation("concavity", arm, n, (float(g[n - 2]), float(g[n - 1]))))
        else:
            bad = np.flatnonzero(g > tol)
            if len(bad):
                n = int(bad[0]) + 1
                report.violations.append(Violation("monotonicity", arm, n, (float(g[n - 1]),)))
    return report


def sample_reward(instance: GtbInstance, arm: int, trigger_count: int, rng) -> float:
    mu = instance.mean(arm, trigger_count)
    if instance.sigma == 0:
        return mu
    return mu + instance.sigma * float(rng.standard_normal())


def rising_clique_gadget(n_nodes: int, edges, horizon: int) -> GtbInstance:
    """Rising instance whose optimum reveals whether the graph has a clique of size ``horizon``.

    Arm ``v * T + (s - 1)`` stands for node v paired with round s. Two arms are
    connected iff their nodes are adjacent in the input graph.
    """
    T = int(horizon)
    eta = 1.0 / T ** 2
    adj_nodes = np.eye(n_nodes, dtype=bool)
    for u, v in edges:
        adj_nodes[u, v] = adj_nodes[v, u] = True
    k = n_nodes * T
    adj = np.zeros((k, k), dtype=np.int64)
    for a in range(k):
        for b in range(k):
            u, v = divmod(a, T)[0], divmod(b, T)[0]
            if a == b or (u != v and adj_nodes[u, v]):
                adj[a, b] = 1
    curves = []
    for _ in range(n_nodes):
        for s in range(1, T + 1):
            cap = 1.0 + eta * s
            curves.append(SaturatingLinear(cap / s, cap))
    return GtbInstance(curves, ConnectivityMatrix(adj), T, 0.0, Kind.RISING, gadget=True)


def rotting_independent_set_gadget(n_nodes: int, edges, horizon: int) -> GtbInstance:
    """Rotting instance whose optimum equals T iff an independent set of size T exists."""
    T = int(horizon)
    curve = Tabulated(tuple(max(2.0 - n, 0.0) for n in range(1, max(T, 2) + 1)), zero=2.0)
    graph = ConnectivityMatrix.from_edges(n_nodes, edges)
    return GtbInstance([curve] * n_nodes, graph, T, 0.0, Kind.ROTTING, gadget=True)


LOWER_BOUND_EDGES = ((0, 1), (0, 2))


def rotting_lower_bound_pair(horizon: int) -> tuple[GtbInstance, GtbInstance]:
    """Two rotting instances on a non-block-diagonal graph that look identical for T/2 rounds."""
    T = int(horizon)
    if T < 4 or T % 2:
        raise OddHorizon(f"horizon must be even and at least 4, got {T}")
    graph = ConnectivityMatrix.from_edges(3, LOWER_BOUND_EDGES)
    side = StepDown(2.0 / 3.0, T // 2)
    nu = GtbInstance([StepDown(1.0, T // 2), side, side], graph, T, 0.0, Kind.ROTTING)
    nu_prime = GtbInstance([Constant(1.0), side, side], graph, T, 0.0, Kind.ROTTING)
    return nu, nu_prime


# Random generation -----------------------------------------------------------

DEFAULT_RANGES = {
    "constant": {"c": (0.0, 1.0)},
    "saturating_linear": {"slope": (0.01, 0.5), "cap": (0.2, 1.0)},
    "exponential_rise": {"c": (0.2, 1.0), "rho": (0.3, 0.95)},
    "step_down": {"level": (0.1, 1.0), "cutoff": (1, 10)},
    "exponential_decay": {"c": (0.2, 1.0), "rho": (0.5, 0.99)},
}


@dataclass
class RandomInstanceSpec:
    """Recipe for ``random_instance``.

    Exactly one of ``blocks`` (clique sizes), ``edge_density`` or ``graph``
    ("identity" / "complete") selects the connectivity. ``families`` is a list
    of curve family names sampled per arm.
    """

    kind: Kind | str
    k: int
    horizon: int
    families: Sequence[str]
    sigma: float = 0.0
    blocks: Optional[Sequence[int]] = None
    edge_density: Optional[float] = None
    graph: Optional[str] = None
    ranges: dict = field(default_factory=dict)
    max_retries: int = 100


def _sample_graph(spec: RandomInstanceSpec, rng) -> ConnectivityMatrix:
    if spec.blocks is not None:
        if sum(spec.blocks) != spec.k:
            raise ValueError("block sizes must sum to k")
        blocks, start = [], 0
        for size in spec.blocks:
            blocks.append(range(start, start + size))
            start += size
        return ConnectivityMatrix.from_blocks(blocks, spec.k)
    if spec.edge_density is not None:
        edges = [(i, j) for i in range(spec.k) for j in range(i + 1, spec.k) if rng.random() < spec.edge_density]
        return ConnectivityMatrix.from_edges(spec.k, edges)
    if spec.graph == "complete":
        return ConnectivityMatrix.complete(spec.k)
    return ConnectivityMatrix.identity(spec.k)


def _sample_curve(family: str, ranges: dict, rng):
    params = {}
    for name, (lo, hi) in {**DEFAULT_RANGES[family], **ranges.get(family, {})}.items():
        if isinstance(lo, int) and isinstance(hi, int):
            params[name] = int(rng.integers(lo, hi + 1))
        else:
            params[name] = float(rng.uniform(lo, hi))
    return CURVE_FAMILIES[family](**params)


def random_instance(spec: RandomInstanceSpec, rng) -> GtbInstance:
    graph = _sample_graph(spec, rng)
    for _ in range(spec.max_retries):
        fams = [spec.families[int(rng.integers(len(spec.families)))] for _ in range(spec.k)]
        curves = [_sample_curve(f, spec.ranges, rng) for f in fams]
        try:
            inst = GtbInstance(curves, graph, spec.horizon, spec.sigma, spec.kind)
        except InvalidInstance:
            continue
        if check_assumption(inst).passed:
            return inst
    raise GenerationFailed(f"no valid instance after {spec.max_retries} attempts")

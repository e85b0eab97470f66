"""Command-line entry point: validate, oracle, run, bounds, gadget."""
from __future__ import annotations

import argparse
import csv
import json
import math
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .analysis import ComplexityProfile, bound_rising_deterministic, bound_rising_stochastic, bound_rotting
from .config import ExperimentConfig, build_instance, instance_to_spec, load_json, make_policy
from .dynamics import run_episode
from .errors import BadParameters, ConfigError, GtbError, InstanceTooLarge
from .graph import DEFAULT_EXACT_CAP, block_diagonal_partition, maximal_sub_matrix, minimal_super_matrix
from .policies import lower_bound_pair_solutions, solve_oracle
from .rewards import Kind, check_assumption, rising_clique_gadget, rotting_independent_set_gadget, \
    rotting_lower_bound_pair

TRAJECTORY_COLUMNS = ("run_id", "algo", "t", "arm", "reward", "expected_reward", "cum_regret")
BOUND_COLUMNS = ("theorem", "T", "q_star", "value", "constants_mode")
GADGET_KINDS = ("rising-clique", "rotting-independent-set", "rotting-lb")


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _load(path, seed=None):
    cfg = ExperimentConfig.from_dict(load_json(path))
    if seed is not None:
        cfg.seed = seed
    return cfg


# validate --------------------------------------------------------------------


def cmd_validate(config_path, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = _load(config_path)
        instance = build_instance(cfg.instance, cfg.seed)
    except (GtbError, ValueError, KeyError, TypeError) as exc:
        print(f"fail: {type(exc).__name__}: {exc}", file=out)
        return 1
    report = check_assumption(instance)
    print(f"instance: k={instance.k} T={instance.horizon} kind={instance.kind.value} sigma={instance.sigma}", file=out)
    print("graph: ok", file=out)
    if report.passed:
        print("pass", file=out)
        return 0
    for v in report.violations:
        print(f"fail: {v}", file=out)
    return 1


# oracle ----------------------------------------------------------------------


def cmd_oracle(config_path, out_dir=None, cap=None, seed=None, out=None):
    out = out or sys.stdout
    cfg = _load(config_path, seed)
    instance = build_instance(cfg.instance, cfg.seed)
    mode = "auto" if cfg.oracle == "none" else cfg.oracle
    try:
        sol = solve_oracle(instance, mode, cap or cfg.cap)
    except InstanceTooLarge:
        sol = known_lower_bound_oracle(instance) if mode == "auto" else None
        if sol is None:
            raise
    print(f"J* = {fmt(sol.value)}", file=out)
    print(f"method = {sol.method}", file=out)
    if sol.clique is not None:
        print(f"C* = {{{', '.join(str(i + 1) for i in sol.clique)}}}", file=out)
    if out_dir is not None and sol.actions is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "oracle_sequence.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "arm", "expected_reward", "cum_value"))
            for t, (a, r, c) in enumerate(zip(sol.actions, sol.round_rewards, sol.prefix_values), start=1):
                w.writerow((t, a + 1, fmt(r), fmt(c)))
    return sol


# run -------------------------------------------------------------------------


def replication_rng(seed: int, algo_index: int, rep: int):
    """Independent stream per (master seed, algorithm, replication)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(algo_index, rep)))


def _run_one(task):
    instance, spec, oracle, seed, algo_index, rep, staging = task
    policy = make_policy(spec, instance, oracle)
    res = run_episode(instance, policy, replication_rng(seed, algo_index, rep), oracle)
    run_id = f"{spec.label}_{rep}"
    rel = Path("trajectories") / f"{run_id}.csv"
    cum = res.regret_curve
    T = instance.horizon
    with open(Path(staging) / rel, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for t in range(T):
            if cum is not None:
                c = cum[t]
            elif t == T - 1:
                c = res.final_regret
            else:
                c = None
            w.writerow((run_id, spec.label, t + 1, int(res.actions[t]) + 1, fmt(res.rewards[t]),
                        fmt(res.expected_rewards[t]), fmt(c)))
    return algo_index, rep, str(rel), res.J, res.final_regret


def _stats(values):
    if not values or any(v is None for v in values):
        return {"mean": None, "std": None, "ci95": None}
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if len(arr) < 2:
        return {"mean": mean, "std": 0.0, "ci95": [mean, mean]}
    std = float(arr.std(ddof=1))
    half = float(stats.t.ppf(0.975, len(arr) - 1) * std / math.sqrt(len(arr)))
    return {"mean": mean, "std": std, "ci95": [mean - half, mean + half]}


def known_lower_bound_oracle(instance):
    """Optimal play for either lower-bound instance, or None if ``instance`` is neither."""
    T = instance.horizon
    if instance.k != 3 or T < 4 or T % 2:
        return None
    pair = rotting_lower_bound_pair(T)
    for inst, sol in zip(pair, lower_bound_pair_solutions(*pair)):
        if inst.fingerprint() == instance.fingerprint():
            return sol
    return None


def _oracle_for_run(instance, cfg, cap):
    if cfg.oracle == "none":
        return None
    try:
        return solve_oracle(instance, cfg.oracle, cap)
    except InstanceTooLarge:
        if cfg.oracle == "auto":
            return known_lower_bound_oracle(instance)
        raise


def cmd_run(config_path, out_dir=None, seed=None, jobs=1, cap=None):
    cfg = _load(config_path, seed)
    out = Path(out_dir or cfg.output or "results")
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        instance = build_instance(cfg.instance, cfg.seed)
        oracle = _oracle_for_run(instance, cfg, cap or cfg.cap)
        (staging / "trajectories").mkdir()
        tasks = [(instance, spec, oracle, cfg.seed, a, r, str(staging))
                 for a, spec in enumerate(cfg.algorithms) for r in range(cfg.replications)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_one, tasks))
        else:
            results = [_run_one(t) for t in tasks]
        results.sort(key=lambda x: (x[0], x[1]))
        summary = {
            "version": __version__,
            "instance_fingerprint": instance.fingerprint(),
            "seed": cfg.seed,
            "replications": cfg.replications,
            "oracle": None if oracle is None else {"value": oracle.value, "method": oracle.method,
                                                   "clique": None if oracle.clique is None else [i + 1 for i in oracle.clique]},
            "algorithms": {},
            "bounds": None,
        }
        for a, spec in enumerate(cfg.algorithms):
            rows = [r for r in results if r[0] == a]
            entry = {"name": spec.name, "params": spec.params, "trajectories": [r[2] for r in rows],
                     "final_regret": [r[4] for r in rows], "J": [r[3] for r in rows]}
            entry.update(_stats([r[4] for r in rows]))
            summary["algorithms"][spec.label] = entry
        if cfg.horizons:
            write_bounds(compute_bounds(instance, cfg), staging / "bounds.csv")
            summary["bounds"] = "bounds.csv"
        with open(staging / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
        for item in staging.iterdir():
            dest = out / item.name
            if dest.is_dir():
                shutil.rmtree(dest)
            elif dest.exists():
                dest.unlink()
            shutil.move(str(item), str(dest))
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return summary


# bounds ----------------------------------------------------------------------

RISING_THEOREMS = ("rising-deterministic-block", "rising-stochastic-block",
                   "rising-deterministic-general", "rising-stochastic-general")
ROTTING_THEOREMS = ("rotting-block",)


def compute_bounds(instance, cfg: ExperimentConfig) -> list:
    horizons = cfg.horizons or sorted({max(2, int(round(x))) for x in np.geomspace(2, instance.horizon, 10)})
    opts = cfg.bounds
    requested = opts.get("theorems")
    allowed = RISING_THEOREMS if instance.kind is Kind.RISING else ROTTING_THEOREMS
    if requested:
        wrong = [t for t in requested if t not in allowed]
        if wrong:
            raise BadParameters(f"{', '.join(wrong)} does not apply to a {instance.kind.value} instance")
    profile = ComplexityProfile.of(instance)
    sigma = float(opts.get("sigma", instance.sigma))
    part = block_diagonal_partition(instance.graph)
    curves = []
    if instance.kind is Kind.ROTTING:
        if part is None:
            raise BadParameters("no regret bound covers rotting instances on non-block-diagonal graphs")
        curves.append(bound_rotting(profile, part, float(opts.get("alpha", 5.0)), sigma, horizons))
    else:
        eps = float(opts.get("epsilon", 0.25))
        alpha = float(opts.get("alpha", 3.0))
        q_grid = opts.get("q_grid", 21)
        q_grid = list(np.linspace(0, 1, q_grid)) if isinstance(q_grid, int) else q_grid
        if part is not None:
            curves.append(bound_rising_deterministic(profile, part, horizons, q_grid))
            curves.append(bound_rising_stochastic(profile, part, eps, alpha, sigma, horizons, q_grid))
        else:
            cap = int(opts.get("exact_cap", DEFAULT_EXACT_CAP))
            mode = "exact" if instance.k <= cap else "greedy"
            sub = maximal_sub_matrix(instance.graph, mode, cap)
            det = bound_rising_deterministic(profile, sub, horizons, q_grid, theorem="rising-deterministic-general")
            det.params["partition_mode"] = mode
            curves.append(det)
            curves.append(bound_rising_stochastic(profile, minimal_super_matrix(instance.graph), eps, alpha, sigma,
                                                  horizons, q_grid, theorem="rising-stochastic-general"))
    if requested:
        curves = [c for c in curves if c.theorem in requested]
    return curves


def write_bounds(curves, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BOUND_COLUMNS)
        for c in curves:
            for theorem, T, q, v, mode in c.rows():
                w.writerow((theorem, T, fmt(q), fmt(v), mode))


def cmd_bounds(config_path, out_dir=None, seed=None, out=None):
    out = out or sys.stdout
    cfg = _load(config_path, seed)
    instance = build_instance(cfg.instance, cfg.seed)
    curves = compute_bounds(instance, cfg)
    path = Path(out_dir or cfg.output or ".")
    path.mkdir(parents=True, exist_ok=True)
    write_bounds(curves, path / "bounds.csv")
    for c in curves:
        print(f"{c.theorem} ({c.constants_mode}): T={c.horizons[-1]} value={fmt(c.values[-1])}", file=out)
    return curves


# gadget ----------------------------------------------------------------------


def _read_graph_file(path):
    try:
        raw = load_json(path)
        n = int(raw["nodes"])
        edges = [(int(u) - 1, int(v) - 1) for u, v in raw.get("edges", [])]
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed graph file ({exc}); expected {{\"nodes\": n, \"edges\": [[u, v], ...]}}")
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ConfigError(f"{path}: bad edge ({u + 1}, {v + 1}) for {n} nodes")
    return n, edges


def cmd_gadget(kind, graph_file, horizon, out_dir=".") -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    T = int(horizon)
    if kind == "rotting-lb":
        nu, nu_prime = rotting_lower_bound_pair(T)
        items = [(f"rotting_lb_nu_T{T}.json", nu), (f"rotting_lb_nu_prime_T{T}.json", nu_prime)]
    elif kind in ("rising-clique", "rotting-independent-set"):
        if graph_file is None:
            raise ConfigError(f"{kind} needs --graph")
        n, edges = _read_graph_file(graph_file)
        build = rising_clique_gadget if kind == "rising-clique" else rotting_independent_set_gadget
        items = [(f"{kind.replace('-', '_')}_T{T}.json", build(n, edges, T))]
    else:
        raise ConfigError(f"unknown gadget kind {kind!r}; expected one of {GADGET_KINDS}")
    paths = []
    for name, inst in items:
        p = out / name
        with open(p, "w") as fh:
            json.dump({"instance": instance_to_spec(inst)}, fh, indent=2)
        paths.append(p)
    return paths


# entry point -----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="gtb", description="Graph-triggered bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        if out:
            p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the master seed")

    common(sub.add_parser("validate", help="check graph and reward assumptions"), out=False)
    p = sub.add_parser("oracle", help="optimal value and sequence")
    common(p)
    p.add_argument("--cap", type=int, help="largest k**T searched exhaustively")
    p = sub.add_parser("run", help="simulate the configured algorithms")
    common(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cap", type=int)
    common(sub.add_parser("bounds", help="theoretical regret-bound curves"))
    p = sub.add_parser("gadget", help="write a hardness or lower-bound construction as an instance file")
    p.add_argument("kind", choices=GADGET_KINDS)
    p.add_argument("--graph", help="JSON graph file with nodes and 1-based edges")
    p.add_argument("--horizon", "-T", type=int, required=True)
    p.add_argument("--out", default=".")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.config)
        if args.command == "oracle":
            cmd_oracle(args.config, args.out, args.cap, args.seed)
        elif args.command == "run":
            summary = cmd_run(args.config, args.out, args.seed, args.jobs, args.cap)
            for label, entry in summary["algorithms"].items():
                print(f"{label}: mean final regret {fmt(entry['mean'])}")
        elif args.command == "bounds":
            cmd_bounds(args.config, args.out, args.seed)
        elif args.command == "gadget":
            for p in cmd_gadget(args.kind, args.graph, args.horizon, args.out):
                print(p)
    except GtbError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

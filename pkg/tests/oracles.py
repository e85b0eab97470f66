"""Independent reference implementations used to check the library."""
from itertools import combinations, permutations, product

import numpy as np


def union_find_components(k, edges):
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return sorted(tuple(g) for g in groups.values())


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def min_clique_partition_size(adj):
    k = len(adj)
    best = k
    for part in set_partitions(range(k)):
        if len(part) < best and all(adj[i][j] for b in part for i, j in combinations(b, 2)):
            best = len(part)
    return best


def has_clique(n, edges, size):
    es = {frozenset(e) for e in edges}
    return any(all(frozenset(p) in es for p in combinations(c, 2)) for c in combinations(range(n), size))


def has_independent_set(n, edges, size):
    es = {frozenset(e) for e in edges}
    return any(all(frozenset(p) not in es for p in combinations(c, 2)) for c in combinations(range(n), size))


def nonisomorphic_graphs(n):
    """All graphs on n labelled nodes up to isomorphism, as edge lists."""
    pairs = list(combinations(range(n), 2))
    perms = list(permutations(range(n)))
    seen, out = set(), []
    for mask in range(1 << len(pairs)):
        edges = [p for b, p in enumerate(pairs) if mask >> b & 1]
        canon = min(tuple(sorted(tuple(sorted((pi[u], pi[v]))) for u, v in edges)) for pi in perms)
        if canon not in seen:
            seen.add(canon)
            out.append(list(canon))
    return out


def triggers_from_scratch(adj, actions):
    adj = np.asarray(adj)
    return np.array([sum(int(adj[a][i]) for a in actions) for i in range(len(adj))])


def exhaustive_optimum(instance):
    """Max cumulative expected reward over every action sequence (no pruning)."""
    k, T = instance.k, instance.horizon
    best = -np.inf
    for seq in product(range(k), repeat=T):
        trig = [0] * k
        total = 0.0
        for a in seq:
            for j in range(k):
                trig[j] += int(instance.graph.adj[a][j])
            total += float(instance.curves[a](trig[a]))
        best = max(best, total)
    return best

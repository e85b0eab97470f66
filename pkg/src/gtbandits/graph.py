"""Connectivity matrices and their clique structure.

Arms are 0-indexed everywhere in the Python API. Config files use 1-based
indices and are converted at the parsing boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import AsymmetricMatrix, InstanceTooLarge, MissingSelfLoop

DEFAULT_EXACT_CAP = 10


def validate(adj) -> None:
    """Raise if ``adj`` is not symmetric or lacks a unit diagonal."""
    a = np.asarray(adj)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    k = a.shape[0]
    for i in range(k):
        if a[i, i] != 1:
            raise MissingSelfLoop(i)
    bad = np.argwhere(a != a.T)
    if len(bad):
        i, j = (int(x) for x in bad[0])
        raise AsymmetricMatrix(i, j)
    if not np.isin(a, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")


class ConnectivityMatrix:
    """Symmetric 0/1 matrix with unit diagonal. Immutable after construction."""

    __slots__ = ("adj", "k")

    def __init__(self, adj):
        a = np.array(adj, dtype=np.int64)
        validate(a)
        a.setflags(write=False)
        self.adj = a
        self.k = a.shape[0]

    @classmethod
    def identity(cls, k: int) -> "ConnectivityMatrix":
        return cls(np.eye(k, dtype=np.int64))

    @classmethod
    def complete(cls, k: int) -> "ConnectivityMatrix":
        return cls(np.ones((k, k), dtype=np.int64))

    @classmethod
    def from_edges(cls, k: int, edges: Iterable[Sequence[int]]) -> "ConnectivityMatrix":
        """Undirected edges as 0-based index pairs; self-loops are added."""
        a = np.eye(k, dtype=np.int64)
        for i, j in edges:
            if not (0 <= i < k and 0 <= j < k):
                raise ValueError(f"edge ({i}, {j}) out of range for k={k}")
            a[i, j] = a[j, i] = 1
        return cls(a)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], k: Optional[int] = None):
        blocks = [list(b) for b in blocks]
        if k is None:
            k = sum(len(b) for b in blocks)
        a = np.zeros((k, k), dtype=np.int64)
        for b in blocks:
            for i in b:
                for j in b:
                    a[i, j] = 1
        return cls(a)

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.adj[i]) if j != i]

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in combinations(range(self.k), 2) if self.adj[i, j]]

    def degree(self, i: int) -> int:
        """Column sum, self-loop included."""
        return int(self.adj[:, i].sum())

    def is_clique(self, members: Iterable[int]) -> bool:
        m = list(members)
        return bool(self.adj[np.ix_(m, m)].all()) if m else True

    def __eq__(self, other):
        return isinstance(other, ConnectivityMatrix) and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.k, self.adj.tobytes()))

    def __repr__(self):
        return f"ConnectivityMatrix(k={self.k}, edges={self.edges()})"


@dataclass(frozen=True)
class CliquePartition:
    """Disjoint blocks covering range(k), stored in canonical order.

    Each block is a sorted tuple and blocks are ordered by their smallest member.
    """

    blocks: tuple

    def __post_init__(self):
        canon = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else -1))
        if any(len(b) == 0 for b in canon):
            raise ValueError("empty block in partition")
        members = [i for b in canon for i in b]
        if sorted(members) != list(range(len(members))):
            raise ValueError(f"blocks do not partition range(k): {canon}")
        object.__setattr__(self, "blocks", canon)

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    def block_of(self, arm: int) -> tuple:
        for b in self.blocks:
            if arm in b:
                return b
        raise KeyError(arm)

    def labels(self) -> tuple:
        """Block index of every arm; blocks are numbered in canonical order."""
        out = [0] * self.k
        for idx, b in enumerate(self.blocks):
            for i in b:
                out[i] = idx
        return tuple(out)

    def matrix(self) -> ConnectivityMatrix:
        return ConnectivityMatrix.from_blocks(self.blocks, self.k)

    def is_clique_feasible(self, g: ConnectivityMatrix) -> bool:
        return all(g.is_clique(b) for b in self.blocks)

    def covers_edges(self, g: ConnectivityMatrix) -> bool:
        lab = self.labels()
        return all(lab[i] == lab[j] for i, j in g.edges())

    def one_based(self) -> list[list[int]]:
        return [[i + 1 for i in b] for b in self.blocks]


def _components(g: ConnectivityMatrix) -> list[list[int]]:
    seen = [False] * g.k
    comps = []
    for s in range(g.k):
        if seen[s]:
            continue
        seen[s] = True
        stack, comp = [s], []
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in g.neighbors(v):
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(comp)
    return comps


def block_diagonal_partition(g: ConnectivityMatrix) -> Optional[CliquePartition]:
    """Clique partition if every connected component is complete, else None."""
    comps = _components(g)
    if all(g.is_clique(c) for c in comps):
        return CliquePartition(tuple(tuple(c) for c in comps))
    return None


def is_block_diagonal(g: ConnectivityMatrix) -> bool:
    return block_diagonal_partition(g) is not None


def find_open_triangle(g: ConnectivityMatrix) -> Optional[tuple[int, int, int]]:
    """First (v1, v2, v3) in lexicographic order with v1-v2, v2-v3 edges and no v1-v3 edge."""
    a = g.adj
    for v1 in range(g.k):
        for v2 in range(g.k):
            if v2 == v1 or not a[v1, v2]:
                continue
            for v3 in range(v1 + 1, g.k):
                if v3 != v2 and a[v2, v3] and not a[v1, v3]:
                    return (v1, v2, v3)
    return None


def minimal_super_matrix(g: ConnectivityMatrix) -> CliquePartition:
    """Coarsest-forced block structure containing every edge: the connected components."""
    return CliquePartition(tuple(tuple(c) for c in _components(g)))


def _exact_clique_partition(g: ConnectivityMatrix) -> CliquePartition:
    # Depth-first search over restricted growth strings. Existing blocks are
    # tried before opening a new one, so the first minimum found is also the
    # lexicographically smallest label vector among minima.
    k = g.k
    a = g.adj
    blocks: list[list[int]] = []
    best: list = [k + 1, None]

    def place(i):
        if len(blocks) >= best[0]:
            return
        if i == k:
            best[0] = len(blocks)
            best[1] = [list(b) for b in blocks]
            return
        for b in blocks:
            if all(a[i, j] for j in b):
                b.append(i)
                place(i + 1)
                b.pop()
        blocks.append([i])
        place(i + 1)
        blocks.pop()

    place(0)
    return CliquePartition(tuple(tuple(b) for b in best[1]))


def _greedy_clique_partition(g: ConnectivityMatrix) -> CliquePartition:
    remaining = set(range(g.k))
    blocks = []
    while remaining:
        deg = {v: sum(1 for w in g.neighbors(v) if w in remaining) for v in remaining}
        order = sorted(remaining, key=lambda v: (-deg[v], v))
        clique = []
        for v in order:
            if all(g.adj[v, u] for u in clique):
                clique.append(v)
        blocks.append(tuple(clique))
        remaining.difference_update(clique)
    return CliquePartition(tuple(blocks))


def maximal_sub_matrix(g: ConnectivityMatrix, mode: str = "exact", cap: int = DEFAULT_EXACT_CAP) -> CliquePartition:
    """Partition of the arms into cliques of ``g``.

    ``exact`` returns a minimum-size partition (ties broken by the smallest
    block-label vector) and refuses graphs with more than ``cap`` arms.
    ``greedy`` peels maximal cliques in highest-degree-first order.
    """
    if mode == "exact":
        if g.k > cap:
            raise InstanceTooLarge(g.k, cap)
        return _exact_clique_partition(g)
    if mode == "greedy":
        return _greedy_clique_partition(g)
    raise ValueError(f"unknown mode {mode!r}")


def degree_one_count(g: ConnectivityMatrix) -> int:
    """Number of arms connected only to themselves."""
    return int((g.adj.sum(axis=0) == 1).sum())

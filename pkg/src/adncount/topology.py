"""Network snapshots: the graph families fed to the counting protocol.

A ``Topology`` is one round's undirected simple graph over node indices
0..n-1 with node 0 as the leader. The star, path and G(n, p) families are
generated here; random trees come from the ``trees`` pipeline and are
converted with ``tree_to_topology``.
"""

from __future__ import annotations

import random

import numpy as np

from .trees import RootedTree


class Topology:
    """Immutable snapshot; caches the flat edge arrays used per round."""

    __slots__ = ("n", "edges", "neighbor_lists", "degrees", "max_degree",
                 "_coll_arrays", "_sym_arrays", "_retention")

    def __init__(self, n: int, edges):
        if n < 1:
            raise ValueError("n must be >= 1")
        normalized = []
        seen = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            normalized.append(key)
        normalized.sort()
        self.n = n
        self.edges = tuple(normalized)
        lists = [[] for _ in range(n)]
        for u, v in normalized:
            lists[u].append(v)
            lists[v].append(u)
        self.neighbor_lists = tuple(tuple(ns) for ns in lists)
        self.degrees = np.array([len(ns) for ns in lists], dtype=np.intp)
        self.max_degree = int(self.degrees.max()) if n else 0
        self._coll_arrays = None
        self._sym_arrays = None
        self._retention = {}

    def __eq__(self, other):
        return (
            isinstance(other, Topology)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Topology(n={self.n}, edges={len(self.edges)})"

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = [False] * self.n
        seen[0] = True
        stack = [0]
        count = 1
        while stack:
            v = stack.pop()
            for w in self.neighbor_lists[v]:
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    stack.append(w)
        return count == self.n

    def collection_arrays(self):
        """Directed (src, dst) pairs with non-leader senders only."""
        if self._coll_arrays is None:
            src, dst = [], []
            for u, v in self.edges:
                if u != 0:
                    src.append(u)
                    dst.append(v)
                if v != 0:
                    src.append(v)
                    dst.append(u)
            self._coll_arrays = (
                np.array(src, dtype=np.intp),
                np.array(dst, dtype=np.intp),
            )
        return self._coll_arrays

    def symmetric_arrays(self):
        """Directed (src, dst) pairs in both directions for every edge."""
        if self._sym_arrays is None:
            src, dst = [], []
            for u, v in self.edges:
                src.append(u)
                dst.append(v)
                src.append(v)
                dst.append(u)
            self._sym_arrays = (
                np.array(src, dtype=np.intp),
                np.array(dst, dtype=np.intp),
            )
        return self._sym_arrays

    def retention(self, delta: int):
        """Per-node kept fraction 1 - deg/(2*delta); the leader keeps 1."""
        retain = self._retention.get(delta)
        if retain is None:
            retain = 1.0 - self.degrees / (2.0 * delta)
            retain[0] = 1.0
            self._retention[delta] = retain
        return retain

    def to_json_dict(self) -> dict:
        return {"n": self.n, "leader": 0, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "Topology":
        if data.get("leader", 0) != 0:
            raise ValueError("leader must be node 0")
        return cls(data["n"], [tuple(e) for e in data["edges"]])


def star(n: int) -> Topology:
    """Leader adjacent to all n-1 others; no other edges."""
    if n < 2:
        raise ValueError("star requires n >= 2")
    return Topology(n, [(0, i) for i in range(1, n)])


def path(n: int) -> Topology:
    """Edges {i, i+1}; the leader sits at one endpoint."""
    if n < 2:
        raise ValueError("path requires n >= 2")
    return Topology(n, [(i, i + 1) for i in range(n - 1)])


def gnp(n: int, p: float, rng: random.Random) -> Topology:
    """Erdos-Renyi G(n, p); may be disconnected."""
    if n < 2:
        raise ValueError("gnp requires n >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    ]
    return Topology(n, edges)


def tree_to_topology(tree: RootedTree) -> Topology:
    """Relabel a rooted tree in preorder (root -> leader index 0)."""
    relabel = [0] * tree.nodes
    order = 0
    stack = [tree.root]
    edges = []
    while stack:
        v = stack.pop()
        relabel[v] = order
        order += 1
        # reversed so the leftmost child gets the next preorder index
        for c in reversed(tree.children[v]):
            stack.append(c)
    for v, kids in enumerate(tree.children):
        for c in kids:
            edges.append((relabel[v], relabel[c]))
    return Topology(tree.nodes, edges)

"""Directed graphs, reachability, and edge-list ingestion."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .rng import Stream


@dataclass(frozen=True)
class DirectedGraph:
    node_count: int
    edges: np.ndarray  # (E, 2) int64, unique rows sorted lexicographically
    _csr: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= self.node_count):
            raise ValueError(f"edge endpoint outside [0, {self.node_count})")
        e = np.unique(e, axis=0) if e.size else e
        object.__setattr__(self, "edges", e)
        adj = sp.csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])),
                            shape=(self.node_count, self.node_count))
        object.__setattr__(self, "_csr", adj)

    @classmethod
    def complete(cls, n: int) -> "DirectedGraph":
        src, dst = np.nonzero(~np.eye(n, dtype=bool))
        return cls(n, np.column_stack([src, dst]))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def successors(self, v: int) -> np.ndarray:
        return self._csr.indices[self._csr.indptr[v]:self._csr.indptr[v + 1]]

    def reachable(self, seeds) -> np.ndarray:
        """Boolean mask of nodes reachable from ``seeds`` (seeds included), by multi-source BFS."""
        seen = np.zeros(self.node_count, dtype=bool)
        queue = deque()
        for s in seeds:
            if not 0 <= s < self.node_count:
                raise ValueError(f"node {s} out of range")
            if not seen[s]:
                seen[s] = True
                queue.append(s)
        indptr, indices = self._csr.indptr, self._csr.indices
        while queue:
            u = queue.popleft()
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen

    def reachability_matrix(self) -> sp.csr_matrix:
        """Sparse boolean ``R[u, v] = 1`` iff ``v`` is reachable from ``u``.

        Computed on the condensation (strongly connected components in
        reverse topological order) so each component is expanded once.
        """
        n = self.node_count
        ncomp, label = sp.csgraph.connected_components(self._csr, directed=True, connection="strong")
        members = [[] for _ in range(ncomp)]
        for v in range(n):
            members[label[v]].append(v)
        cedges = {(label[a], label[b]) for a, b in self.edges if label[a] != label[b]}
        succ = [[] for _ in range(ncomp)]
        indeg = np.zeros(ncomp, dtype=int)
        for a, b in cedges:
            succ[a].append(b)
            indeg[b] += 1
        order = []
        queue = deque(np.nonzero(indeg == 0)[0].tolist())
        while queue:
            c = queue.popleft()
            order.append(c)
            for d in succ[c]:
                indeg[d] -= 1
                if indeg[d] == 0:
                    queue.append(d)
        reach: list = [None] * ncomp
        for c in reversed(order):
            acc = set(members[c])
            for d in succ[c]:
                acc |= reach[d]
            reach[c] = frozenset(acc)
        rows, cols = [], []
        for v in range(n):
            r = reach[label[v]]
            rows.extend([v] * len(r))
            cols.extend(r)
        data = np.ones(len(rows), dtype=np.int32)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def sample_subgraph(g: DirectedGraph, p: float, seed: int) -> DirectedGraph:
    """Keep each edge independently with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    keep = Stream(seed).random(g.edge_count) < p
    return DirectedGraph(g.node_count, g.edges[keep])


class EdgeListError(ValueError):
    pass


def load_edge_list(path) -> DirectedGraph:
    """Read a whitespace-separated ``src dst`` edge list; ``#`` lines are comments.

    Node ids are remapped densely to ``0..n-1`` in order of first appearance;
    repeated edges are dropped.
    """
    ids: dict[int, int] = {}
    edges = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListError(f"line {lineno}: expected 'src dst', got {line!r}")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"line {lineno}: non-integer node id in {line!r}") from None
            edges.append((ids.setdefault(a, len(ids)), ids.setdefault(b, len(ids))))
    return DirectedGraph(len(ids), np.array(edges, dtype=np.int64).reshape(-1, 2))

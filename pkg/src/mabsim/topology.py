"""Agent communication graphs.

Nodes are 0-based positions internally; edge-list files and everything
printed for humans use 1-based node numbers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from mabsim.errors import (
    AsymmetricEdgeError,
    DisconnectedGraphError,
    GenerationFailure,
    InvalidArgument,
    SelfLoopError,
    TopologyParseError,
)
from mabsim.rng import RngStream

DEFAULT_MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class Topology:
    """Undirected, simple, connected graph over ``node_count`` agents."""

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]
    name: str = field(default="custom", compare=False)
    # number of random draws it took to get a connected sample
    attempts: int = field(default=1, compare=False)

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise InvalidArgument("a topology needs at least one node")
        if len(self.adjacency) != self.node_count:
            raise InvalidArgument("adjacency length does not match node count")
        adj = tuple(tuple(sorted(nbrs)) for nbrs in self.adjacency)
        for u, nbrs in enumerate(adj):
            if len(set(nbrs)) != len(nbrs):
                raise InvalidArgument(f"duplicate edge at node {u + 1}")
            for v in nbrs:
                if not 0 <= v < self.node_count:
                    raise InvalidArgument(f"node {u + 1} has out-of-range neighbour {v + 1}")
                if v == u:
                    raise InvalidArgument(f"self-loop at node {u + 1}")
                if u not in adj[v]:
                    raise InvalidArgument(f"edge {u + 1}-{v + 1} is not symmetric")
        object.__setattr__(self, "adjacency", adj)
        if not _connected(adj):
            raise InvalidArgument("topology is disconnected")

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]], **kw) -> "Topology":
        """Build from 0-based undirected edges."""
        nbrs: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(node_count, tuple(tuple(s) for s in nbrs), **kw)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    @property
    def edge_count(self) -> int:
        return sum(self.degrees) // 2

    @property
    def degrees(self) -> list[int]:
        return [len(n) for n in self.adjacency]

    @cached_property
    def diameter(self) -> int:
        return diameter(self)

    @cached_property
    def max_degree(self) -> int:
        return max_degree(self)

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) arrays for compiled code."""
        indptr = np.zeros(self.node_count + 1, np.int64)
        indptr[1:] = np.cumsum(self.degrees)
        indices = np.fromiter((v for n in self.adjacency for v in n), np.int64, count=int(indptr[-1]))
        return indptr, indices


def _bfs(adj, source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _connected(adj) -> bool:
    return min(_bfs(adj, 0)) >= 0


def diameter(t: Topology) -> int:
    """Largest hop distance between two nodes (0 for a single node)."""
    best = 0
    for s in range(t.node_count):
        dist = _bfs(t.adjacency, s)
        if min(dist) < 0:
            raise InvalidArgument("diameter is undefined for a disconnected graph")
        best = max(best, max(dist))
    return best


def max_degree(t: Topology) -> int:
    return max(t.degrees)


def complete_graph(n: int) -> Topology:
    if n < 1:
        raise InvalidArgument(f"need at least one node, got {n}")
    return Topology(n, tuple(tuple(v for v in range(n) if v != u) for u in range(n)), name="complete")


def path_graph(n: int) -> Topology:
    return Topology.from_edges(n, [(i, i + 1) for i in range(n - 1)], name="path")


def star_graph(n: int) -> Topology:
    """Node 1 is the hub."""
    return Topology.from_edges(n, [(0, i) for i in range(1, n)], name="star")


def gen_erdos_renyi_connected(
    n: int, p: float, rng: RngStream, max_attempts: int = DEFAULT_MAX_ATTEMPTS
) -> Topology:
    """G(n, p) conditioned on connectivity by whole-graph resampling."""
    if n < 2:
        raise InvalidArgument(f"random graphs need n >= 2, got {n}")
    if not 0.0 < p <= 1.0:
        raise InvalidArgument(f"edge probability must be in (0, 1], got {p}")
    rows, cols = np.triu_indices(n, k=1)
    for attempt in range(1, max_attempts + 1):
        keep = rng.uniform(rows.size) < p
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in zip(rows[keep].tolist(), cols[keep].tolist()):
            nbrs[u].append(v)
            nbrs[v].append(u)
        if _connected(nbrs):
            return Topology(n, tuple(tuple(x) for x in nbrs), name="erdos-renyi", attempts=attempt)
    raise GenerationFailure(
        f"no connected G(n={n}, p={p}) sample within {max_attempts} attempts"
    )


def load_topology(path: str | Path) -> Topology:
    """Read an edge-list file.

    Each non-comment line is either an undirected edge ``u v`` or an
    adjacency line ``u: v1 v2 ...``.  Nodes are 1-based; lines starting with
    ``#`` are ignored.  Adjacency lines must agree with each other: if ``u``
    lists ``v`` through an adjacency line, ``v``'s adjacency line (when it has
    one) must list ``u``.
    """
    path = Path(path)
    edges: dict[frozenset[int], int] = {}
    declared: dict[int, tuple[set[int], int]] = {}
    max_node = 0
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" in line:
            head, _, rest = line.partition(":")
            u = _parse_node(head, lineno)
            vs = [_parse_node(tok, lineno) for tok in rest.split()]
            if u in declared:
                raise TopologyParseError("node declared twice", line=lineno, node=u)
            declared[u] = (set(vs), lineno)
            pairs = [(u, v) for v in vs]
        else:
            toks = line.split()
            if len(toks) != 2:
                raise TopologyParseError(f"expected two node numbers, got {line!r}", line=lineno)
            pairs = [(_parse_node(toks[0], lineno), _parse_node(toks[1], lineno))]
        for u, v in pairs:
            if u == v:
                raise SelfLoopError("self-loop", line=lineno, node=u)
            edges.setdefault(frozenset((u, v)), lineno)
            max_node = max(max_node, u, v)
        if ":" in line:
            max_node = max(max_node, u)
    for u, (vs, lineno) in declared.items():
        for v in vs:
            if v in declared and u not in declared[v][0]:
                raise AsymmetricEdgeError(
                    f"node {u} lists {v} but node {v} does not list {u}", line=lineno, node=v
                )
    if max_node == 0:
        raise TopologyParseError("file contains no nodes")
    nbrs: list[set[int]] = [set() for _ in range(max_node)]
    for e in edges:
        u, v = tuple(e)
        nbrs[u - 1].add(v - 1)
        nbrs[v - 1].add(u - 1)
    dist = _bfs(nbrs, 0)
    if min(dist) < 0:
        raise DisconnectedGraphError("graph is disconnected", node=dist.index(-1) + 1)
    return Topology(max_node, tuple(tuple(s) for s in nbrs), name=f"file:{path.name}")


def _parse_node(tok: str, lineno: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise TopologyParseError(f"not a node number: {tok!r}", line=lineno) from None
    if v < 1:
        raise TopologyParseError(f"node numbers are 1-based, got {v}", line=lineno)
    return v

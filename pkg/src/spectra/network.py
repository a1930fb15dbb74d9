"""Undirected network topology with churn support.

The graph is stored as an adjacency map from node identifier to the
set of neighbor identifiers.  Identifiers increase monotonically and
are never reused, so a node that left and a node that joined later can
never be confused.  All operations are pure; they return new Graph
values and leave their input untouched.

Random choices consume the caller's generator in a fixed, documented
order, which keeps whole-simulation runs byte-for-byte reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class Graph:
    """Adjacency map plus the next identifier to hand out."""

    adjacency: dict
    next_id: int

    def nodes(self) -> list:
        return sorted(self.adjacency)

    def edges(self) -> list:
        out = []
        for u in sorted(self.adjacency):
            for v in sorted(self.adjacency[u]):
                if u < v:
                    out.append((u, v))
        return out


def _copy_adjacency(adjacency: dict) -> dict:
    return {u: set(vs) for u, vs in adjacency.items()}


def _bfs_reachable(adjacency: dict, start: int) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def connected_components(graph: Graph) -> list:
    """Components as sets, ordered by their smallest member."""
    remaining = set(graph.adjacency)
    comps = []
    while remaining:
        start = min(remaining)
        comp = _bfs_reachable(graph.adjacency, start)
        comps.append(comp)
        remaining -= comp
    return comps


def is_connected(graph: Graph) -> bool:
    if not graph.adjacency:
        raise ValueError("empty graph has no connectivity")
    start = next(iter(graph.adjacency))
    return len(_bfs_reachable(graph.adjacency, start)) == len(graph.adjacency)


def generate_random_graph(
    n: int, avg_degree: float, rng: np.random.Generator
) -> Graph:
    """Connected random graph on nodes 0..n-1 with n*avg_degree/2 edges.

    The edge count is rounded and capped at the complete graph.  Edges
    are rejection-sampled uniformly; if the result is disconnected it
    is repaired by bridging the two lowest components and removing a
    random non-bridge edge, keeping the edge count fixed.  Repair makes
    the degree distribution only approximately uniform, which is the
    price of guaranteeing connectivity.
    """
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if avg_degree < 2:
        raise ValueError("avg_degree below 2 cannot guarantee connectivity")
    max_edges = n * (n - 1) // 2
    m = min(round(n * avg_degree / 2), max_edges)

    adjacency = {i: set() for i in range(n)}
    edge_set = set()
    while len(edge_set) < m:
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        if u == v:
            continue
        edge = (u, v) if u < v else (v, u)
        if edge in edge_set:
            continue
        edge_set.add(edge)
        adjacency[u].add(v)
        adjacency[v].add(u)

    graph = Graph(adjacency=adjacency, next_id=n)
    while True:
        comps = connected_components(graph)
        if len(comps) == 1:
            break
        first = sorted(comps[0])
        second = sorted(comps[1])
        u = first[int(rng.integers(len(first)))]
        v = second[int(rng.integers(len(second)))]
        adjacency[u].add(v)
        adjacency[v].add(u)
        edge_set.add((u, v) if u < v else (v, u))
        _remove_random_non_bridge(adjacency, edge_set, rng)
    return graph


def _remove_random_non_bridge(
    adjacency: dict, edge_set: set, rng: np.random.Generator
) -> None:
    """Drop one uniformly chosen edge whose removal splits nothing."""
    edges = sorted(edge_set)
    while True:
        a, b = edges[int(rng.integers(len(edges)))]
        adjacency[a].discard(b)
        adjacency[b].discard(a)
        if b in _bfs_reachable(adjacency, a):
            edge_set.discard((a, b))
            return
        adjacency[a].add(b)
        adjacency[b].add(a)


def add_node(
    graph: Graph, degree: int, rng: np.random.Generator
) -> "tuple[Graph, int]":
    """Attach a fresh node to ``degree`` distinct uniform existing nodes."""
    existing = sorted(graph.adjacency)
    if not 1 <= degree <= len(existing):
        raise ValueError(f"degree {degree} not in [1, {len(existing)}]")
    targets = set()
    while len(targets) < degree:
        targets.add(existing[int(rng.integers(len(existing)))])
    new_id = graph.next_id
    adjacency = _copy_adjacency(graph.adjacency)
    adjacency[new_id] = set(targets)
    for t in targets:
        adjacency[t].add(new_id)
    return Graph(adjacency=adjacency, next_id=new_id + 1), new_id


def remove_node(graph: Graph, node_id: int) -> Graph:
    """Delete a node and its incident edges; neighbors are not told."""
    if node_id not in graph.adjacency:
        raise ValueError(f"unknown node {node_id}")
    adjacency = {
        u: {v for v in vs if v != node_id}
        for u, vs in graph.adjacency.items()
        if u != node_id
    }
    return Graph(adjacency=adjacency, next_id=graph.next_id)


def diameter(graph: Graph) -> int:
    """Longest shortest path over all node pairs; graph must be connected."""
    best = 0
    nodes = graph.nodes()
    for start in nodes:
        dist = {start: 0}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in graph.adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        if len(dist) != len(nodes):
            raise ValueError("graph is not connected")
        best = max(best, max(dist.values()))
    return best


def edge_list_text(graph: Graph) -> str:
    """Canonical one-edge-per-line dump, for fixtures and debugging."""
    return "".join(f"{u} {v}\n" for u, v in graph.edges())

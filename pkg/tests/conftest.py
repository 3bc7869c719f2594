"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's algorithm paths: betweenness
comes from explicit all-shortest-path enumeration, modularity from the
adjacency double sum, and the barbell maximum from exhaustive set-partition
search. Tests freeze expected values computed by these, never by the code
under test.
"""

from __future__ import annotations

import random
from collections import deque
from datetime import datetime, timedelta, timezone
from itertools import combinations

import pytest

from callnet.graph import EdgeData, InteractionGraph
from callnet.records import CallRecord, EventType


def graph_from_edges(
    edges, directed: bool = False, nodes=(), weights=None
) -> InteractionGraph:
    """Build a graph straight from an edge list (unit weights by default)."""
    node_set = set(nodes)
    edge_map = {}
    for i, (u, v) in enumerate(edges):
        node_set.update((u, v))
        data = EdgeData(weight=weights[i] if weights else 1)
        edge_map[(u, v)] = data
    return InteractionGraph(
        directed=directed,
        nodes={n: {} for n in node_set},
        edges=edge_map,
    )


BARBELL_EDGES = [(1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6), (3, 4)]
BARBELL_TRIANGLES = [{1, 2, 3}, {4, 5, 6}]


@pytest.fixture
def barbell() -> InteractionGraph:
    return graph_from_edges(BARBELL_EDGES)


def record(caller, callee, ts="2013-03-01T10:00:00Z", duration=30, etype=EventType.VOICE):
    if isinstance(ts, str):
        from callnet.records import parse_instant

        ts = parse_instant(ts)
    return CallRecord(caller, callee, ts, duration, etype)


def hourly(start: datetime, hours: int):
    return [start + timedelta(hours=i) for i in range(hours)]


T0 = datetime(2013, 3, 1, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def adjacency_of(edges):
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def all_shortest_paths(adj, src, dst):
    """Every shortest path src->dst, by BFS layering plus backward expansion."""
    dist = {src: 0}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in adj.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    if dst not in dist:
        return []
    paths = []

    def expand(prefix):
        tail = prefix[-1]
        if tail == src:
            paths.append(list(reversed(prefix)))
            return
        for w in adj[tail]:
            if dist.get(w) == dist[tail] - 1:
                expand(prefix + [w])

    expand([dst])
    return paths


def brute_betweenness(nodes, edges):
    """Unnormalized node and edge betweenness by explicit path enumeration,
    each unordered pair once, fractional credit over ties."""
    adj = adjacency_of(edges)
    for n in nodes:
        adj.setdefault(n, set())
    node_bc = {n: 0.0 for n in nodes}
    edge_bc = {(min(u, v), max(u, v)): 0.0 for u, v in edges}
    for s, t in combinations(sorted(nodes), 2):
        paths = all_shortest_paths(adj, s, t)
        if not paths:
            continue
        credit = 1.0 / len(paths)
        for path in paths:
            for v in path[1:-1]:
                node_bc[v] += credit
            for u, w in zip(path, path[1:]):
                edge_bc[(min(u, w), max(u, w))] += credit
    return node_bc, edge_bc


def naive_modularity(nodes, edges, communities):
    """Adjacency double-sum form of the partition quality score."""
    m = len(edges)
    adj = {}
    deg = {n: 0 for n in nodes}
    for u, v in edges:
        adj[(u, v)] = adj[(v, u)] = 1
        deg[u] += 1
        deg[v] += 1
    comm_of = {}
    for i, comm in enumerate(communities):
        for n in comm:
            comm_of[n] = i
    q = 0.0
    for i in nodes:
        for j in nodes:
            if comm_of[i] != comm_of[j]:
                continue
            q += (adj.get((i, j), 0) - deg[i] * deg[j] / (2.0 * m)) / (2.0 * m)
    return q


def set_partitions(items):
    """All partitions of a list (Bell-number enumeration)."""
    items = list(items)
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for partial in set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[head] + partial[i]] + partial[i + 1 :]
        yield [[head]] + partial


def random_simple_graph(rng: random.Random, n: int, extra_edge_prob: float = 0.3):
    """Random connected simple graph: random spanning tree plus extra edges."""
    nodes = list(range(1, n + 1))
    edges = set()
    shuffled = nodes[:]
    rng.shuffle(shuffled)
    for i in range(1, n):
        a = shuffled[rng.randrange(i)]
        b = shuffled[i]
        edges.add((min(a, b), max(a, b)))
    for u, v in combinations(nodes, 2):
        if rng.random() < extra_edge_prob:
            edges.add((u, v))
    return nodes, sorted(edges)


def random_partition(rng: random.Random, nodes):
    k = rng.randint(1, len(nodes))
    buckets = [[] for _ in range(k)]
    for n in nodes:
        buckets[rng.randrange(k)].append(n)
    return [set(b) for b in buckets if b]

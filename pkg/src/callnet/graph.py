"""Aggregated interaction graph over unique identifiers, plus whole-graph metrics.

One node per identifier, one edge per (caller, callee) pair with the event
count as its weight. Graphs are immutable once built; every query here is
read-only and safe for concurrent readers.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from . import _accel
from .errors import NodeNotFound
from .records import CallRecord, EventType, format_instant

DEFAULT_EDGE_TYPES = frozenset({EventType.VOICE, EventType.SMS, EventType.MMS})


@dataclass(frozen=True)
class BuildPolicy:
    """Controls which events form edges when aggregating records.

    By default INTERNET and OTHER events create no edges (their callee is
    typically a service, not a person) but still register the caller node's
    activity.
    """

    edge_types: frozenset[EventType] = DEFAULT_EDGE_TYPES
    directed: bool = True
    register_non_edge_callers: bool = True


@dataclass
class EdgeData:
    weight: int = 0
    by_type: dict[str, int] = field(default_factory=dict)
    first_seen: datetime | None = None
    last_seen: datetime | None = None

    def add_event(self, rec: CallRecord) -> None:
        count = 1 + rec.duplicates
        self.weight += count
        key = rec.event_type.value
        self.by_type[key] = self.by_type.get(key, 0) + count
        if self.first_seen is None or rec.timestamp < self.first_seen:
            self.first_seen = rec.timestamp
        if self.last_seen is None or rec.timestamp > self.last_seen:
            self.last_seen = rec.timestamp


class InteractionGraph:
    """Weighted aggregate of communication events.

    ``edges`` maps ordered (src, dst) pairs when directed; undirected graphs
    canonicalize keys to (min, max). No self-loop edges exist: self-loop
    events are dropped at build time and only counted.
    """

    def __init__(
        self,
        directed: bool = True,
        nodes: Mapping[int, dict] | None = None,
        edges: Mapping[tuple[int, int], EdgeData] | None = None,
        self_loops_dropped: int = 0,
    ):
        self.directed = directed
        self._nodes: dict[int, dict] = dict(nodes or {})
        self._edges: dict[tuple[int, int], EdgeData] = {}
        for (u, v), data in (edges or {}).items():
            self._edges[self._key(u, v)] = data
        self.self_loops_dropped = self_loops_dropped
        self._adj_cache: dict[int, set[int]] | None = None
        self._uindex_cache: UndirectedIndex | None = None

    def _key(self, u: int, v: int) -> tuple[int, int]:
        if self.directed:
            return (u, v)
        return (u, v) if u <= v else (v, u)

    # -- inspection ---------------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def nodes(self) -> list[int]:
        return sorted(self._nodes)

    def node_attrs(self, node: int) -> dict:
        return self._nodes[node]

    def has_node(self, node: int) -> bool:
        return node in self._nodes

    def edges(self) -> list[tuple[int, int, EdgeData]]:
        return [(u, v, data) for (u, v), data in sorted(self._edges.items())]

    def edge_data(self, u: int, v: int) -> EdgeData | None:
        return self._edges.get(self._key(u, v))

    def total_weight(self) -> int:
        return sum(d.weight for d in self._edges.values())

    def adjacency(self) -> dict[int, set[int]]:
        """Undirected neighbor sets (direction ignored)."""
        if self._adj_cache is None:
            adj: dict[int, set[int]] = {node: set() for node in self._nodes}
            for u, v in self._edges:
                adj[u].add(v)
                adj[v].add(u)
            self._adj_cache = adj
        return self._adj_cache

    def neighbors(self, node: int) -> set[int]:
        if node not in self._nodes:
            raise NodeNotFound(f"node {node!r} not in graph")
        return self.adjacency()[node]

    # -- derived structures -------------------------------------------------

    def undirected_index(self) -> "UndirectedIndex":
        if self._uindex_cache is None:
            self._uindex_cache = UndirectedIndex.from_graph(self)
        return self._uindex_cache

    def subgraph(self, keep: Iterable[int]) -> "InteractionGraph":
        keep_set = set(keep)
        nodes = {node: dict(self._nodes[node]) for node in keep_set}
        edges = {
            (u, v): data
            for (u, v), data in self._edges.items()
            if u in keep_set and v in keep_set
        }
        return InteractionGraph(self.directed, nodes, edges, 0)

    # -- export -------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "directed": self.directed,
            "nodes": [{"id": n, "attrs": self._nodes[n]} for n in sorted(self._nodes)],
            "edges": [
                {"src": u, "dst": v, "weight": d.weight, "by_type": d.by_type}
                for (u, v), d in sorted(self._edges.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, payload: dict) -> "InteractionGraph":
        graph = cls(directed=bool(payload["directed"]))
        for entry in payload["nodes"]:
            graph._nodes[entry["id"]] = dict(entry.get("attrs", {}))
        for entry in payload["edges"]:
            data = EdgeData(weight=int(entry["weight"]), by_type=dict(entry.get("by_type", {})))
            graph._edges[graph._key(entry["src"], entry["dst"])] = data
        return graph

    def to_graphml(self) -> str:
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
            '  <key id="events" for="node" attr.name="events" attr.type="int"/>',
            '  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>',
            '  <key id="by_type" for="edge" attr.name="by_type" attr.type="string"/>',
            f'  <graph edgedefault={quoteattr("directed" if self.directed else "undirected")}>',
        ]
        for node in sorted(self._nodes):
            attrs = self._nodes[node]
            if attrs.get("events") is not None:
                lines.append(
                    f'    <node id={quoteattr(str(node))}>'
                    f'<data key="events">{int(attrs["events"])}</data></node>'
                )
            else:
                lines.append(f"    <node id={quoteattr(str(node))}/>")
        for i, ((u, v), data) in enumerate(sorted(self._edges.items())):
            by_type = escape(json.dumps(data.by_type, sort_keys=True))
            lines.append(
                f'    <edge id="e{i}" source={quoteattr(str(u))} target={quoteattr(str(v))}>'
                f'<data key="weight">{data.weight}</data>'
                f'<data key="by_type">{by_type}</data></edge>'
            )
        lines.append("  </graph>")
        lines.append("</graphml>")
        return "\n".join(lines) + "\n"


@dataclass
class UndirectedIndex:
    """Array view of the undirected simple projection, ready for kernels.

    ``pairs[i]`` is the i-th unordered edge (u < v, sorted); CSR arrays index
    nodes by their rank in ``order``.
    """

    order: list[int]
    pos: dict[int, int]
    pairs: list[tuple[int, int]]
    weights: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    edge_ids: np.ndarray

    @classmethod
    def from_graph(cls, graph: InteractionGraph) -> "UndirectedIndex":
        order = sorted(graph._nodes)
        pos = {node: i for i, node in enumerate(order)}
        merged: dict[tuple[int, int], int] = {}
        for (u, v), data in graph._edges.items():
            key = (u, v) if u <= v else (v, u)
            merged[key] = merged.get(key, 0) + data.weight
        pairs = sorted(merged)
        weights = np.array([merged[p] for p in pairs], dtype=np.int64)
        us = np.array([pos[u] for u, _ in pairs], dtype=np.int64)
        vs = np.array([pos[v] for _, v in pairs], dtype=np.int64)
        indptr, indices, edge_ids = _accel.build_csr(len(order), us, vs)
        return cls(order, pos, pairs, weights, indptr, indices, edge_ids)

    @property
    def n(self) -> int:
        return len(self.order)

    @property
    def m(self) -> int:
        return len(self.pairs)


def build_graph(
    records: Sequence[CallRecord], policy: BuildPolicy | None = None
) -> InteractionGraph:
    """Aggregate anonymized records into an interaction graph.

    Edge weight is the event count per (caller, callee) pair. Self-loop
    events register the node, create no edge, and are tallied in
    ``self_loops_dropped``.
    """
    policy = policy or BuildPolicy()
    graph = InteractionGraph(directed=policy.directed)
    nodes = graph._nodes
    for rec in records:
        count = 1 + rec.duplicates
        if rec.event_type in policy.edge_types:
            if rec.is_self_loop:
                graph.self_loops_dropped += count
                node = nodes.setdefault(rec.caller, {"events": 0})
                node["events"] += count
                continue
            for endpoint in (rec.caller, rec.callee):
                node = nodes.setdefault(endpoint, {"events": 0})
                node["events"] += count
            key = graph._key(rec.caller, rec.callee)
            data = graph._edges.get(key)
            if data is None:
                data = graph._edges[key] = EdgeData()
            data.add_event(rec)
        elif policy.register_non_edge_callers:
            node = nodes.setdefault(rec.caller, {"events": 0})
            node["events"] += count
    return graph


def undirected_projection(graph: InteractionGraph) -> InteractionGraph:
    """Merge (a,b) and (b,a) into one undirected edge with summed weight.

    Idempotent: an undirected graph projects to itself.
    """
    if not graph.directed:
        return graph
    edges: dict[tuple[int, int], EdgeData] = {}
    for (u, v), data in graph._edges.items():
        key = (u, v) if u <= v else (v, u)
        merged = edges.get(key)
        if merged is None:
            merged = edges[key] = EdgeData()
        merged.weight += data.weight
        for token, n in data.by_type.items():
            merged.by_type[token] = merged.by_type.get(token, 0) + n
        for stamp in (data.first_seen, data.last_seen):
            if stamp is None:
                continue
            if merged.first_seen is None or stamp < merged.first_seen:
                merged.first_seen = stamp
            if merged.last_seen is None or stamp > merged.last_seen:
                merged.last_seen = stamp
    return InteractionGraph(
        directed=False,
        nodes={n: dict(a) for n, a in graph._nodes.items()},
        edges=edges,
        self_loops_dropped=graph.self_loops_dropped,
    )


def connected_components(graph: InteractionGraph) -> list[set[int]]:
    """Components of the undirected projection, sorted by smallest member."""
    adj = graph.adjacency()
    seen: set[int] = set()
    components: list[set[int]] = []
    for start in sorted(graph._nodes):
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        group = {start}
        while queue:
            node = queue.popleft()
            for other in adj[node]:
                if other not in seen:
                    seen.add(other)
                    group.add(other)
                    queue.append(other)
        components.append(group)
    return components


@dataclass
class OverallMetrics:
    node_count: int
    edge_count: int
    connected_components: int
    max_geodesic: int
    avg_geodesic: float
    density: float
    self_loops: int
    geodesic_scope: str = "reachable-pairs"

    def to_json_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "connected_components": self.connected_components,
            "max_geodesic": self.max_geodesic,
            "avg_geodesic": self.avg_geodesic,
            "density": self.density,
            "self_loops": self.self_loops,
            "geodesic_scope": self.geodesic_scope,
        }


def density_undirected(n: int, undirected_edges: int) -> float:
    """Simple undirected density 2E / (N(N-1)); 0 for graphs under two nodes."""
    if n < 2:
        return 0.0
    return 2.0 * undirected_edges / (n * (n - 1))


def overall_metrics(graph: InteractionGraph) -> OverallMetrics:
    """Whole-graph summary over the undirected simple projection.

    Geodesics are unweighted hop counts; the average is taken over connected
    ordered pairs only (disconnected pairs are skipped, as flagged by
    ``geodesic_scope``).
    """
    index = graph.undirected_index()
    components = connected_components(graph)
    if index.n == 0:
        return OverallMetrics(0, graph.edge_count, 0, 0, 0.0, 0.0, graph.self_loops_dropped)
    dist_sum, reach, ecc = _accel.geodesic_stats(index.n, index.indptr, index.indices)
    reachable_pairs = int(reach.sum())
    avg = float(dist_sum.sum() / reachable_pairs) if reachable_pairs else 0.0
    return OverallMetrics(
        node_count=index.n,
        edge_count=graph.edge_count,
        connected_components=len(components),
        max_geodesic=int(ecc.max()),
        avg_geodesic=avg,
        density=density_undirected(index.n, index.m),
        self_loops=graph.self_loops_dropped,
    )


def egonet(graph: InteractionGraph, center: int, radius: int | float) -> InteractionGraph:
    """Induced subgraph on nodes within ``radius`` undirected hops of ``center``."""
    if not graph.has_node(center):
        raise NodeNotFound(f"node {center!r} not in graph")
    if radius < 0:
        raise ValueError("radius must be non-negative")
    adj = graph.adjacency()
    keep = {center}
    frontier = {center}
    hops = 0
    while frontier and hops < radius:
        frontier = {w for v in frontier for w in adj[v]} - keep
        keep |= frontier
        hops += 1
        if math.isinf(radius) and not frontier:
            break
    return graph.subgraph(keep)


def edge_list_csv(graph: InteractionGraph) -> str:
    """Edge list as CSV: src,dst,weight,first_seen,last_seen."""
    lines = ["src,dst,weight,first_seen,last_seen"]
    for u, v, data in graph.edges():
        first = format_instant(data.first_seen) if data.first_seen else ""
        last = format_instant(data.last_seen) if data.last_seen else ""
        lines.append(f"{u},{v},{data.weight},{first},{last}")
    return "\n".join(lines) + "\n"

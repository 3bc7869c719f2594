"""Per-node centrality suite.

All path-based metrics (betweenness, closeness) and the neighborhood metrics
run on the undirected simple projection; PageRank alone uses edge direction.
Shortest paths are unweighted hop counts. Betweenness is unnormalized, with
each unordered pair counted once and fractional credit across equal-length
paths.

Per-source accumulation happens in a fixed node order, so results are
reproducible bit-for-bit regardless of how the work might be scheduled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import _accel
from .errors import ConvergenceFailure, DegenerateInput, InputMismatch
from .graph import InteractionGraph, undirected_projection


class Metric(str, Enum):
    DEGREE_NEIGHBOR = "DEGREE_NEIGHBOR"
    DEGREE_INTERACTION = "DEGREE_INTERACTION"
    BETWEENNESS = "BETWEENNESS"
    CLOSENESS = "CLOSENESS"
    EIGENVECTOR = "EIGENVECTOR"
    PAGERANK = "PAGERANK"
    LOCAL_CLUSTERING = "LOCAL_CLUSTERING"


@dataclass
class CentralityVector:
    metric: Metric
    values: dict[int, float]
    params: dict = field(default_factory=dict)

    def top(self, k: int) -> list[tuple[int, float]]:
        ranked = sorted(self.values.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:k]

    def to_csv(self) -> str:
        lines = ["node,value"]
        lines += [f"{node},{value!r}" for node, value in sorted(self.values.items())]
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric.value,
            "values": {str(n): v for n, v in sorted(self.values.items())},
            "params": self.params,
        }


@dataclass
class EdgeBetweenness:
    values: dict[tuple[int, int], float]
    pair_convention: str = "unordered-pairs-once"

    def to_csv(self) -> str:
        lines = ["src,dst,value"]
        lines += [f"{u},{v},{val!r}" for (u, v), val in sorted(self.values.items())]
        return "\n".join(lines) + "\n"


def degree(graph: InteractionGraph, mode: Metric = Metric.DEGREE_NEIGHBOR) -> CentralityVector:
    """Neighbor degree (distinct undirected contacts) or interaction degree
    (total incident events, i.e. summed undirected edge weights)."""
    index = graph.undirected_index()
    if mode == Metric.DEGREE_NEIGHBOR:
        counts = np.zeros(index.n, dtype=np.int64)
        for u, v in index.pairs:
            counts[index.pos[u]] += 1
            counts[index.pos[v]] += 1
        values = {node: float(counts[i]) for i, node in enumerate(index.order)}
        return CentralityVector(Metric.DEGREE_NEIGHBOR, values)
    if mode == Metric.DEGREE_INTERACTION:
        totals = np.zeros(index.n, dtype=np.int64)
        for (u, v), w in zip(index.pairs, index.weights):
            totals[index.pos[u]] += int(w)
            totals[index.pos[v]] += int(w)
        values = {node: float(totals[i]) for i, node in enumerate(index.order)}
        return CentralityVector(Metric.DEGREE_INTERACTION, values)
    raise ValueError(f"not a degree mode: {mode}")


def betweenness_nodes(graph: InteractionGraph) -> CentralityVector:
    index = graph.undirected_index()
    node_bc, _ = _accel.betweenness_arrays(
        index.n, index.indptr, index.indices, index.edge_ids, index.m
    )
    values = {node: float(node_bc[i]) for i, node in enumerate(index.order)}
    return CentralityVector(Metric.BETWEENNESS, values, {"normalized": False})


def betweenness_edges(graph: InteractionGraph) -> EdgeBetweenness:
    index = graph.undirected_index()
    _, edge_bc = _accel.betweenness_arrays(
        index.n, index.indptr, index.indices, index.edge_ids, index.m
    )
    return EdgeBetweenness({pair: float(edge_bc[i]) for i, pair in enumerate(index.pairs)})


def closeness(graph: InteractionGraph) -> CentralityVector:
    """1 / (sum of hop distances to same-component nodes); isolated nodes get 0.

    Computed per component; each node's component size rides along in params
    so small-component scores can be read in context.
    """
    index = graph.undirected_index()
    dist_sum, reach, _ = _accel.geodesic_stats(index.n, index.indptr, index.indices)
    values: dict[int, float] = {}
    sizes: dict[int, int] = {}
    for i, node in enumerate(index.order):
        values[node] = 1.0 / float(dist_sum[i]) if reach[i] > 0 else 0.0
        sizes[node] = int(reach[i]) + 1
    return CentralityVector(Metric.CLOSENESS, values, {"component_size": sizes})


def _component_node_lists(index) -> list[list[int]]:
    n = index.n
    seen = np.zeros(n, dtype=bool)
    components: list[list[int]] = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        members = [start]
        while stack:
            v = stack.pop()
            for p in range(index.indptr[v], index.indptr[v + 1]):
                w = int(index.indices[p])
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
                    members.append(w)
        components.append(sorted(members))
    return components


def eigenvector(
    graph: InteractionGraph,
    tolerance: float = 1e-10,
    max_iterations: int = 1000,
    weighted: bool = False,
) -> CentralityVector:
    """Power iteration on the undirected simple adjacency.

    Iterates the shifted operator (A + I) so bipartite structures converge to
    the same leading eigenvector. Output is non-negative with unit Euclidean
    norm. Disconnected inputs are solved per component (the dominant
    eigenspace is degenerate); the vector is still globally unit-norm and the
    degeneracy is flagged in params.
    """
    index = graph.undirected_index()
    if index.m == 0:
        raise DegenerateInput("eigenvector centrality needs at least one edge")
    weights = index.weights.astype(np.float64) if weighted else np.ones(index.m)
    pu_all = np.array([index.pos[u] for u, _ in index.pairs], dtype=np.int64)
    pv_all = np.array([index.pos[v] for _, v in index.pairs], dtype=np.int64)
    full = np.zeros(index.n, dtype=np.float64)
    components = _component_node_lists(index)
    solved = 0
    iterations_used = 0
    for members in components:
        member_mask = np.zeros(index.n, dtype=bool)
        member_mask[members] = True
        local = member_mask[pu_all]
        if not local.any():
            continue  # isolated node keeps 0
        pu, pv, w = pu_all[local], pv_all[local], weights[local]
        vec = np.zeros(index.n)
        vec[members] = 1.0 / np.sqrt(len(members))
        converged = False
        for iteration in range(1, max_iterations + 1):
            nxt = vec.copy()  # + I term
            np.add.at(nxt, pu, w * vec[pv])
            np.add.at(nxt, pv, w * vec[pu])
            nxt /= np.linalg.norm(nxt)
            if np.max(np.abs(nxt - vec)) < tolerance:
                vec = nxt
                converged = True
                iterations_used = max(iterations_used, iteration)
                break
            vec = nxt
        if not converged:
            raise ConvergenceFailure(
                f"eigenvector centrality did not converge in {max_iterations} iterations",
                last_iterate={node: float(vec[index.pos[node]]) for node in index.order},
            )
        full += vec
        solved += 1
    full /= np.linalg.norm(full)
    params = {
        "tolerance": tolerance,
        "iterations": iterations_used,
        "normalization": "unit-euclidean",
        "weighted": weighted,
    }
    if solved > 1:
        params["degenerate"] = True
        params["edge_bearing_components"] = solved
    values = {node: float(full[index.pos[node]]) for node in index.order}
    return CentralityVector(Metric.EIGENVECTOR, values, params)


def pagerank(
    graph: InteractionGraph,
    damping: float = 0.85,
    tolerance: float = 1e-10,
    max_iterations: int = 1000,
) -> CentralityVector:
    """Standard PageRank on the directed graph.

    Transition probabilities are proportional to edge weights; dangling nodes
    redistribute their mass uniformly. The result sums to 1.
    """
    order = graph.nodes()
    n = len(order)
    if n == 0:
        return CentralityVector(Metric.PAGERANK, {}, {"damping": damping})
    pos = {node: i for i, node in enumerate(order)}
    srcs: list[int] = []
    dsts: list[int] = []
    wts: list[float] = []
    for u, v, data in graph.edges():
        srcs.append(pos[u])
        dsts.append(pos[v])
        wts.append(float(data.weight))
        if not graph.directed:
            srcs.append(pos[v])
            dsts.append(pos[u])
            wts.append(float(data.weight))
    src_arr = np.array(srcs, dtype=np.int64)
    dst_arr = np.array(dsts, dtype=np.int64)
    wt_arr = np.array(wts, dtype=np.float64)
    out_weight = np.zeros(n, dtype=np.float64)
    np.add.at(out_weight, src_arr, wt_arr)
    dangling = out_weight == 0.0
    share = np.divide(wt_arr, out_weight[src_arr]) if len(wts) else wt_arr

    rank = np.full(n, 1.0 / n)
    for iteration in range(1, max_iterations + 1):
        nxt = np.full(n, (1.0 - damping) / n)
        nxt += damping * rank[dangling].sum() / n
        if len(wts):
            np.add.at(nxt, dst_arr, damping * rank[src_arr] * share)
        if np.max(np.abs(nxt - rank)) < tolerance:
            rank = nxt
            break
        rank = nxt
    else:
        raise ConvergenceFailure(
            f"pagerank did not converge in {max_iterations} iterations",
            last_iterate={node: float(rank[pos[node]]) for node in order},
        )
    values = {node: float(rank[pos[node]]) for node in order}
    return CentralityVector(
        Metric.PAGERANK,
        values,
        {"damping": damping, "tolerance": tolerance, "iterations": iteration},
    )


def clustering_coefficient(graph: InteractionGraph) -> tuple[CentralityVector, float]:
    """Local clustering per node plus global transitivity.

    Local: triangles through v over (k_v choose 2), zero below degree 2.
    Global: 3 * triangles / connected triples.
    """
    proj = undirected_projection(graph)
    adj = proj.adjacency()
    values: dict[int, float] = {}
    closed_wedges = 0
    total_wedges = 0
    for node in proj.nodes():
        neigh = sorted(adj[node])
        k = len(neigh)
        if k < 2:
            values[node] = 0.0
            continue
        links = 0
        for a in range(k):
            na = adj[neigh[a]]
            for b in range(a + 1, k):
                if neigh[b] in na:
                    links += 1
        wedges = k * (k - 1) // 2
        values[node] = links / wedges
        closed_wedges += links
        total_wedges += wedges
    transitivity = closed_wedges / total_wedges if total_wedges else 0.0
    return CentralityVector(Metric.LOCAL_CLUSTERING, values), transitivity


@dataclass
class TopTable:
    headers: list[str]
    rows: list[tuple]

    def to_csv(self) -> str:
        lines = [",".join(self.headers)]
        for row in self.rows:
            lines.append(",".join(_cell(x) for x in row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        cells = [[_cell(x) for x in row] for row in self.rows]
        widths = [
            max(len(self.headers[i]), *(len(r[i]) for r in cells)) if cells else len(self.headers[i])
            for i in range(len(self.headers))
        ]
        out = ["  ".join(h.rjust(w) for h, w in zip(self.headers, widths))]
        for row in cells:
            out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        return json.dumps({"headers": self.headers, "rows": self.rows})


def _cell(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def top_table(vectors: Sequence[CentralityVector], k: int) -> TopTable:
    """Join centrality vectors into one table ranked by the first vector.

    Rows sort by the first metric descending, ties by ascending node id.
    All vectors must cover the same node set.
    """
    if not vectors:
        raise ValueError("need at least one centrality vector")
    base = set(vectors[0].values)
    for vec in vectors[1:]:
        if set(vec.values) != base:
            raise InputMismatch(
                f"{vec.metric.value} was computed on a different graph than "
                f"{vectors[0].metric.value}"
            )
    ranked = sorted(vectors[0].values.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    headers = ["node"] + [vec.metric.value.lower() for vec in vectors]
    rows = [
        tuple([node] + [vec.values[node] for vec in vectors]) for node, _ in ranked
    ]
    return TopTable(headers, rows)

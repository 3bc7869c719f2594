"""Community structure: modularity scoring, divisive and agglomerative
clustering, granularity controls, and supervised merge/split edits.

Everything here evaluates structure on the undirected simple projection with
unweighted edge counts; call multiplicities affect display and metrics, not
community quality. Tie-breaking is deterministic throughout (value comparison
at 1e-12 granularity, then lexicographic by node id), so traces and
dendrograms are reproducible run to run.

Long runs (divisive deletion traces, full merge sequences) accept a progress
callback and a cancel event so they can execute as cancellable jobs; each run
works on private state and never mutates the input graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _accel
from .errors import (
    CannotSplit,
    CommunityNotFound,
    DegenerateInput,
    InvalidPartition,
    JobCancelled,
    RangeError,
)
from .graph import InteractionGraph, connected_components

TIE_EPS = 1e-12

ProgressFn = Callable[[int, int], None]


# ---------------------------------------------------------------------------
# partitions and modularity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CommunityStats:
    intra_edges: int  # edges with both endpoints inside the community
    degree_sum: int  # summed member degrees in the simple projection


@dataclass
class Partition:
    """Hard assignment of every node to exactly one community.

    Communities are stored sorted by their id (smallest member id), each as a
    frozenset. ``per_community`` carries the intra-edge count and degree sum
    each community contributes to the modularity score.
    """

    communities: list[frozenset[int]]
    provenance: str = "MANUAL"
    params: dict = field(default_factory=dict, compare=False)
    per_community: list[CommunityStats] = field(default_factory=list, compare=False)
    graph: InteractionGraph | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_communities(
        cls,
        graph: InteractionGraph,
        communities: Iterable[Iterable[int]],
        provenance: str = "MANUAL",
        params: dict | None = None,
    ) -> "Partition":
        comms = sorted((frozenset(c) for c in communities), key=min)
        _validate_cover(graph, comms)
        part = cls(comms, provenance, params or {}, [], graph)
        part.per_community = _community_stats(graph, comms)
        return part

    def community_ids(self) -> list[int]:
        return [min(c) for c in self.communities]

    def community_of(self, node: int) -> int:
        for comm in self.communities:
            if node in comm:
                return min(comm)
        raise CommunityNotFound(f"node {node!r} not covered by partition")

    def membership(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for comm in self.communities:
            cid = min(comm)
            for node in comm:
                out[node] = cid
        return out

    def by_id(self, cid: int) -> frozenset[int]:
        for comm in self.communities:
            if min(comm) == cid:
                return comm
        raise CommunityNotFound(f"no community with id {cid}")

    def __len__(self) -> int:
        return len(self.communities)


def _validate_cover(graph: InteractionGraph, comms: Sequence[frozenset[int]]) -> None:
    covered: set[int] = set()
    total = 0
    for comm in comms:
        total += len(comm)
        covered |= comm
    if total != len(covered):
        raise InvalidPartition("communities overlap")
    node_set = set(graph.nodes())
    if covered != node_set:
        missing = node_set - covered
        extra = covered - node_set
        raise InvalidPartition(
            f"partition does not cover the graph (missing={sorted(missing)[:5]}, "
            f"foreign={sorted(extra)[:5]})"
        )


def _community_stats(
    graph: InteractionGraph, comms: Sequence[frozenset[int]]
) -> list[CommunityStats]:
    index = graph.undirected_index()
    deg = {node: 0 for node in index.order}
    for u, v in index.pairs:
        deg[u] += 1
        deg[v] += 1
    stats = []
    for comm in comms:
        intra = sum(1 for u, v in index.pairs if u in comm and v in comm)
        stats.append(CommunityStats(intra, sum(deg[n] for n in comm)))
    return stats


@dataclass
class ModularityReport:
    q: float
    contributions: list[float]

    def to_json_dict(self) -> dict:
        return {"q": self.q, "contributions": self.contributions}


def modularity(graph: InteractionGraph, partition: Partition | Iterable[Iterable[int]]) -> ModularityReport:
    """Partition quality: intra-community edge fraction minus the squared
    degree-fraction expectation, summed per community.

    Evaluated with unweighted edge counts on the undirected simple
    projection. The total is the exact in-order sum of the per-community
    contributions.
    """
    if not isinstance(partition, Partition):
        partition = Partition.from_communities(graph, partition)
    elif partition.graph is not graph or not partition.per_community:
        partition = Partition.from_communities(
            graph, partition.communities, partition.provenance, partition.params
        )
    index = graph.undirected_index()
    m = index.m
    if m == 0:
        raise DegenerateInput("modularity is undefined for an edgeless graph")
    contributions = [
        stats.intra_edges / m - (stats.degree_sum / (2.0 * m)) ** 2
        for stats in partition.per_community
    ]
    return ModularityReport(q=sum(contributions), contributions=contributions)


def partition_json_dict(graph: InteractionGraph, partition: Partition) -> dict:
    report = modularity(graph, partition)
    return {
        "provenance": partition.provenance,
        "params": partition.params,
        "communities": [sorted(c) for c in partition.communities],
        "q": report.q,
        "contributions": report.contributions,
    }


def partition_json(graph: InteractionGraph, partition: Partition) -> str:
    """Canonical partition serialization (stable byte-for-byte)."""
    return json.dumps(partition_json_dict(graph, partition), sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# divisive clustering: repeated highest-betweenness edge removal
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StopRule:
    kind: str  # "clusters" | "deletions" | "exhaust"
    value: int = 0

    @classmethod
    def clusters(cls, k: int) -> "StopRule":
        return cls("clusters", k)

    @classmethod
    def deletions(cls, count: int) -> "StopRule":
        return cls("deletions", count)

    @classmethod
    def exhaust(cls) -> "StopRule":
        return cls("exhaust")

    @classmethod
    def parse(cls, text: str) -> "StopRule":
        text = text.strip().lower()
        if text == "exhaust":
            return cls.exhaust()
        if "=" in text:
            kind, raw = text.split("=", 1)
            if kind in ("clusters", "deletions"):
                return cls(kind, int(raw))
        raise ValueError(f"bad stop rule {text!r}; use clusters=K, deletions=N, or exhaust")

    def describe(self) -> str:
        return self.kind if self.kind == "exhaust" else f"{self.kind}={self.value}"


@dataclass(frozen=True)
class GnStep:
    edge: tuple[int, int]
    betweenness: float
    components_after: int


@dataclass
class GnTrace:
    """Ordered deletion log: which edge fell at each step and the component
    count that resulted."""

    steps: list[GnStep]
    initial_components: int
    node_count: int

    def __len__(self) -> int:
        return len(self.steps)

    def to_csv(self) -> str:
        lines = ["step,edge_src,edge_dst,clusters_after"]
        for i, step in enumerate(self.steps, start=1):
            lines.append(f"{i},{step.edge[0]},{step.edge[1]},{step.components_after}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "initial_components": self.initial_components,
            "node_count": self.node_count,
            "steps": [
                {
                    "edge": list(step.edge),
                    "betweenness": step.betweenness,
                    "components_after": step.components_after,
                }
                for step in self.steps
            ],
        }


def _component_count_after_removal(
    adj: dict[int, set[int]], u: int, v: int, current: int
) -> int:
    # Removal can only split the component that contained (u, v).
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y == v:
                return current
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return current + 1


def girvan_newman(
    graph: InteractionGraph,
    stop: StopRule | None = None,
    progress: ProgressFn | None = None,
    cancel=None,
) -> GnTrace:
    """Remove the highest-betweenness edge repeatedly, logging every step.

    Betweenness is recomputed on the surviving graph after each removal. Ties
    within 1e-12 resolve to the lexicographically smallest (src, dst) pair.
    Stops on the rule (target component count, deletion budget) or when edges
    run out.
    """
    stop = stop or StopRule.exhaust()
    index = graph.undirected_index()
    if index.m == 0:
        raise DegenerateInput("divisive clustering needs at least one edge")

    pairs = list(index.pairs)  # sorted (u,v) with u < v
    pos = index.pos
    adj: dict[int, set[int]] = {node: set() for node in index.order}
    for u, v in pairs:
        adj[u].add(v)
        adj[v].add(u)
    components = len(connected_components(graph))

    steps: list[GnStep] = []
    trace = GnTrace(steps, initial_components=components, node_count=index.n)
    total_budget = stop.value if stop.kind == "deletions" else len(pairs)

    while pairs:
        if stop.kind == "clusters" and components >= stop.value:
            break
        if stop.kind == "deletions" and len(steps) >= stop.value:
            break
        if cancel is not None and cancel.is_set():
            raise JobCancelled("deletion trace cancelled")

        us = np.array([pos[u] for u, _ in pairs], dtype=np.int64)
        vs = np.array([pos[v] for _, v in pairs], dtype=np.int64)
        indptr, indices, edge_ids = _accel.build_csr(index.n, us, vs)
        _, edge_bc = _accel.betweenness_arrays(index.n, indptr, indices, edge_ids, len(pairs))

        best = float(edge_bc.max())
        winner = None
        for i, pair in enumerate(pairs):
            if edge_bc[i] >= best - TIE_EPS:
                winner = (pair, float(edge_bc[i]))
                break  # pairs are sorted, first qualifying pair is smallest
        assert winner is not None
        (u, v), value = winner
        pairs.remove((u, v))
        adj[u].discard(v)
        adj[v].discard(u)
        components = _component_count_after_removal(adj, u, v, components)
        steps.append(GnStep((u, v), value, components))
        if progress is not None:
            progress(len(steps), total_budget)

    return trace


def gn_partition_at(
    graph: InteractionGraph, trace: GnTrace, deletions: int
) -> Partition:
    """Connected components after replaying the first ``deletions`` removals."""
    if deletions < 0 or deletions > len(trace.steps):
        raise RangeError(f"deletions {deletions} outside trace of length {len(trace.steps)}")
    removed = {step.edge for step in trace.steps[:deletions]}
    index = graph.undirected_index()
    adj: dict[int, set[int]] = {node: set() for node in index.order}
    for u, v in index.pairs:
        if (u, v) not in removed:
            adj[u].add(v)
            adj[v].add(u)
    comms = _components_of_adj(adj)
    return Partition.from_communities(graph, comms, "GN", {"deletions": deletions})


def _components_of_adj(adj: dict[int, set[int]]) -> list[set[int]]:
    seen: set[int] = set()
    out: list[set[int]] = []
    for start in sorted(adj):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        group = {start}
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    group.add(y)
                    stack.append(y)
        out.append(group)
    return out


def gn_partition_for_clusters(
    graph: InteractionGraph, trace: GnTrace, k: int
) -> tuple[Partition, int]:
    """Smallest deletion prefix reaching at least ``k`` components."""
    if k < trace.initial_components:
        raise RangeError(
            f"target {k} below the initial component count {trace.initial_components}"
        )
    if k <= trace.initial_components:
        return gn_partition_at(graph, trace, 0), 0
    for i, step in enumerate(trace.steps, start=1):
        if step.components_after >= k:
            return gn_partition_at(graph, trace, i), i
    raise RangeError(f"trace never reaches {k} components")


def gn_best_q_partition(
    graph: InteractionGraph, trace: GnTrace
) -> tuple[Partition, int]:
    """Deletion count along the trace whose component partition maximizes
    modularity (ties favor fewer deletions)."""
    candidates = [0] + [
        i
        for i, step in enumerate(trace.steps, start=1)
        if step.components_after != (trace.steps[i - 2].components_after if i > 1 else trace.initial_components)
    ]
    best_q = None
    best: tuple[Partition, int] | None = None
    for deletions in candidates:
        part = gn_partition_at(graph, trace, deletions)
        q = modularity(graph, part).q
        if best_q is None or q > best_q + TIE_EPS:
            best_q = q
            best = (part, deletions)
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# agglomerative clustering: greedy modularity-gain merging
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Merge:
    a: int  # surviving community id (the smaller)
    b: int  # absorbed community id
    dq: float
    q: float


@dataclass
class Dendrogram:
    """Merge sequence from singletons up, with the modularity track.

    ``best_cut`` is the merge count whose implied partition maximizes
    modularity; cut index k means "after k merges". On disconnected input the
    merges form a forest (merging never crosses components).
    """

    leaves: list[int]
    merges: list[Merge]
    q_singletons: float
    q_sequence: list[float]
    best_cut: int
    graph: InteractionGraph = field(repr=False)

    def q_at(self, merge_count: int) -> float:
        if merge_count == 0:
            return self.q_singletons
        return self.q_sequence[merge_count - 1]

    def per_tree_merge_indices(self) -> dict[int, list[int]]:
        """Merge indices grouped by final tree root (per-component sequences)."""
        root: dict[int, int] = {leaf: leaf for leaf in self.leaves}
        groups: dict[int, list[int]] = {}
        for i, merge in enumerate(self.merges):
            ra, rb = root[merge.a], root[merge.b]
            target = min(ra, rb)
            for leaf, r in list(root.items()):
                if r == ra or r == rb:
                    root[leaf] = target
            groups.setdefault(target, []).append(i)
        return groups

    def to_json_dict(self) -> dict:
        return {
            "merges": [
                {"a": m.a, "b": m.b, "dq": m.dq, "q": m.q} for m in self.merges
            ],
            "best_cut": self.best_cut,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def cnm_fast_greedy(
    graph: InteractionGraph,
    progress: ProgressFn | None = None,
    cancel=None,
) -> Dendrogram:
    """Greedy agglomeration: repeatedly merge the connected community pair
    with the largest modularity gain.

    The gain for communities a, b is ``edges(a,b)/|E| - 2 * f_a * f_b`` where
    ``f_x`` is the fraction of edge endpoints falling in x. Merging continues
    through negative gains until each component is one community, producing
    the full dendrogram; ties resolve to the smallest (id_a, id_b) pair.
    """
    index = graph.undirected_index()
    m = index.m
    if m == 0:
        raise DegenerateInput("greedy agglomeration needs at least one edge")

    between: dict[int, dict[int, int]] = {node: {} for node in index.order}
    endpoint_frac: dict[int, float] = {node: 0.0 for node in index.order}
    for u, v in index.pairs:
        between[u][v] = between[u].get(v, 0) + 1
        between[v][u] = between[v].get(u, 0) + 1
        endpoint_frac[u] += 0.5 / m
        endpoint_frac[v] += 0.5 / m

    q = -sum(f * f for f in endpoint_frac.values())
    q_singletons = q
    merges: list[Merge] = []
    q_sequence: list[float] = []
    total_budget = index.n - len(connected_components(graph))

    while True:
        if cancel is not None and cancel.is_set():
            raise JobCancelled("merge sequence cancelled")
        best_dq = None
        best_pair: tuple[int, int] | None = None
        for a in sorted(between):
            fa = endpoint_frac[a]
            for b in sorted(between[a]):
                if b <= a:
                    continue
                dq = between[a][b] / m - 2.0 * fa * endpoint_frac[b]
                if best_dq is None or dq > best_dq + TIE_EPS:
                    best_dq = dq
                    best_pair = (a, b)
                # ties resolve to the smallest pair, which the sorted scan
                # already visits first
        if best_pair is None:
            break
        a, b = best_pair
        q += best_dq
        merges.append(Merge(a=a, b=b, dq=best_dq, q=q))
        q_sequence.append(q)

        row_b = between.pop(b)
        for other, count in row_b.items():
            if other == a:
                continue
            between[other].pop(b, None)
            between[other][a] = between[other].get(a, 0) + count
            between[a][other] = between[a].get(other, 0) + count
        between[a].pop(b, None)
        endpoint_frac[a] += endpoint_frac.pop(b)
        if progress is not None:
            progress(len(merges), total_budget)

    best_cut = 0
    best_q = q_singletons
    for k, value in enumerate(q_sequence, start=1):
        if value > best_q + TIE_EPS:
            best_q = value
            best_cut = k

    return Dendrogram(
        leaves=list(index.order),
        merges=merges,
        q_singletons=q_singletons,
        q_sequence=q_sequence,
        best_cut=best_cut,
        graph=graph,
    )


# ---------------------------------------------------------------------------
# dendrogram cuts and the membership matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutRule:
    kind: str  # "merges" | "clusters" | "max_q" | "max_q_minus"
    value: int = 0

    @classmethod
    def merges(cls, k: int) -> "CutRule":
        return cls("merges", k)

    @classmethod
    def clusters(cls, count: int) -> "CutRule":
        return cls("clusters", count)

    @classmethod
    def max_q(cls) -> "CutRule":
        return cls("max_q")

    @classmethod
    def max_q_minus(cls, back: int) -> "CutRule":
        return cls("max_q_minus", back)

    @classmethod
    def parse(cls, text: str) -> "CutRule":
        text = text.strip().lower()
        if text == "max_q":
            return cls.max_q()
        if "=" in text:
            kind, raw = text.split("=", 1)
            if kind in ("merges", "clusters", "max_q_minus"):
                return cls(kind, int(raw))
        raise ValueError(
            f"bad cut rule {text!r}; use max_q, max_q_minus=J, merges=K, or clusters=C"
        )

    def describe(self) -> str:
        return self.kind if self.kind == "max_q" else f"{self.kind}={self.value}"


def resolve_cut(dendrogram: Dendrogram, cut: CutRule) -> int:
    """Merge count selected by a cut rule, validated against the dendrogram."""
    n_merges = len(dendrogram.merges)
    if cut.kind == "merges":
        k = cut.value
    elif cut.kind == "clusters":
        k = len(dendrogram.leaves) - cut.value
    elif cut.kind == "max_q":
        k = dendrogram.best_cut
    elif cut.kind == "max_q_minus":
        k = dendrogram.best_cut - cut.value
    else:
        raise ValueError(f"unknown cut kind {cut.kind!r}")
    if k < 0 or k > n_merges:
        raise RangeError(f"cut {cut.describe()} resolves to {k}, outside [0, {n_merges}]")
    return k


def cut_dendrogram(dendrogram: Dendrogram, cut: CutRule) -> Partition:
    """Partition implied by the first ``k`` merges of the dendrogram."""
    k = resolve_cut(dendrogram, cut)
    members: dict[int, set[int]] = {leaf: {leaf} for leaf in dendrogram.leaves}
    for merge in dendrogram.merges[:k]:
        absorbed = members.pop(merge.b)
        members[merge.a] |= absorbed
    return Partition.from_communities(
        dendrogram.graph,
        members.values(),
        "CNM",
        {"rule": cut.describe(), "merges": k},
    )


@dataclass
class MembershipMatrix:
    nodes: list[int]
    levels: list[str]
    ids: list[list[int]]  # row per node, column per level

    def to_csv(self) -> str:
        lines = ["node," + ",".join(self.levels)]
        for node, row in zip(self.nodes, self.ids):
            lines.append(f"{node}," + ",".join(str(c) for c in row))
        return "\n".join(lines) + "\n"


def membership_matrix(
    dendrogram: Dendrogram, levels: Sequence[CutRule], nodes: Sequence[int]
) -> MembershipMatrix:
    """Community id of each node at each cut level.

    Ids are the smallest member id, so a community keeps its id until it is
    merged and the merged community takes the smaller of the two ids; a
    node's trajectory across granularities is therefore meaningful.
    """
    leaf_set = set(dendrogram.leaves)
    unknown = [n for n in nodes if n not in leaf_set]
    if unknown:
        raise CommunityNotFound(f"nodes not in dendrogram: {unknown[:5]}")
    columns = []
    for cut in levels:
        part = cut_dendrogram(dendrogram, cut)
        columns.append(part.membership())
    return MembershipMatrix(
        nodes=list(nodes),
        levels=[cut.describe() for cut in levels],
        ids=[[col[node] for col in columns] for node in nodes],
    )


# ---------------------------------------------------------------------------
# supervised edits
# ---------------------------------------------------------------------------


class SplitMethod(str, Enum):
    GN_LOCAL = "GN_LOCAL"
    CNM_LOCAL = "CNM_LOCAL"


def merge_communities(partition: Partition, ids: Sequence[int]) -> Partition:
    """Union the named communities into one; the originals are retained in
    params so the edit can be reversed exactly."""
    if len(ids) < 2:
        raise ValueError("need at least two community ids to merge")
    targets = {cid: partition.by_id(cid) for cid in ids}
    merged = frozenset().union(*targets.values())
    rest = [c for c in partition.communities if min(c) not in targets]
    params = {
        "edit": "merge",
        "merged_ids": sorted(targets),
        "originals": [sorted(targets[cid]) for cid in sorted(targets)],
        "prior_provenance": partition.provenance,
        "prior_params": dict(partition.params),
    }
    if partition.graph is None:
        raise ValueError("partition has no graph attached")
    return Partition.from_communities(
        partition.graph, rest + [merged], "MANUAL", params
    )


def unmerge_community(partition: Partition, cid: int) -> Partition:
    """Inverse of :func:`merge_communities` using the stored originals."""
    if partition.params.get("edit") != "merge":
        raise CannotSplit("community was not produced by a merge edit")
    target = partition.by_id(cid)
    originals = [frozenset(c) for c in partition.params["originals"]]
    if frozenset().union(*originals) != target:
        raise CannotSplit(f"community {cid} does not match the stored merge originals")
    rest = [c for c in partition.communities if c is not target]
    if partition.graph is None:
        raise ValueError("partition has no graph attached")
    return Partition.from_communities(
        partition.graph,
        rest + originals,
        partition.params.get("prior_provenance", "MANUAL"),
        dict(partition.params.get("prior_params", {})),
    )


def split_community(
    graph: InteractionGraph,
    partition: Partition,
    cid: int,
    method: SplitMethod = SplitMethod.GN_LOCAL,
) -> Partition:
    """Split one community by re-running a detector on its induced subgraph
    until it first yields two or more parts."""
    target = partition.by_id(cid)
    if len(target) < 2:
        raise CannotSplit(f"community {cid} is a singleton")
    sub = graph.subgraph(target)
    sub_components = connected_components(sub)
    if len(sub_components) >= 2:
        parts: list[frozenset[int]] = [frozenset(c) for c in sub_components]
    elif method == SplitMethod.GN_LOCAL:
        trace = girvan_newman(sub, StopRule.clusters(2))
        local = gn_partition_at(sub, trace, len(trace.steps))
        parts = list(local.communities)
    elif method == SplitMethod.CNM_LOCAL:
        dendro = cnm_fast_greedy(sub)
        best_k = None
        best_q = None
        for k in range(0, len(dendro.merges) + 1):
            if len(dendro.leaves) - k < 2:
                continue
            value = dendro.q_at(k)
            if best_q is None or value > best_q + TIE_EPS:
                best_q = value
                best_k = k
        assert best_k is not None
        local = cut_dendrogram(dendro, CutRule.merges(best_k))
        parts = list(local.communities)
    else:
        raise ValueError(f"unknown split method {method!r}")
    rest = [c for c in partition.communities if c is not target]
    return Partition.from_communities(
        graph,
        rest + parts,
        "MANUAL",
        {"edit": "split", "split_id": cid, "method": method.value},
    )

"""Stateful analysis sessions: windowed graph state, long-running jobs,
granularity control, and the collapsed/expanded community view.

Each session is single-writer: mutations serialize through the session lock
(concurrent attempts queue rather than fail) while readers always see the
last committed state. Algorithm jobs run off the mutation path on worker
threads and commit their result as one mutation. Every mutation is appended
to a JSONL log; replaying the log against a fresh session reproduces the
same state, which is also the crash-recovery path.
"""

from __future__ import annotations

import itertools
import json
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import community as comm
from . import metrics as metrics_mod
from .errors import (
    CallnetError,
    JobCancelled,
    NodeNotFound,
    NoPartition,
    RangeError,
)
from .graph import BuildPolicy, InteractionGraph, build_graph
from .records import CallRecord, parse_cdr
from .temporal import TimeWindow, filter_window

BOUNDARY_LABEL_LIMIT = 5


# ---------------------------------------------------------------------------
# collapsed/expanded view construction
# ---------------------------------------------------------------------------


@dataclass
class MacroNode:
    community: int
    size: int
    boundary: list[int]  # member ids adjacent to the expanded region (capped)
    boundary_omitted: int

    def to_json_dict(self) -> dict:
        return {
            "community": self.community,
            "size": self.size,
            "boundary": self.boundary,
            "boundary_omitted": self.boundary_omitted,
        }


@dataclass
class ViewGraph:
    """Mixed rendering state: expanded nodes plus one macro-node per
    collapsed community, with aggregated cross edges.

    ``expanded_members`` spells out which expanded node sits in which
    community so clients can draw hulls without re-deriving membership.
    """

    expanded_communities: list[int]
    expanded_nodes: list[int]
    expanded_members: dict[int, list[int]]
    node_edges: list[tuple[int, int, int]]  # (u, v, weight), both ends expanded
    macro_nodes: list[MacroNode]
    macro_edges: list[dict]  # {"src": endpoint, "dst": endpoint, "weight": int}
    selected: int | None
    hops: int
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "expanded_communities": self.expanded_communities,
            "expanded_nodes": self.expanded_nodes,
            "expanded_members": {
                str(cid): members for cid, members in sorted(self.expanded_members.items())
            },
            "node_edges": [
                {"src": u, "dst": v, "weight": w} for u, v, w in self.node_edges
            ],
            "macro_nodes": [m.to_json_dict() for m in self.macro_nodes],
            "macro_edges": self.macro_edges,
            "selected": self.selected,
            "hops": self.hops,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))


def quotient_adjacency(
    graph: InteractionGraph, membership: dict[int, int]
) -> dict[int, set[int]]:
    """Community-level adjacency: communities are linked when any member pair is."""
    adj: dict[int, set[int]] = {cid: set() for cid in set(membership.values())}
    for u, v in graph.undirected_index().pairs:
        cu, cv = membership[u], membership[v]
        if cu != cv:
            adj[cu].add(cv)
            adj[cv].add(cu)
    return adj


def _aligned_membership(
    graph: InteractionGraph, partition: comm.Partition
) -> tuple[dict[int, int], bool]:
    """Membership restricted to the current graph; uncovered nodes become
    singleton communities (happens only when the partition is stale)."""
    membership = {}
    changed = False
    nodes = set(graph.nodes())
    for community in partition.communities:
        live = community & nodes
        if len(live) != len(community):
            changed = True
        if live:
            cid = min(live)
            for node in live:
                membership[node] = cid
    for node in nodes - membership.keys():
        membership[node] = node
        changed = True
    return membership, changed


def view_with_hops(
    graph: InteractionGraph,
    partition: comm.Partition,
    selected: int | None,
    k: int,
    force_expanded: Sequence[int] = (),
    force_collapsed: Sequence[int] = (),
    warnings: Sequence[str] = (),
) -> ViewGraph:
    """Expand communities within ``k`` quotient hops of the selected node's
    community; collapse the rest into macro-nodes.

    ``k`` counts hops in the community quotient graph (whole communities
    expand together); k=0 expands only the selected node's own community.
    With no selection every community is expanded. Force-expand/collapse
    overrides apply last.
    """
    if selected is not None and not graph.has_node(selected):
        raise NodeNotFound(f"node {selected!r} not in graph")
    if k < 0:
        raise ValueError("hop parameter must be non-negative")

    membership, changed = _aligned_membership(graph, partition)
    warnings = list(warnings)
    if changed and "StalePartition" not in warnings:
        warnings.append("StalePartition")
    all_cids = sorted(set(membership.values()))

    if selected is None:
        expanded = set(all_cids)
    else:
        quotient = quotient_adjacency(graph, membership)
        start = membership[selected]
        dist = {start: 0}
        queue = deque([start])
        while queue:
            cid = queue.popleft()
            if dist[cid] >= k:
                continue
            for other in quotient[cid]:
                if other not in dist:
                    dist[other] = dist[cid] + 1
                    queue.append(other)
        expanded = set(dist)
    expanded |= {cid for cid in force_expanded if cid in set(all_cids)}
    expanded -= set(force_collapsed)

    members_of: dict[int, list[int]] = {cid: [] for cid in all_cids}
    for node, cid in membership.items():
        members_of[cid].append(node)

    expanded_nodes = sorted(n for n, cid in membership.items() if cid in expanded)
    expanded_set = set(expanded_nodes)

    node_edges: list[tuple[int, int, int]] = []
    macro_weight: dict[tuple, int] = {}
    boundary: dict[int, set[int]] = {cid: set() for cid in all_cids}
    index = graph.undirected_index()
    for (u, v), weight in zip(index.pairs, index.weights):
        cu, cv = membership[u], membership[v]
        u_in, v_in = u in expanded_set, v in expanded_set
        if u_in and v_in:
            node_edges.append((u, v, int(weight)))
            continue
        if u_in or v_in:
            node_end, macro_end = (u, cv) if u_in else (v, cu)
            hidden = v if u_in else u
            boundary[macro_end].add(hidden)
            key = (("node", node_end), ("macro", macro_end))
        else:
            if cu == cv:
                continue  # intra edge of a collapsed community stays hidden
            a, b = sorted((cu, cv))
            key = (("macro", a), ("macro", b))
        macro_weight[key] = macro_weight.get(key, 0) + int(weight)

    macro_nodes = []
    for cid in all_cids:
        if cid in expanded:
            continue
        labels = sorted(boundary[cid])
        macro_nodes.append(
            MacroNode(
                community=cid,
                size=len(members_of[cid]),
                boundary=labels[:BOUNDARY_LABEL_LIMIT],
                boundary_omitted=max(0, len(labels) - BOUNDARY_LABEL_LIMIT),
            )
        )

    macro_edges = [
        {
            "src": {"kind": kind_a, "id": id_a},
            "dst": {"kind": kind_b, "id": id_b},
            "weight": weight,
        }
        for ((kind_a, id_a), (kind_b, id_b)), weight in sorted(macro_weight.items())
    ]
    return ViewGraph(
        expanded_communities=sorted(expanded & set(all_cids)),
        expanded_nodes=expanded_nodes,
        expanded_members={
            cid: sorted(members_of[cid])
            for cid in sorted(expanded & set(all_cids))
        },
        node_edges=node_edges,
        macro_nodes=macro_nodes,
        macro_edges=macro_edges,
        selected=selected,
        hops=k,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# jobs
# ---------------------------------------------------------------------------


@dataclass
class Job:
    id: str
    kind: str
    state: str = "PENDING"  # PENDING RUNNING DONE FAILED CANCELLED
    done: int = 0
    total: int = 0
    error: str | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "state": self.state,
            "progress": {"done": self.done, "total": self.total},
            "error": self.error,
        }


# ---------------------------------------------------------------------------
# sessions
# ---------------------------------------------------------------------------


class Session:
    """One analyst's working state over a dataset.

    All mutations run under the session lock and append to the mutation log.
    """

    def __init__(
        self,
        session_id: str,
        dataset_id: str,
        records: Sequence[CallRecord],
        policy: BuildPolicy | None = None,
        log_path: Path | None = None,
    ):
        self.id = session_id
        self.dataset_id = dataset_id
        self.records_all = list(records)
        self.policy = policy or BuildPolicy()
        self.lock = threading.RLock()
        self.log_path = log_path

        self.window: TimeWindow | None = None
        self.graph: InteractionGraph = build_graph(self.records_all, self.policy)
        self.partition: comm.Partition | None = None
        self.partition_stale = False
        self.dendrogram: comm.Dendrogram | None = None
        self.dendrogram_stale = False
        self.trace: comm.GnTrace | None = None
        self.trace_graph: InteractionGraph | None = None
        self.trace_stale = False
        self.metric_vectors: dict[str, metrics_mod.CentralityVector] = {}

        self.selected: int | None = None
        self.hops = 0
        self.force_expanded: set[int] = set()
        self.force_collapsed: set[int] = set()

        self.jobs: dict[str, Job] = {}
        self.mutation_log: list[dict] = []

    # -- logging -----------------------------------------------------------

    def _log(self, op: str, **args) -> None:
        entry = {"seq": len(self.mutation_log), "op": op, "args": args}
        self.mutation_log.append(entry)
        if self.log_path is not None:
            with self.log_path.open("a") as handle:
                handle.write(json.dumps(entry, sort_keys=True) + "\n")

    def windowed_records(self) -> list[CallRecord]:
        return filter_window(self.records_all, self.window)

    # -- mutations ---------------------------------------------------------

    def set_window(self, window: TimeWindow | None) -> None:
        with self.lock:
            self.window = window
            self.graph = build_graph(self.windowed_records(), self.policy)
            if self.partition is not None:
                self.partition_stale = True
            if self.dendrogram is not None:
                self.dendrogram_stale = True
            if self.trace is not None:
                self.trace_stale = True
            if self.selected is not None and not self.graph.has_node(self.selected):
                self.selected = None
            self._log("set_window", window=window.describe() if window else None)

    def select_node(self, node: int | None) -> None:
        with self.lock:
            if node is not None and not self.graph.has_node(node):
                raise NodeNotFound(f"node {node!r} not in graph")
            self.selected = node
            self._log("select_node", node=node)

    def set_hops(
        self,
        k: int,
        force_expanded: Sequence[int] | None = None,
        force_collapsed: Sequence[int] | None = None,
    ) -> None:
        with self.lock:
            if k < 0:
                raise ValueError("hop parameter must be non-negative")
            self.hops = k
            if force_expanded is not None:
                self.force_expanded = set(force_expanded)
            if force_collapsed is not None:
                self.force_collapsed = set(force_collapsed)
            self._log(
                "set_hops",
                k=k,
                force_expanded=sorted(self.force_expanded),
                force_collapsed=sorted(self.force_collapsed),
            )

    def set_granularity(
        self, rule: comm.CutRule | None = None, deletions: int | None = None
    ) -> None:
        """Pick the active partition from the last dendrogram (cut rule) or
        deletion trace (deletion count)."""
        with self.lock:
            if rule is not None:
                if self.dendrogram is None:
                    raise NoPartition("no merge dendrogram computed yet")
                self.partition = comm.cut_dendrogram(self.dendrogram, rule)
                self.partition_stale = self.dendrogram_stale
                self._log("set_granularity", rule=rule.describe())
            elif deletions is not None:
                if self.trace is None or self.trace_graph is None:
                    raise NoPartition("no deletion trace computed yet")
                if deletions > len(self.trace.steps):
                    raise RangeError(
                        f"trace has only {len(self.trace.steps)} deletions"
                    )
                self.partition = comm.gn_partition_at(
                    self.trace_graph, self.trace, deletions
                )
                self.partition_stale = self.trace_stale
                self._log("set_granularity", deletions=deletions)
            else:
                raise ValueError("set_granularity needs a cut rule or a deletion count")
            self.force_expanded.clear()
            self.force_collapsed.clear()

    def manual_edit(self, action: str, **kwargs) -> comm.ModularityReport:
        """Merge or split communities of the active partition; the modularity
        consequence is re-reported to the caller."""
        with self.lock:
            if self.partition is None:
                raise NoPartition("no active partition to edit")
            base_graph = self.partition.graph or self.graph
            if action == "merge":
                self.partition = comm.merge_communities(self.partition, kwargs["ids"])
            elif action == "split":
                method = comm.SplitMethod(kwargs.get("method", "GN_LOCAL"))
                self.partition = comm.split_community(
                    base_graph, self.partition, kwargs["id"], method
                )
            elif action == "unmerge":
                self.partition = comm.unmerge_community(self.partition, kwargs["id"])
            else:
                raise ValueError(f"unknown edit action {action!r}")
            self._log("manual_edit", action=action, **kwargs)
            return comm.modularity(base_graph, self.partition)

    # -- job bodies (synchronous; the manager wraps them in workers) --------

    def run_metrics_sync(self, names: Sequence[str], job: Job | None = None) -> None:
        graph = self.graph
        computed: dict[str, metrics_mod.CentralityVector] = {}
        total = len(names)
        for i, name in enumerate(names):
            if job is not None and job.cancel_event.is_set():
                raise JobCancelled("metrics job cancelled")
            computed[name] = compute_metric(graph, name)
            if job is not None:
                job.done, job.total = i + 1, total
        with self.lock:
            self.metric_vectors.update(computed)
            self._log("commit_metrics", names=list(names))

    def run_gn_sync(self, stop: comm.StopRule, job: Job | None = None) -> None:
        graph = self.graph

        def progress(done: int, total: int) -> None:
            if job is not None:
                job.done, job.total = done, total

        trace = comm.girvan_newman(
            graph,
            stop,
            progress=progress,
            cancel=job.cancel_event if job is not None else None,
        )
        with self.lock:
            self.trace = trace
            self.trace_graph = graph
            self.trace_stale = False
            self._log("commit_gn", stop=stop.describe())

    def run_cnm_sync(self, job: Job | None = None) -> None:
        graph = self.graph

        def progress(done: int, total: int) -> None:
            if job is not None:
                job.done, job.total = done, total

        dendrogram = comm.cnm_fast_greedy(
            graph,
            progress=progress,
            cancel=job.cancel_event if job is not None else None,
        )
        with self.lock:
            self.dendrogram = dendrogram
            self.dendrogram_stale = False
            self._log("commit_cnm")

    # -- reads ---------------------------------------------------------------

    def get_view(self) -> ViewGraph:
        with self.lock:
            if self.partition is None:
                raise NoPartition("no active partition; run a clustering job first")
            warnings = ["StalePartition"] if self.partition_stale else []
            return view_with_hops(
                self.graph,
                self.partition,
                self.selected,
                self.hops,
                force_expanded=self.force_expanded,
                force_collapsed=self.force_collapsed,
                warnings=warnings,
            )


def compute_metric(graph: InteractionGraph, name: str) -> metrics_mod.CentralityVector:
    name = name.lower()
    if name == "degree":
        return metrics_mod.degree(graph, metrics_mod.Metric.DEGREE_NEIGHBOR)
    if name == "degree_interaction":
        return metrics_mod.degree(graph, metrics_mod.Metric.DEGREE_INTERACTION)
    if name == "betweenness":
        return metrics_mod.betweenness_nodes(graph)
    if name == "closeness":
        return metrics_mod.closeness(graph)
    if name == "eigenvector":
        return metrics_mod.eigenvector(graph)
    if name == "pagerank":
        return metrics_mod.pagerank(graph)
    if name == "clustering":
        vector, _ = metrics_mod.clustering_coefficient(graph)
        return vector
    raise ValueError(f"unknown metric {name!r}")


METRIC_NAMES = (
    "degree",
    "degree_interaction",
    "betweenness",
    "closeness",
    "eigenvector",
    "pagerank",
    "clustering",
)


# ---------------------------------------------------------------------------
# manager: dataset store + session registry + worker pool
# ---------------------------------------------------------------------------


class SessionManager:
    """Owns sessions, their worker pool, and the mutation-log directory."""

    def __init__(self, workers: int = 2, log_dir: Path | None = None):
        from concurrent.futures import ThreadPoolExecutor

        self.sessions: dict[str, Session] = {}
        self.executor = ThreadPoolExecutor(max_workers=max(1, workers))
        self.log_dir = log_dir
        self._counter = itertools.count(1)
        self._lock = threading.Lock()

    def create(
        self,
        dataset_id: str,
        records: Sequence[CallRecord],
        policy: BuildPolicy | None = None,
    ) -> Session:
        with self._lock:
            session_id = f"s{next(self._counter):04d}-{uuid.uuid4().hex[:8]}"
        log_path = None
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            log_path = self.log_dir / f"{session_id}.jsonl"
        session = Session(session_id, dataset_id, records, policy, log_path)
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NodeNotFound(f"no session {session_id!r}") from None

    def submit_job(self, session: Session, kind: str, body: Callable[[Job], None]) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], kind=kind)
        session.jobs[job.id] = job

        def runner() -> None:
            job.state = "RUNNING"
            try:
                body(job)
            except JobCancelled:
                job.state = "CANCELLED"
            except CallnetError as exc:
                job.state = "FAILED"
                job.error = str(exc)
            except Exception as exc:  # defensive: surface, don't swallow
                job.state = "FAILED"
                job.error = f"{type(exc).__name__}: {exc}"
            else:
                job.state = "DONE"

        self.executor.submit(runner)
        return job

    def cancel_job(self, session: Session, job_id: str) -> Job:
        job = session.jobs.get(job_id)
        if job is None:
            raise NodeNotFound(f"no job {job_id!r}")
        job.cancel_event.set()
        return job

    @staticmethod
    def wait_for(job: Job, timeout: float = 60.0) -> Job:
        deadline = time.monotonic() + timeout
        while job.state in ("PENDING", "RUNNING"):
            if time.monotonic() > deadline:
                raise TimeoutError(f"job {job.id} still {job.state} after {timeout}s")
            time.sleep(0.01)
        return job


def replay_mutations(session: Session, entries: Sequence[dict]) -> Session:
    """Re-apply a mutation log to a fresh session (crash recovery).

    Job commits re-run their algorithm; all algorithms are deterministic, so
    the rebuilt state matches the logged session's final state.
    """
    for entry in entries:
        op = entry["op"]
        args = entry.get("args", {})
        if op == "set_window":
            window = TimeWindow.parse(args["window"]) if args.get("window") else None
            session.set_window(window)
        elif op == "select_node":
            session.select_node(args.get("node"))
        elif op == "set_hops":
            session.set_hops(
                args["k"], args.get("force_expanded"), args.get("force_collapsed")
            )
        elif op == "set_granularity":
            if args.get("rule") is not None:
                session.set_granularity(rule=comm.CutRule.parse(args["rule"]))
            else:
                session.set_granularity(deletions=args["deletions"])
        elif op == "manual_edit":
            kwargs = {k: v for k, v in args.items() if k != "action"}
            session.manual_edit(args["action"], **kwargs)
        elif op == "commit_metrics":
            session.run_metrics_sync(args["names"])
        elif op == "commit_gn":
            session.run_gn_sync(comm.StopRule.parse(args["stop"]))
        elif op == "commit_cnm":
            session.run_cnm_sync()
        else:
            raise ValueError(f"unknown log op {op!r}")
    return session


def load_canonical_records(path: Path) -> list[CallRecord]:
    """Read a canonical anonymized CSV back into records with integer ids."""
    from dataclasses import replace

    records, errors = parse_cdr(path)
    if errors:
        raise ValueError(f"canonical store is corrupt: {errors[:3]}")
    return [
        replace(rec, caller=int(rec.caller), callee=int(rec.callee)) for rec in records
    ]

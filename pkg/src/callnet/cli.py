"""Batch command-line front-end over the same core as the service.

Every command reads and writes the canonical formats (CDR CSV, graph JSON,
partition JSON, trace CSV, dendrogram JSON) and drops a ``manifest.json``
into the output directory listing outputs with content hashes and wall-clock
per stage. Exit codes: 0 success, 1 usage error, 2 data error.

``--seed`` is accepted everywhere for pipeline uniformity; the analysis
algorithms are deterministic (fixed tie-breaking) and ignore it — only the
fixture generator consumes it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from datetime import timedelta
from pathlib import Path

from . import __version__
from . import community as comm
from .errors import CallnetError
from .graph import (
    BuildPolicy,
    InteractionGraph,
    build_graph,
    edge_list_csv,
    overall_metrics,
)
from .metrics import Metric, TopTable, degree, betweenness_nodes, pagerank
from .records import (
    CdrFormatConfig,
    EventType,
    anonymize,
    parse_cdr,
    serialize_cdr,
    summarize,
)
from .session import METRIC_NAMES, compute_metric, view_with_hops
from .synth import SynthConfig, planted_records
from .temporal import TimeWindow, activity_series, event_points, filter_window


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 (argparse default is 2, which we reserve for data errors)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class Manifest:
    def __init__(self, command: str, args: dict, out_dir: Path):
        self.command = command
        self.args = {k: v for k, v in args.items() if v is not None}
        self.out_dir = out_dir
        self.stages: list[dict] = []
        self.outputs: list[dict] = []
        self._stage_start = time.perf_counter()

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.stages.append({"name": name, "seconds": round(now - self._stage_start, 6)})
        self._stage_start = now

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.outputs.append(
            {"path": name, "sha256": hashlib.sha256(text.encode()).hexdigest()}
        )
        return path

    def finish(self) -> None:
        payload = {
            "command": self.command,
            "args": {k: str(v) for k, v in self.args.items()},
            "versions": {
                "callnet": __version__,
                "python": platform.python_version(),
            },
            "stages": self.stages,
            "outputs": self.outputs,
        }
        (self.out_dir / "manifest.json").write_text(json.dumps(payload, indent=2))


def _start(args, command: str) -> Manifest:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return Manifest(command, vars(args).copy(), out_dir)


def _load_records(path: str, fmt_path: str | None = None):
    fmt = CdrFormatConfig.load(fmt_path) if fmt_path else None
    records, errors = parse_cdr(Path(path), fmt)
    return records, errors


def _load_canonical(path: str):
    from .session import load_canonical_records

    return load_canonical_records(Path(path))


def _load_graph(path: str) -> InteractionGraph:
    return InteractionGraph.from_json_dict(json.loads(Path(path).read_text()))


def _load_partition(path: str, graph: InteractionGraph) -> comm.Partition:
    payload = json.loads(Path(path).read_text())
    return comm.Partition.from_communities(
        graph,
        payload["communities"],
        payload.get("provenance", "MANUAL"),
        payload.get("params", {}),
    )


def _build_policy(args) -> BuildPolicy:
    edge_types = BuildPolicy().edge_types
    if getattr(args, "edge_types", None):
        edge_types = frozenset(
            EventType(token.strip().upper()) for token in args.edge_types.split(",")
        )
    return BuildPolicy(edge_types=edge_types, directed=not getattr(args, "undirected", False))


def _parse_bins(text: str) -> timedelta:
    units = {"s": 1, "m": 60, "h": 3600, "d": 86400}
    text = text.strip().lower()
    if text[-1] in units:
        return timedelta(seconds=float(text[:-1]) * units[text[-1]])
    return timedelta(seconds=float(text))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    manifest = _start(args, "ingest")
    records, errors = _load_records(args.input, args.format)
    manifest.stage("parse")
    anonymized, identity = anonymize(records)
    manifest.stage("anonymize")
    manifest.write_text("records.csv", serialize_cdr(anonymized))
    summary = summarize(anonymized, errors)
    manifest.write_text("summary.json", json.dumps(summary.to_json_dict(), indent=2))
    if errors:
        lines = ["line,reason,detail"]
        lines += [f"{e.line},{e.reason},{e.detail}" for e in errors]
        manifest.write_text("errors.csv", "\n".join(lines) + "\n")
        for err in errors:
            print(f"line {err.line}: {err.reason} {err.detail}".rstrip(), file=sys.stderr)
    if args.identity_out:
        identity.save(args.identity_out)  # only on explicit request
    manifest.stage("write")
    manifest.finish()
    print(f"ingested {summary.record_count} records "
          f"({summary.dropped_rows} dropped, {summary.duplicates_collapsed} duplicates)")
    return 0


def cmd_graph(args) -> int:
    manifest = _start(args, "graph")
    records = _load_canonical(args.records)
    if args.window:
        records = filter_window(records, TimeWindow.parse(args.window))
    manifest.stage("load")
    graph = build_graph(records, _build_policy(args))
    manifest.stage("build")
    manifest.write_text("graph.json", graph.to_json())
    manifest.stage("write")
    manifest.finish()
    print(f"graph: {graph.node_count} nodes, {graph.edge_count} edges, "
          f"{graph.self_loops_dropped} self-loop events dropped")
    return 0


def cmd_metrics(args) -> int:
    manifest = _start(args, "metrics")
    graph = _resolve_graph(args)
    manifest.stage("load")
    names = [n.strip() for n in args.metrics.split(",")] if args.metrics else list(METRIC_NAMES)
    combined = {}
    for name in names:
        vector = compute_metric(graph, name)
        manifest.write_text(f"metric_{name}.csv", vector.to_csv())
        combined[name] = vector.to_json_dict()
    manifest.stage("compute")
    manifest.write_text("metrics.json", json.dumps(combined, indent=2, sort_keys=True))
    manifest.stage("write")
    manifest.finish()
    print(f"computed {len(names)} metric vectors over {graph.node_count} nodes")
    return 0


def cmd_gn(args) -> int:
    manifest = _start(args, "gn")
    graph = _resolve_graph(args)
    manifest.stage("load")
    stop = comm.StopRule.parse(args.stop) if args.stop else comm.StopRule.exhaust()
    trace = comm.girvan_newman(graph, stop)
    manifest.stage("trace")
    if args.stop:
        deletions = len(trace.steps)
        partition = comm.gn_partition_at(graph, trace, deletions)
    else:
        # batch default: best-modularity prefix of the full trace
        partition, deletions = comm.gn_best_q_partition(graph, trace)
    manifest.write_text("trace.csv", trace.to_csv())
    manifest.write_text(
        "trace.json", json.dumps(trace.to_json_dict(), sort_keys=True, separators=(",", ":"))
    )
    manifest.write_text("partition.json", comm.partition_json(graph, partition))
    manifest.stage("write")
    manifest.finish()
    last = trace.steps[-1].components_after if trace.steps else trace.initial_components
    print(f"deleted {len(trace.steps)} edges, {last} clusters; "
          f"partition written at {deletions} deletions")
    return 0


def cmd_cnm(args) -> int:
    manifest = _start(args, "cnm")
    graph = _resolve_graph(args)
    manifest.stage("load")
    dendrogram = comm.cnm_fast_greedy(graph)
    manifest.stage("merge")
    manifest.write_text("dendrogram.json", dendrogram.to_json())
    manifest.stage("write")
    manifest.finish()
    best = dendrogram.q_at(dendrogram.best_cut)
    print(f"{len(dendrogram.merges)} merges; best cut at {dendrogram.best_cut} "
          f"(q={best:.4f})")
    return 0


def cmd_cut(args) -> int:
    manifest = _start(args, "cut")
    graph = _load_graph(args.graph)
    if args.dendrogram:
        payload = json.loads(Path(args.dendrogram).read_text())
        dendrogram = _dendrogram_from_json(payload, graph)
        rule = comm.CutRule.parse(args.rule)
        partition = comm.cut_dendrogram(dendrogram, rule)
    elif args.trace:
        trace = _trace_from_json(json.loads(Path(args.trace).read_text()))
        if args.deletions is not None:
            partition = comm.gn_partition_at(graph, trace, args.deletions)
        elif args.clusters is not None:
            partition, _ = comm.gn_partition_for_clusters(graph, trace, args.clusters)
        else:
            raise CallnetError("cut from a trace needs --deletions or --clusters")
    else:
        raise CallnetError("cut needs --dendrogram or --trace")
    manifest.stage("cut")
    manifest.write_text("partition.json", comm.partition_json(graph, partition))
    manifest.stage("write")
    manifest.finish()
    report = comm.modularity(graph, partition)
    print(f"{len(partition)} communities, q={report.q:.4f}")
    return 0


def cmd_view(args) -> int:
    manifest = _start(args, "view")
    graph = _load_graph(args.graph)
    partition = _load_partition(args.partition, graph)
    manifest.stage("load")
    view = view_with_hops(
        graph,
        partition,
        args.select,
        args.hops,
        force_expanded=args.expand or (),
        force_collapsed=args.collapse or (),
    )
    manifest.write_text("view.json", view.to_json())
    manifest.stage("write")
    manifest.finish()
    print(f"{len(view.expanded_nodes)} nodes expanded, {len(view.macro_nodes)} macro-nodes")
    return 0


def cmd_temporal(args) -> int:
    manifest = _start(args, "temporal")
    records = _load_canonical(args.records)
    window = TimeWindow.parse(args.window) if args.window else None
    partition = None
    if args.grouping == "community":
        if not args.partition or not args.graph:
            raise CallnetError("community grouping needs --partition and --graph")
        partition = _load_partition(args.partition, _load_graph(args.graph))
    manifest.stage("load")
    series = activity_series(
        records,
        grouping=args.grouping,
        bin_width=_parse_bins(args.bins) if args.bins else None,
        window=window,
        partition=partition,
    )
    points = event_points(records, window)
    manifest.stage("aggregate")
    manifest.write_text("series.csv", series.to_csv())
    manifest.write_text(
        "series.json", json.dumps(series.to_json_dict(), sort_keys=True, separators=(",", ":"))
    )
    manifest.write_text(
        "events.json",
        json.dumps([p.to_json_dict() for p in points], sort_keys=True, separators=(",", ":")),
    )
    manifest.stage("write")
    manifest.finish()
    print(f"{len(series.rows)} rows x {len(series.bins)} bins; {len(points)} scatter points")
    return 0


def cmd_export(args) -> int:
    manifest = _start(args, "export")
    graph = _load_graph(args.graph)
    manifest.stage("load")
    if args.to == "graphml":
        manifest.write_text("graph.graphml", graph.to_graphml())
    elif args.to == "json":
        manifest.write_text("graph.json", graph.to_json())
    elif args.to == "edges":
        manifest.write_text("edges.csv", edge_list_csv(graph))
    else:
        raise CallnetError(f"unknown export target {args.to!r}")
    manifest.stage("write")
    manifest.finish()
    return 0


def cmd_report(args) -> int:
    manifest = _start(args, "report")
    if args.records:
        records = _load_canonical(args.records)
        graph = build_graph(records, _build_policy(args))
        summary = summarize(records)
    else:
        graph = _resolve_graph(args)
        summary = None
    manifest.stage("load")

    overall = overall_metrics(graph)
    rows = [
        ("Network type", "directed" if graph.directed else "undirected"),
        ("Vertices", overall.node_count),
        ("Edges", overall.edge_count),
        ("Connected components", overall.connected_components),
        ("Self-loop events", overall.self_loops),
        ("Maximum geodesic distance", overall.max_geodesic),
        ("Average geodesic distance", round(overall.avg_geodesic, 3)),
        ("Network density", round(overall.density, 3)),
    ]
    if summary is not None:
        rows.append(("Records", summary.record_count))
        for event_type in EventType:
            rows.append(
                (event_type.value.title(), summary.counts_by_type.get(event_type, 0))
            )
    overall_table = TopTable(headers=["metric", "value"], rows=[tuple(r) for r in rows])

    interaction = degree(graph, Metric.DEGREE_INTERACTION)
    btw = betweenness_nodes(graph)
    pr = pagerank(graph)
    ranked = interaction.top(args.top)
    top = TopTable(
        headers=["vertex", "degree", "betweenness", "pagerank"],
        rows=[
            (node, value, btw.values[node], pr.values[node]) for node, value in ranked
        ],
    )
    manifest.stage("compute")

    manifest.write_text("overall.csv", overall_table.to_csv())
    manifest.write_text("overall.txt", overall_table.to_text())
    manifest.write_text("top.csv", top.to_csv())
    manifest.write_text("top.txt", top.to_text())
    manifest.stage("write")
    manifest.finish()
    print(overall_table.to_text())
    print(top.to_text())
    return 0


def cmd_synth(args) -> int:
    manifest = _start(args, "synth")
    config = SynthConfig(
        clan_count=args.clans,
        clan_size=args.clan_size,
        bridges=args.bridges,
        intra_prob=args.intra_prob,
        events_per_edge=args.events_per_edge,
        days=args.days,
        seed=args.seed,
        noise_events=args.noise,
        identifier_prefix=args.prefix,
    )
    records, spec = planted_records(config)
    manifest.stage("generate")
    manifest.write_text("cdr.csv", serialize_cdr(records))
    manifest.write_text(
        "planted.json", json.dumps(spec.to_json_dict(), sort_keys=True, separators=(",", ":"))
    )
    manifest.stage("write")
    manifest.finish()
    print(f"{len(records)} events over {spec.node_count} nodes "
          f"({len(spec.bridges)} bridges between {len(spec.clans)} clans)")
    return 0


def _resolve_graph(args) -> InteractionGraph:
    if getattr(args, "graph", None):
        return _load_graph(args.graph)
    if getattr(args, "records", None):
        records = _load_canonical(args.records)
        return build_graph(records, _build_policy(args))
    raise CallnetError("need --graph or --records")


def _dendrogram_from_json(payload: dict, graph: InteractionGraph) -> comm.Dendrogram:
    merges = [
        comm.Merge(a=m["a"], b=m["b"], dq=m["dq"], q=m["q"]) for m in payload["merges"]
    ]
    q_sequence = [m.q for m in merges]
    q_singletons = merges[0].q - merges[0].dq if merges else 0.0
    return comm.Dendrogram(
        leaves=graph.nodes(),
        merges=merges,
        q_singletons=q_singletons,
        q_sequence=q_sequence,
        best_cut=payload["best_cut"],
        graph=graph,
    )


def _trace_from_json(payload: dict) -> comm.GnTrace:
    steps = [
        comm.GnStep(tuple(s["edge"]), s["betweenness"], s["components_after"])
        for s in payload["steps"]
    ]
    return comm.GnTrace(
        steps=steps,
        initial_components=payload["initial_components"],
        node_count=payload["node_count"],
    )


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="callnet", description=__doc__)
    parser.add_argument("--version", action="version", version=f"callnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=7, help="RNG seed (generators only)")
        return p

    p = common(sub.add_parser("ingest", help="parse, deduplicate, anonymize a raw CDR file"))
    p.add_argument("--input", required=True)
    p.add_argument("--format", help="column-mapping config for non-canonical layouts")
    p.add_argument("--identity-out", help="write the identity map here (off by default)")
    p.set_defaults(func=cmd_ingest)

    p = common(sub.add_parser("graph", help="build the interaction graph"))
    p.add_argument("--records", required=True, help="canonical records.csv")
    p.add_argument("--edge-types", help="comma list of edge-forming types")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--window", help="START..END (ISO-8601)")
    p.set_defaults(func=cmd_graph)

    p = common(sub.add_parser("metrics", help="compute centrality vectors"))
    p.add_argument("--records")
    p.add_argument("--graph")
    p.add_argument("--metrics", help=f"comma list from: {', '.join(METRIC_NAMES)}")
    p.set_defaults(func=cmd_metrics)

    p = common(sub.add_parser("gn", help="divisive clustering with deletion trace"))
    p.add_argument("--records")
    p.add_argument("--graph")
    p.add_argument("--stop", help="clusters=K | deletions=N | exhaust")
    p.set_defaults(func=cmd_gn)

    p = common(sub.add_parser("cnm", help="greedy agglomerative clustering"))
    p.add_argument("--records")
    p.add_argument("--graph")
    p.set_defaults(func=cmd_cnm)

    p = common(sub.add_parser("cut", help="partition from a dendrogram or trace"))
    p.add_argument("--graph", required=True)
    p.add_argument("--dendrogram")
    p.add_argument("--rule", default="max_q", help="max_q | max_q_minus=J | merges=K | clusters=C")
    p.add_argument("--trace")
    p.add_argument("--deletions", type=int)
    p.add_argument("--clusters", type=int)
    p.set_defaults(func=cmd_cut)

    p = common(sub.add_parser("view", help="collapsed/expanded community view"))
    p.add_argument("--graph", required=True)
    p.add_argument("--partition", required=True)
    p.add_argument("--select", type=int)
    p.add_argument("--hops", type=int, default=0)
    p.add_argument("--expand", type=int, nargs="*")
    p.add_argument("--collapse", type=int, nargs="*")
    p.set_defaults(func=cmd_view)

    p = common(sub.add_parser("temporal", help="event scatter and activity series"))
    p.add_argument("--records", required=True)
    p.add_argument("--grouping", choices=["node", "community"], default="node")
    p.add_argument("--partition")
    p.add_argument("--graph")
    p.add_argument("--bins", help="bin width, e.g. 1d, 6h, 900s")
    p.add_argument("--window", help="START..END (ISO-8601)")
    p.set_defaults(func=cmd_temporal)

    p = common(sub.add_parser("export", help="export a graph to other formats"))
    p.add_argument("--graph", required=True)
    p.add_argument("--to", choices=["graphml", "json", "edges"], default="graphml")
    p.set_defaults(func=cmd_export)

    p = common(sub.add_parser("report", help="overall metrics and top-k centrality tables"))
    p.add_argument("--records")
    p.add_argument("--graph")
    p.add_argument("--edge-types")
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--top", type=int, default=15)
    p.set_defaults(func=cmd_report)

    p = common(sub.add_parser("synth", help="generate a planted-clan CDR fixture"))
    p.add_argument("--clans", type=int, default=10)
    p.add_argument("--clan-size", type=int, default=15)
    p.add_argument("--bridges", type=int)
    p.add_argument("--intra-prob", type=float, default=1.0)
    p.add_argument("--events-per-edge", type=float, default=3.0)
    p.add_argument("--days", type=int, default=15)
    p.add_argument("--noise", type=int, default=0)
    p.add_argument("--prefix", default="")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CallnetError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"callnet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

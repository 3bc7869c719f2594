"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its measured numbers.

Run with ``pytest tests/test_acceptance.py -v -s``. Tolerances and time
budgets are pinned here, not calibrated elsewhere.
"""

from __future__ import annotations

import json
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from callnet import _accel
from callnet.cli import main as cli_main
from callnet.community import (
    CutRule,
    Partition,
    StopRule,
    cnm_fast_greedy,
    cut_dendrogram,
    girvan_newman,
    gn_partition_at,
    modularity,
)
from callnet.graph import build_graph, density_undirected
from callnet.metrics import betweenness_edges, betweenness_nodes
from callnet.records import serialize_cdr
from callnet.session import view_with_hops
from callnet.synth import SynthConfig, planted_records, planted_structure
from callnet.temporal import TimeWindow, activity_series, filter_window

from conftest import (
    BARBELL_EDGES,
    BARBELL_TRIANGLES,
    brute_betweenness,
    graph_from_edges,
    naive_modularity,
    random_partition,
    random_simple_graph,
    set_partitions,
)


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] {status} {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    _accel.warmup()  # JIT compile outside any timed region


def test_modularity_oracle():
    """Partition score matches the naive double-loop evaluation,
    >=200 random (graph, partition) pairs, n <= 10, tol 1e-12, < 5 s."""
    rng = random.Random(20130301)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        nodes, edges = random_simple_graph(rng, rng.randint(2, 10), 0.3)
        graph = graph_from_edges(edges, nodes=nodes)
        communities = random_partition(rng, nodes)
        expected = naive_modularity(nodes, edges, communities)
        got = modularity(graph, communities).q
        worst = max(worst, abs(got - expected))
        assert abs(got - expected) <= 1e-12
    elapsed = time.perf_counter() - started
    report(
        "modularity-oracle",
        worst <= 1e-12 and elapsed < 5.0,
        f"200 pairs, worst |dq|={worst:.2e}, {elapsed:.2f}s",
    )


def test_barbell_maximum():
    """Exhaustive partition search confirms Q_max = 5/14 at the two
    triangles; one deletion of the divisive path and the agglomerative best
    cut both return it. tol 1e-9, < 1 s."""
    started = time.perf_counter()
    graph = graph_from_edges(BARBELL_EDGES)
    nodes = graph.nodes()

    best_q, best_parts = None, None
    for parts in set_partitions(nodes):
        q = naive_modularity(nodes, BARBELL_EDGES, parts)
        if best_q is None or q > best_q:
            best_q, best_parts = q, parts
    brute_ok = abs(best_q - 5 / 14) <= 1e-9
    argmax_ok = sorted(sorted(p) for p in best_parts) == [[1, 2, 3], [4, 5, 6]]

    trace = girvan_newman(graph, StopRule.clusters(2))
    gn_part = gn_partition_at(graph, trace, 1)
    gn_ok = [set(c) for c in gn_part.communities] == BARBELL_TRIANGLES
    gn_q = modularity(graph, gn_part).q

    dendro = cnm_fast_greedy(graph)
    cnm_part = cut_dendrogram(dendro, CutRule.max_q())
    cnm_ok = [set(c) for c in cnm_part.communities] == BARBELL_TRIANGLES
    cnm_q = modularity(graph, cnm_part).q

    elapsed = time.perf_counter() - started
    report(
        "barbell-maximum",
        brute_ok
        and argmax_ok
        and gn_ok
        and cnm_ok
        and abs(gn_q - 5 / 14) <= 1e-9
        and abs(cnm_q - 5 / 14) <= 1e-9
        and elapsed < 1.0,
        f"Q_max={best_q:.6f} over 203 partitions, {elapsed:.2f}s",
    )


def test_betweenness_oracle():
    """Accumulation kernels equal brute-force path enumeration on >=100
    random connected graphs, n <= 12, tol 1e-9, < 30 s."""
    rng = random.Random(4242)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = rng.randint(2, 12)
        nodes, edges = random_simple_graph(rng, n, 0.25)
        graph = graph_from_edges(edges, nodes=nodes)
        expected_nodes, expected_edges = brute_betweenness(nodes, edges)
        got_nodes = betweenness_nodes(graph).values
        got_edges = betweenness_edges(graph).values
        for node in nodes:
            worst = max(worst, abs(got_nodes[node] - expected_nodes[node]))
        for pair, value in expected_edges.items():
            worst = max(worst, abs(got_edges[pair] - value))
        assert worst <= 1e-9
    elapsed = time.perf_counter() - started
    report(
        "betweenness-oracle",
        worst <= 1e-9 and elapsed < 30.0,
        f"100 graphs, worst |d|={worst:.2e}, {elapsed:.2f}s",
    )


def test_density_spot_value():
    """381 nodes / 428 undirected edges: density 428/72390 = 0.00591...,
    printed as 0.006 at three decimals. Exact arithmetic."""
    exact = Fraction(2 * 428, 381 * 380)
    assert exact == Fraction(428, 72390)
    value = density_undirected(381, 428)
    assert value == 2.0 * 428 / (381 * 380)
    # rounds to 0.006: |exact - 6/1000| < 1/2000, checked in exact arithmetic
    assert abs(exact - Fraction(6, 1000)) < Fraction(1, 2000)
    assert round(value, 3) == 0.006
    report("density-spot-value", True, f"density={value:.5f} -> 0.006")


def test_gn_planted_trace_consistency():
    """Ten planted clans, b inter-clan bridges: the first b deletions are
    exactly the bridges and the cluster count reaches 10; n ~ 150, < 60 s."""
    started = time.perf_counter()
    spec = planted_structure(10, 15, bridges=46, seed=3)
    graph = graph_from_edges(spec.intra_edges + spec.bridges)
    assert graph.node_count == 150
    trace = girvan_newman(graph, StopRule.deletions(len(spec.bridges)))
    removed = {step.edge for step in trace.steps}
    bridges_first = removed == set(spec.bridges)
    clusters_ok = trace.steps[-1].components_after == 10
    elapsed = time.perf_counter() - started
    report(
        "gn-planted-trace",
        bridges_first and clusters_ok and elapsed < 60.0,
        f"{len(spec.bridges)} bridges removed first, 10 clusters, {elapsed:.2f}s",
    )


def test_cnm_self_consistency():
    """q_sequence[k] equals from-scratch modularity of the k-merge partition
    for all k on 20 random graphs, n <= 50, tol 1e-9."""
    rng = random.Random(808)
    worst = 0.0
    for _ in range(20):
        nodes, edges = random_simple_graph(rng, rng.randint(3, 50), 0.1)
        graph = graph_from_edges(edges, nodes=nodes)
        dendro = cnm_fast_greedy(graph)
        for k in range(len(dendro.merges) + 1):
            part = cut_dendrogram(dendro, CutRule.merges(k))
            fresh = modularity(graph, part).q
            worst = max(worst, abs(dendro.q_at(k) - fresh))
            assert worst <= 1e-9
    report("cnm-self-consistency", worst <= 1e-9, f"20 graphs, worst |dq|={worst:.2e}")


def test_hop_filter_conservation():
    """Expanded node count plus macro sizes equals |V| for every (fixture,
    partition, selected, k); expansion is monotone in k."""
    fixtures = []
    barbell = graph_from_edges(BARBELL_EDGES)
    fixtures.append((barbell, Partition.from_communities(barbell, BARBELL_TRIANGLES, "CNM")))
    spec = planted_structure(5, 6, seed=9)
    planted = graph_from_edges(spec.intra_edges + spec.bridges)
    dendro = cnm_fast_greedy(planted)
    fixtures.append((planted, cut_dendrogram(dendro, CutRule.max_q())))

    checks = 0
    for graph, partition in fixtures:
        n = graph.node_count
        for selected in graph.nodes()[:: max(1, n // 6)]:
            previous: set[int] = set()
            for k in range(0, 6):
                view = view_with_hops(graph, partition, selected, k)
                total = len(view.expanded_nodes) + sum(m.size for m in view.macro_nodes)
                assert total == n, f"conservation broke at k={k}"
                expanded = set(view.expanded_communities)
                assert previous <= expanded, f"expansion not monotone at k={k}"
                previous = expanded
                checks += 1
    report("hop-filter-conservation", True, f"{checks} (selected, k) checks")


def test_temporal_partition_of_unity():
    """Per-node series totals equal twice the in-window edge-forming event
    count on randomized 15-day streams."""
    for seed in range(8):
        config = SynthConfig(
            clan_count=3, clan_size=4, events_per_edge=3.0, days=15, seed=seed,
            noise_events=20,
        )
        records, _ = planted_records(config)
        rng = random.Random(seed)
        stamps = sorted(r.timestamp for r in records)
        lo = rng.randrange(0, len(stamps) // 2)
        hi = rng.randrange(len(stamps) // 2 + 1, len(stamps))
        window = TimeWindow(stamps[lo], stamps[hi])
        series = activity_series(records, "node", window=window)
        in_window = [
            r
            for r in filter_window(records, window)
            if r.event_type.value in ("VOICE", "SMS", "MMS") and not r.is_self_loop
        ]
        expected = 2 * sum(1 + r.duplicates for r in in_window)
        assert series.total() == expected
    report("temporal-partition-of-unity", True, "8 randomized streams")


def test_cli_service_equivalence(tmp_path):
    """Greedy merge + max_q cut through the CLI and through the session
    service yield byte-identical partition JSON on 5 fixtures."""
    from fastapi.testclient import TestClient

    from callnet.server import ServerConfig, create_app

    config = ServerConfig(
        data_dir=tmp_path / "srv-data", log_dir=tmp_path / "srv-logs", workers=2
    )
    app = create_app(config)

    with TestClient(app) as client:
        for seed in range(5):
            records, _ = planted_records(
                SynthConfig(clan_count=3, clan_size=4 + seed % 3,
                            events_per_edge=2.0, seed=seed)
            )
            raw_csv = serialize_cdr(records)

            base = tmp_path / f"f{seed}"
            raw = base / "raw.csv"
            base.mkdir()
            raw.write_text(raw_csv)
            assert cli_main(["ingest", "--input", str(raw), "--out", str(base / "i")]) == 0
            assert cli_main([
                "graph", "--records", str(base / "i" / "records.csv"),
                "--out", str(base / "g"),
            ]) == 0
            assert cli_main([
                "cnm", "--graph", str(base / "g" / "graph.json"), "--out", str(base / "c"),
            ]) == 0
            assert cli_main([
                "cut", "--graph", str(base / "g" / "graph.json"),
                "--dendrogram", str(base / "c" / "dendrogram.json"),
                "--rule", "max_q", "--out", str(base / "cut"),
            ]) == 0
            cli_bytes = (base / "cut" / "partition.json").read_bytes()

            dataset = client.post("/datasets", content=raw_csv.encode()).json()
            sid = client.post(
                "/sessions", json={"dataset_id": dataset["dataset_id"]}
            ).json()["session_id"]
            job = client.post(f"/sessions/{sid}/jobs/cnm", json={}).json()
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                state = client.get(f"/sessions/{sid}/jobs/{job['job_id']}").json()["state"]
                if state not in ("PENDING", "RUNNING"):
                    break
                time.sleep(0.02)
            assert state == "DONE"
            client.post(f"/sessions/{sid}/view/granularity", json={"rule": "max_q"})
            api_bytes = client.get(
                f"/sessions/{sid}/export/json", params={"what": "partition"}
            ).content
            assert api_bytes == cli_bytes, f"fixture {seed} diverged"
    report("cli-service-equivalence", True, "5 fixtures byte-identical")


def test_complexity_sanity():
    """Full divisive trace wall-clock grows no worse than cubically over
    n in {50, 100, 200} (log-log slope <= 3.5)."""
    sizes = (50, 100, 200)
    times = []
    for n in sizes:
        clans = n // 10
        spec = planted_structure(clans, 10, bridges=clans, seed=1)
        graph = graph_from_edges(spec.intra_edges + spec.bridges)
        assert graph.node_count == n
        best = None
        for _ in range(3):
            started = time.perf_counter()
            girvan_newman(graph, StopRule.exhaust())
            elapsed = time.perf_counter() - started
            best = elapsed if best is None else min(best, elapsed)
        times.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    report(
        "complexity-sanity",
        slope <= 3.5,
        "slope=%.2f, times=%s" % (slope, ["%.3fs" % t for t in times]),
    )

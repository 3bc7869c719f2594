"""Graph aggregation, projection, whole-graph metrics, egonets, exports."""

from __future__ import annotations

import json
import math
import random
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from callnet.errors import NodeNotFound
from callnet.graph import (
    BuildPolicy,
    InteractionGraph,
    build_graph,
    connected_components,
    density_undirected,
    egonet,
    overall_metrics,
    undirected_projection,
)
from callnet.records import EventType

from conftest import graph_from_edges, record


def test_build_aggregates_events():
    records = [record(1, 2), record(1, 2), record(2, 3)]
    graph = build_graph(records)
    assert graph.nodes() == [1, 2, 3]
    assert graph.edge_count == 2
    assert graph.edge_data(1, 2).weight == 2
    assert graph.edge_data(2, 3).weight == 1


def test_build_drops_self_loops():
    graph = build_graph([record(1, 1)])
    assert graph.nodes() == [1]
    assert graph.edge_count == 0
    assert graph.self_loops_dropped == 1


def test_internet_events_register_caller_only():
    records = [record(1, 2), record(3, "svc", etype=EventType.INTERNET)]
    graph = build_graph(records)
    assert graph.nodes() == [1, 2, 3]
    assert graph.edge_count == 1
    assert graph.node_attrs(3)["events"] == 1


def test_policy_can_include_internet_edges():
    policy = BuildPolicy(edge_types=frozenset(EventType))
    graph = build_graph([record(3, 4, etype=EventType.INTERNET)], policy)
    assert graph.edge_count == 1


def test_edge_weight_counts_collapsed_duplicates():
    from dataclasses import replace

    rec = replace(record(1, 2), duplicates=2)
    graph = build_graph([rec])
    assert graph.edge_data(1, 2).weight == 3


def test_undirected_projection_merges_antiparallel():
    graph = graph_from_edges([(1, 2), (2, 1)], directed=True, weights=[2, 3])
    projected = undirected_projection(graph)
    assert projected.edge_count == 1
    assert projected.edge_data(1, 2).weight == 5
    assert projected.nodes() == graph.nodes()


def test_projection_idempotent():
    graph = graph_from_edges([(1, 2), (2, 3)], directed=True)
    once = undirected_projection(graph)
    assert undirected_projection(once) is once


def test_projection_edge_count_matches_pair_enumeration():
    rng = random.Random(11)
    nodes = list(range(1, 13))
    edges = [(u, v) for u in nodes for v in nodes if u != v and rng.random() < 0.2]
    graph = graph_from_edges(edges, directed=True)
    projected = undirected_projection(graph)
    distinct_pairs = {(min(u, v), max(u, v)) for u, v in edges}
    assert projected.edge_count == len(distinct_pairs)


def test_overall_metrics_path_graph():
    graph = graph_from_edges([(1, 2), (2, 3), (3, 4)])
    m = overall_metrics(graph)
    assert m.max_geodesic == 3
    assert m.connected_components == 1
    assert m.self_loops == 0


def test_overall_metrics_two_disjoint_edges():
    graph = graph_from_edges([(1, 2), (3, 4)])
    m = overall_metrics(graph)
    assert m.connected_components == 2
    assert m.avg_geodesic == 1.0
    assert m.geodesic_scope == "reachable-pairs"


def test_density_extremes():
    complete = graph_from_edges(list(combinations(range(1, 6), 2)))
    assert overall_metrics(complete).density == 1.0
    empty = InteractionGraph(nodes={1: {}, 2: {}, 3: {}})
    assert overall_metrics(empty).density == 0.0


def test_density_case_values():
    # 381 nodes, 428 undirected edges: 428 / (381*380/2) = 0.00591..,
    # displayed as 0.006 at three decimals
    value = density_undirected(381, 428)
    assert value == pytest.approx(428 / 72390)
    assert round(value, 3) == 0.006


def test_directed_graph_declared_but_density_undirected():
    graph = graph_from_edges([(1, 2), (2, 1), (2, 3)], directed=True)
    m = overall_metrics(graph)
    # 2 distinct unordered pairs over 3 nodes
    assert m.density == pytest.approx(2 / 3)


def test_egonet_radius_zero():
    graph = graph_from_edges([(1, 2), (2, 3)])
    sub = egonet(graph, 2, 0)
    assert sub.nodes() == [2]
    assert sub.edge_count == 0


def test_egonet_star_radius_one():
    star = graph_from_edges([(1, i) for i in range(2, 7)])
    sub = egonet(star, 1, 1)
    assert sub.nodes() == star.nodes()
    assert sub.edge_count == star.edge_count


def test_egonet_path_by_hand():
    path = graph_from_edges([(1, 2), (2, 3), (3, 4), (4, 5)])
    sub = egonet(path, 3, 1)
    assert sub.nodes() == [2, 3, 4]
    assert {(u, v) for u, v, _ in sub.edges()} == {(2, 3), (3, 4)}


def test_egonet_unknown_center():
    with pytest.raises(NodeNotFound):
        egonet(graph_from_edges([(1, 2)]), 99, 1)


def test_egonet_infinite_radius_is_component():
    graph = graph_from_edges([(1, 2), (2, 3), (5, 6)])
    sub = egonet(graph, 1, math.inf)
    assert set(sub.nodes()) == {1, 2, 3}


def test_event_conservation_invariant():
    rng = random.Random(5)
    records = []
    for _ in range(200):
        u, v = rng.randint(1, 12), rng.randint(1, 12)
        records.append(record(u, v))
    graph = build_graph(records)
    edge_forming = len(records)
    assert graph.total_weight() == edge_forming - graph.self_loops_dropped
    assert all(data.weight >= 1 for _, _, data in graph.edges())


def test_json_roundtrip():
    graph = build_graph([record(1, 2), record(2, 3, etype=EventType.SMS)])
    payload = json.loads(graph.to_json())
    assert payload["directed"] is True
    assert payload["nodes"][0] == {"id": 1, "attrs": {"events": 1}}
    clone = InteractionGraph.from_json_dict(payload)
    assert clone.to_json() == graph.to_json()


def test_graphml_export_well_formed():
    import xml.etree.ElementTree as ET

    graph = build_graph([record(1, 2)])
    root = ET.fromstring(graph.to_graphml())
    ns = "{http://graphml.graphdrawing.org/xmlns}"
    nodes = root.findall(f"{ns}graph/{ns}node")
    edges = root.findall(f"{ns}graph/{ns}edge")
    assert len(nodes) == 2 and len(edges) == 1


@given(st.integers(min_value=0, max_value=400), st.integers(min_value=2, max_value=30))
@settings(max_examples=40)
def test_density_bounds(seed, n):
    rng = random.Random(seed)
    edges = {
        (u, v)
        for u, v in combinations(range(1, n + 1), 2)
        if rng.random() < 0.3
    }
    value = density_undirected(n, len(edges))
    assert 0.0 <= value <= 1.0


def test_components_sorted_by_min_member():
    graph = graph_from_edges([(5, 6), (1, 2)])
    comps = connected_components(graph)
    assert comps == [{1, 2}, {5, 6}]

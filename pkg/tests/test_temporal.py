"""Window filtering, event scatter decomposition, activity series."""

from __future__ import annotations

import random
from datetime import date, timedelta

import pytest

from callnet.community import Partition
from callnet.errors import InvalidPartition
from callnet.graph import build_graph
from callnet.records import CallRecord, EventType
from callnet.temporal import (
    TimeWindow,
    activity_series,
    default_bin_width,
    event_points,
    filter_window,
)

from conftest import T0, record


def ts(**kwargs):
    return T0 + timedelta(**kwargs)


def test_window_validation():
    with pytest.raises(ValueError):
        TimeWindow(T0, T0)


def test_window_parse_roundtrip():
    window = TimeWindow.parse("2013-03-01T00:00:00Z..2013-03-16T00:00:00Z")
    assert window.describe() == "2013-03-01T00:00:00Z..2013-03-16T00:00:00Z"


def test_filter_identity_and_empty():
    records = [record(1, 2, ts=ts(hours=h)) for h in range(3)]
    everything = TimeWindow(T0 - timedelta(days=1), T0 + timedelta(days=1))
    assert filter_window(records, everything) == records
    nothing = TimeWindow(T0 + timedelta(days=5), T0 + timedelta(days=6))
    assert filter_window(records, nothing) == []


def test_filter_end_exclusive():
    records = [record(1, 2, ts=ts(hours=h)) for h in range(3)]
    window = TimeWindow(T0, T0 + timedelta(minutes=90))
    kept = filter_window(records, window)
    assert [r.timestamp for r in kept] == [ts(), ts(hours=1)]


def test_filter_idempotent_and_monotone():
    rng = random.Random(9)
    records = [record(1, 2, ts=ts(minutes=rng.randrange(60 * 24 * 4))) for _ in range(80)]
    w1 = TimeWindow(ts(days=1), ts(days=2))
    w2 = TimeWindow(ts(hours=12), ts(days=3))
    once = filter_window(records, w1)
    assert filter_window(once, w1) == once
    assert set(r.timestamp for r in once) <= set(
        r.timestamp for r in filter_window(records, w2)
    )


def test_windowed_graph_rebuild_drops_quiet_nodes():
    records = [record(1, 2, ts=ts()), record(3, 4, ts=ts(days=2))]
    window = TimeWindow(T0, T0 + timedelta(days=1))
    graph = build_graph(filter_window(records, window))
    assert graph.nodes() == [1, 2]


def test_event_point_decomposition():
    moment = ts(days=4, hours=14, minutes=30)
    points = event_points([record(1, 2, ts=moment)])
    assert points[0].day == date(2013, 3, 5)
    assert points[0].hour_of_day == pytest.approx(14.5)


def test_event_points_empty_window():
    records = [record(1, 2, ts=ts())]
    nothing = TimeWindow(ts(days=3), ts(days=4))
    assert event_points(records, nothing) == []


def test_event_points_hourly_fixture():
    records = [record(1, 2, ts=ts(hours=h)) for h in range(24)]
    points = event_points(records)
    assert len(points) == 24
    assert sorted(p.hour_of_day for p in points) == list(range(24))
    assert {p.day for p in points} == {date(2013, 3, 1)}


def test_series_single_node_one_bin():
    records = [record(1, 2, ts=ts(minutes=m)) for m in (0, 5, 10)]
    series = activity_series(records, "node", bin_width=timedelta(hours=1))
    assert series.rows[1] == [3]
    assert series.rows[2] == [3]


def test_series_daily_bins_over_15_days():
    rng = random.Random(77)
    records = [
        record(rng.randint(1, 9), rng.randint(10, 19), ts=ts(seconds=rng.randrange(15 * 86400)))
        for _ in range(300)
    ]
    window = TimeWindow(T0, T0 + timedelta(days=15))
    series = activity_series(records, "node", bin_width=timedelta(days=1), window=window)
    assert len(series.bins) == 15
    assert series.total() == 2 * len(records)


def test_series_default_bin_widths():
    assert default_bin_width(timedelta(hours=4)) == timedelta(hours=1)
    assert default_bin_width(timedelta(days=10)) == timedelta(days=1)


def test_series_per_community_internal_traffic():
    records = [record(1, 2, ts=ts(hours=i)) for i in range(4)]
    graph = build_graph(records + [record(3, 4, ts=ts())])
    partition = Partition.from_communities(graph, [{1, 2}, {3, 4}], "MANUAL")
    series = activity_series(
        records, "community", bin_width=timedelta(days=1), partition=partition
    )
    assert sum(series.rows[1]) == 4
    assert series.rows[3] == [0] * len(series.bins)


def test_series_cross_community_counts_both_sides():
    records = [record(1, 3, ts=ts())]
    graph = build_graph(records)
    partition = Partition.from_communities(graph, [{1}, {3}], "MANUAL")
    series = activity_series(records, "community", partition=partition)
    assert sum(series.rows[1]) == 1
    assert sum(series.rows[3]) == 1


def test_series_partition_mismatch():
    records = [record(1, 2, ts=ts())]
    graph = build_graph(records)
    partition = Partition.from_communities(graph, [{1, 2}], "MANUAL")
    foreign = [record(7, 8, ts=ts())]
    with pytest.raises(InvalidPartition):
        activity_series(foreign, "community", partition=partition)


def test_series_ignores_non_edge_forming_and_self_loops():
    records = [
        record(1, 2, ts=ts()),
        record(1, 1, ts=ts(minutes=1)),
        record(1, "svc", ts=ts(minutes=2), etype=EventType.INTERNET),
    ]
    series = activity_series(records, "node")
    assert series.total() == 2


def test_series_node_total_partition_of_unity():
    rng = random.Random(123)
    records = []
    for _ in range(250):
        u = rng.randint(1, 20)
        v = rng.randint(1, 20)
        records.append(record(u, v, ts=ts(seconds=rng.randrange(15 * 86400))))
    window = TimeWindow(ts(days=3), ts(days=9))
    series = activity_series(records, "node", window=window)
    in_window = [
        r for r in filter_window(records, window) if not r.is_self_loop
    ]
    assert series.total() == 2 * len(in_window)

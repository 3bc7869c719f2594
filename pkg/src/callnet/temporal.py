"""Time-windowed filtering and activity aggregation over event streams.

Windows are end-exclusive: [start, end). All instants are the normalized UTC
of the record stream; presentation timezones are a client concern. Everything
here is a pure function over immutable record lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import Sequence

from .community import Partition
from .errors import InvalidPartition
from .graph import DEFAULT_EDGE_TYPES
from .records import CallRecord, EventType, format_instant, parse_instant


@dataclass(frozen=True)
class TimeWindow:
    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError("window start must precede its end")

    def __contains__(self, moment: datetime) -> bool:
        return self.start <= moment < self.end

    @classmethod
    def parse(cls, text: str) -> "TimeWindow":
        """Parse ``START..END`` with ISO-8601 instants."""
        if ".." not in text:
            raise ValueError(f"bad window {text!r}; use START..END")
        start_raw, end_raw = text.split("..", 1)
        return cls(parse_instant(start_raw), parse_instant(end_raw))

    def describe(self) -> str:
        return f"{format_instant(self.start)}..{format_instant(self.end)}"


def filter_window(
    records: Sequence[CallRecord], window: TimeWindow | None
) -> list[CallRecord]:
    """Records whose timestamp falls inside the window (idempotent)."""
    if window is None:
        return list(records)
    return [rec for rec in records if rec.timestamp in window]


@dataclass(frozen=True)
class EventPoint:
    day: date
    hour_of_day: float  # in [0, 24)
    event_type: EventType
    src: int | str
    dst: int | str

    def to_json_dict(self) -> dict:
        return {
            "day": self.day.isoformat(),
            "hour": self.hour_of_day,
            "type": self.event_type.value,
            "src": self.src,
            "dst": self.dst,
        }


def event_points(
    records: Sequence[CallRecord], window: TimeWindow | None = None
) -> list[EventPoint]:
    """One scatter point per in-window event: calendar day vs hour of day."""
    points = []
    for rec in filter_window(records, window):
        moment = rec.timestamp
        hour = moment.hour + moment.minute / 60.0 + moment.second / 3600.0
        points.append(EventPoint(moment.date(), hour, rec.event_type, rec.caller, rec.callee))
    return points


@dataclass
class ActivitySeries:
    """Binned event counts per group (node or community).

    Every row has one count per bin. Per-node rows count events incident to
    the node (an event lands in both endpoints' rows); per-community rows
    count the caller's community and, when different, the callee's community
    too — cross-community traffic is activity of both sides.
    """

    grouping: str  # "node" | "community"
    bins: list[tuple[datetime, float]]  # (start, width in seconds)
    rows: dict[int, list[int]]

    def total(self) -> int:
        return sum(sum(row) for row in self.rows.values())

    def to_csv(self) -> str:
        header = [self.grouping] + [format_instant(start) for start, _ in self.bins]
        lines = [",".join(header)]
        for group in sorted(self.rows):
            lines.append(",".join([str(group)] + [str(c) for c in self.rows[group]]))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "grouping": self.grouping,
            "bins": [
                {"start": format_instant(start), "width_seconds": width}
                for start, width in self.bins
            ],
            "rows": {str(g): counts for g, counts in sorted(self.rows.items())},
        }


def default_bin_width(span: timedelta) -> timedelta:
    """One day for multi-day spans, one hour at 48 hours or under."""
    return timedelta(hours=1) if span <= timedelta(hours=48) else timedelta(days=1)


def activity_series(
    records: Sequence[CallRecord],
    grouping: str = "node",
    bin_width: timedelta | None = None,
    window: TimeWindow | None = None,
    partition: Partition | None = None,
    edge_types=DEFAULT_EDGE_TYPES,
) -> ActivitySeries:
    """Stacked-histogram series of edge-forming events per group and bin.

    Only person-to-person events (edge-forming types, no self-loops) are
    counted. Rows cover every node seen in the input stream (or every
    community of the partition), so quiet groups appear as zero rows.
    """
    if grouping not in ("node", "community"):
        raise ValueError(f"grouping must be node or community, got {grouping!r}")
    if grouping == "community" and partition is None:
        raise InvalidPartition("community grouping requires a partition")

    edge_events = [
        rec
        for rec in records
        if rec.event_type in edge_types and not rec.is_self_loop
    ]
    in_window = filter_window(edge_events, window)

    if window is not None:
        span_start, span_end = window.start, window.end
    elif in_window:
        stamps = [rec.timestamp for rec in in_window]
        span_start, span_end = min(stamps), max(stamps) + timedelta(seconds=1)
    else:
        span_start = span_end = None

    if span_start is None:
        bins: list[tuple[datetime, float]] = []
    else:
        width = bin_width or default_bin_width(span_end - span_start)
        width_s = width.total_seconds()
        if width_s <= 0:
            raise ValueError("bin width must be positive")
        count = max(1, math.ceil((span_end - span_start).total_seconds() / width_s))
        bins = []
        for i in range(count):
            start = span_start + i * width
            bins.append((start, min(width_s, (span_end - start).total_seconds())))

    if grouping == "node":
        groups = sorted({rec.caller for rec in edge_events} | {rec.callee for rec in edge_events})
    else:
        groups = partition.community_ids()
        membership = partition.membership()
        missing = {
            endpoint
            for rec in in_window
            for endpoint in (rec.caller, rec.callee)
            if endpoint not in membership
        }
        if missing:
            raise InvalidPartition(
                f"partition does not cover event endpoints: {sorted(missing)[:5]}"
            )

    rows = {g: [0] * len(bins) for g in groups}
    if bins:
        width_s = (bins[1][0] - bins[0][0]).total_seconds() if len(bins) > 1 else bins[0][1]
        for rec in in_window:
            slot = int((rec.timestamp - span_start).total_seconds() // width_s)
            slot = min(slot, len(bins) - 1)
            count = 1 + rec.duplicates  # collapsed duplicates are real events
            if grouping == "node":
                rows[rec.caller][slot] += count
                rows[rec.callee][slot] += count
            else:
                src_comm = membership[rec.caller]
                dst_comm = membership[rec.callee]
                rows[src_comm][slot] += count
                if dst_comm != src_comm:
                    rows[dst_comm][slot] += count

    return ActivitySeries(grouping=grouping, bins=bins, rows=rows)

"""Call-detail-record ingestion: parse, validate, deduplicate, anonymize.

The canonical interchange format is a CSV with header
``caller,callee,timestamp,duration,event_type``. Carrier exports with other
layouts are adapted through :class:`CdrFormatConfig`, a small key-value
mapping of source columns to canonical fields with optional per-type token
remapping.

Parsing is a single-writer streaming pass; the resulting record list is
never mutated afterwards and is safe for concurrent readers.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, TextIO, Union

from .errors import FormatError

CANONICAL_HEADER = ("caller", "callee", "timestamp", "duration", "event_type")

NodeId = Union[int, str]


class EventType(str, Enum):
    VOICE = "VOICE"
    SMS = "SMS"
    MMS = "MMS"
    INTERNET = "INTERNET"
    OTHER = "OTHER"


@dataclass(frozen=True)
class CallRecord:
    """One communication event between two identifiers.

    ``duplicates`` counts how many extra identical source rows were collapsed
    into this record (0 for a unique row).
    """

    caller: NodeId
    callee: NodeId
    timestamp: datetime
    duration: int
    event_type: EventType
    duplicates: int = 0

    @property
    def is_self_loop(self) -> bool:
        return self.caller == self.callee

    def to_row(self) -> tuple[str, str, str, str, str]:
        return (
            str(self.caller),
            str(self.callee),
            format_instant(self.timestamp),
            str(self.duration),
            self.event_type.value,
        )


@dataclass(frozen=True)
class RowError:
    """A malformed source row, excluded from the record stream."""

    line: int
    reason: str
    detail: str = ""


@dataclass
class CdrFormatConfig:
    """Maps source columns to canonical fields.

    Column values may be 0-based integer indices or header names (header
    names require ``has_header``). ``type_tokens`` remaps source event-type
    tokens (upper-cased) onto the five canonical tokens.
    """

    delimiter: str = ","
    has_header: bool = True
    columns: dict[str, Union[int, str]] = field(
        default_factory=lambda: {name: i for i, name in enumerate(CANONICAL_HEADER)}
    )
    type_tokens: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CdrFormatConfig":
        """Read a ``key = value`` mapping file ('#' starts a comment)."""
        cfg = cls()
        for raw_line in Path(path).read_text().splitlines():
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"bad mapping line: {raw_line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "delimiter":
                cfg.delimiter = value or ","
            elif key == "has_header":
                cfg.has_header = value.lower() in ("1", "true", "yes")
            elif key in CANONICAL_HEADER:
                cfg.columns[key] = int(value) if value.lstrip("-").isdigit() else value
            elif key.startswith("type."):
                cfg.type_tokens[key[5:].upper()] = value.upper()
            else:
                raise FormatError(f"unknown mapping key: {key!r}")
        return cfg

    def resolve_indices(self, header: Sequence[str] | None) -> dict[str, int]:
        indices: dict[str, int] = {}
        normalized = [h.strip().lower() for h in header] if header is not None else None
        for fieldname, ref in self.columns.items():
            if isinstance(ref, int):
                indices[fieldname] = ref
            else:
                if normalized is None:
                    raise FormatError(
                        f"column {fieldname!r} mapped by name {ref!r} but input has no header"
                    )
                try:
                    indices[fieldname] = normalized.index(ref.strip().lower())
                except ValueError:
                    raise FormatError(f"column {ref!r} not found in header {header}") from None
        return indices


_TS_Z = re.compile(r"[zZ]$")


def parse_instant(text: str) -> datetime:
    """Parse an ISO-8601 timestamp and normalize it to UTC.

    Naive timestamps are taken as UTC; offsets are converted.
    """
    cleaned = _TS_Z.sub("+00:00", text.strip())
    moment = datetime.fromisoformat(cleaned)
    if moment.tzinfo is None:
        return moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def format_instant(moment: datetime) -> str:
    """Canonical second-precision UTC form, e.g. ``2013-03-01T10:15:00Z``."""
    return moment.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _coerce_stream(source: Union[str, Path, TextIO]) -> TextIO:
    if isinstance(source, io.TextIOBase):
        return source
    if isinstance(source, Path):
        return source.open("r", newline="")
    if isinstance(source, str):
        return io.StringIO(source)
    if hasattr(source, "read"):
        return source  # file-like duck type
    raise TypeError(f"unsupported source type: {type(source)!r}")


def parse_cdr(
    source: Union[str, Path, TextIO],
    fmt: CdrFormatConfig | None = None,
) -> tuple[list[CallRecord], list[RowError]]:
    """Parse a delimited CDR stream into records plus per-row errors.

    Every well-formed row yields one record; rows identical in all five
    fields collapse into one record with its ``duplicates`` counter bumped.
    Malformed rows never abort the parse. Unreadable sources raise ``OSError``;
    a header that contradicts the declared format raises ``FormatError``.
    """
    fmt = fmt or CdrFormatConfig()
    stream = _coerce_stream(source)
    reader = csv.reader(stream, delimiter=fmt.delimiter)

    header: list[str] | None = None
    line_no = 0
    if fmt.has_header:
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty input: expected a header row") from None
        line_no = 1
        if all(isinstance(ref, int) for ref in fmt.columns.values()):
            # Canonical-style config: the header must carry the declared names.
            expected = [
                name for name, _ in sorted(fmt.columns.items(), key=lambda kv: kv[1])
            ]
            got = [h.strip().lower() for h in header]
            if got[: len(expected)] != expected:
                raise FormatError(f"header mismatch: expected {expected}, got {header}")
    indices = fmt.resolve_indices(header)
    needed = max(indices.values()) + 1

    seen: dict[tuple, int] = {}
    records: list[CallRecord] = []
    dup_counts: list[int] = []
    errors: list[RowError] = []

    for row in reader:
        line_no += 1
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line, not a data row
        if len(row) < needed:
            errors.append(RowError(line_no, "bad_columns", f"expected >= {needed} fields"))
            continue
        caller = row[indices["caller"]].strip()
        callee = row[indices["callee"]].strip()
        if not caller or not callee:
            errors.append(RowError(line_no, "empty_identifier"))
            continue
        try:
            moment = parse_instant(row[indices["timestamp"]])
        except ValueError:
            errors.append(RowError(line_no, "bad_timestamp", row[indices["timestamp"]].strip()))
            continue
        raw_duration = row[indices["duration"]].strip()
        try:
            duration = int(raw_duration)
        except ValueError:
            errors.append(RowError(line_no, "bad_duration", raw_duration))
            continue
        if duration < 0:
            errors.append(RowError(line_no, "bad_duration", raw_duration))
            continue
        token = row[indices["event_type"]].strip().upper()
        token = fmt.type_tokens.get(token, token)
        try:
            event_type = EventType(token)
        except ValueError:
            errors.append(RowError(line_no, "bad_event_type", token))
            continue

        key = (caller, callee, moment, duration, event_type)
        slot = seen.get(key)
        if slot is None:
            seen[key] = len(records)
            records.append(CallRecord(caller, callee, moment, duration, event_type))
            dup_counts.append(0)
        else:
            dup_counts[slot] += 1

    records = [
        rec if extra == 0 else replace(rec, duplicates=extra)
        for rec, extra in zip(records, dup_counts)
    ]
    return records, errors


def serialize_cdr(records: Iterable[CallRecord]) -> str:
    """Render records back to canonical CSV (collapsed duplicates stay collapsed)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for rec in records:
        writer.writerow(rec.to_row())
    return out.getvalue()


@dataclass
class IdentityMap:
    """Bijection between raw identifiers and dense integer IDs.

    Kept separate from the anonymized record stream and never exported by
    default; persisting it is an explicit caller decision.
    """

    to_id: dict[str, int] = field(default_factory=dict)

    def raw_of(self, node_id: int) -> str:
        for raw, nid in self.to_id.items():
            if nid == node_id:
                return raw
        raise KeyError(node_id)

    def __len__(self) -> int:
        return len(self.to_id)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_id, indent=0, sort_keys=True))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "IdentityMap":
        return cls(to_id=json.loads(Path(path).read_text()))


def anonymize(records: Sequence[CallRecord]) -> tuple[list[CallRecord], IdentityMap]:
    """Replace raw identifiers with dense integer IDs (1..N).

    IDs are assigned in first-appearance order scanning each record's caller
    before its callee, so the mapping is deterministic for a given input
    order.
    """
    mapping = IdentityMap()
    out: list[CallRecord] = []
    for rec in records:
        ids = []
        for raw in (str(rec.caller), str(rec.callee)):
            nid = mapping.to_id.get(raw)
            if nid is None:
                nid = len(mapping.to_id) + 1
                mapping.to_id[raw] = nid
            ids.append(nid)
        out.append(replace(rec, caller=ids[0], callee=ids[1]))
    return out, mapping


@dataclass
class DatasetSummary:
    record_count: int
    counts_by_type: dict[EventType, int]
    span: tuple[datetime, datetime] | None
    distinct_identifiers: int
    dropped_rows: int
    drop_reasons: dict[str, int]
    duplicates_collapsed: int

    def to_json_dict(self) -> dict:
        return {
            "record_count": self.record_count,
            "counts_by_type": {t.value: n for t, n in self.counts_by_type.items()},
            "span": [format_instant(self.span[0]), format_instant(self.span[1])]
            if self.span
            else None,
            "distinct_identifiers": self.distinct_identifiers,
            "dropped_rows": self.dropped_rows,
            "drop_reasons": dict(self.drop_reasons),
            "duplicates_collapsed": self.duplicates_collapsed,
        }


def summarize(
    records: Sequence[CallRecord], errors: Sequence[RowError] = ()
) -> DatasetSummary:
    """Aggregate counts, per-type breakdown, and time span of a record list."""
    counts: Counter = Counter(rec.event_type for rec in records)
    identifiers = {rec.caller for rec in records} | {rec.callee for rec in records}
    span = None
    if records:
        stamps = [rec.timestamp for rec in records]
        span = (min(stamps), max(stamps))
    return DatasetSummary(
        record_count=len(records),
        counts_by_type=dict(counts),
        span=span,
        distinct_identifiers=len(identifiers),
        dropped_rows=len(errors),
        drop_reasons=dict(Counter(err.reason for err in errors)),
        duplicates_collapsed=sum(rec.duplicates for rec in records),
    )


def span_length(summary: DatasetSummary) -> timedelta | None:
    if summary.span is None:
        return None
    return summary.span[1] - summary.span[0]

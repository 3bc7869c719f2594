"""CDR parsing, deduplication, anonymization, and summaries."""

from __future__ import annotations

import io
from datetime import timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from callnet.errors import FormatError
from callnet.records import (
    CANONICAL_HEADER,
    CallRecord,
    CdrFormatConfig,
    EventType,
    anonymize,
    parse_cdr,
    parse_instant,
    serialize_cdr,
    span_length,
    summarize,
)

HEADER = ",".join(CANONICAL_HEADER)


def test_parse_single_row():
    records, errors = parse_cdr(f"{HEADER}\nA,B,2013-03-01T10:15:00Z,42,VOICE\n")
    assert errors == []
    assert len(records) == 1
    rec = records[0]
    assert (rec.caller, rec.callee, rec.duration) == ("A", "B", 42)
    assert rec.event_type is EventType.VOICE
    assert rec.timestamp.tzinfo is timezone.utc
    assert rec.timestamp.isoformat() == "2013-03-01T10:15:00+00:00"


def test_exact_duplicates_collapse():
    text = f"{HEADER}\nA,B,2013-03-01T10:15:00Z,42,VOICE\nA,B,2013-03-01T10:15:00Z,42,VOICE\n"
    records, errors = parse_cdr(text)
    assert len(records) == 1 and not errors
    assert records[0].duplicates == 1


def test_near_duplicates_kept():
    text = (
        f"{HEADER}\n"
        "A,B,2013-03-01T10:15:00Z,42,VOICE\n"
        "A,B,2013-03-01T10:15:00Z,43,VOICE\n"
    )
    records, _ = parse_cdr(text)
    assert len(records) == 2


def test_bad_timestamp_row_excluded():
    text = f"{HEADER}\nA,B,2013-13-99,42,VOICE\nC,D,2013-03-01T10:15:00Z,1,SMS\n"
    records, errors = parse_cdr(text)
    assert len(records) == 1
    assert len(errors) == 1
    assert errors[0].line == 2
    assert errors[0].reason == "bad_timestamp"


@pytest.mark.parametrize(
    "row,reason",
    [
        ("A,B,2013-03-01T10:15:00Z,-5,VOICE", "bad_duration"),
        ("A,B,2013-03-01T10:15:00Z,x,VOICE", "bad_duration"),
        ("A,B,2013-03-01T10:15:00Z,5,FAX", "bad_event_type"),
        (",B,2013-03-01T10:15:00Z,5,VOICE", "empty_identifier"),
        ("A,B,2013-03-01T10:15:00Z", "bad_columns"),
    ],
)
def test_malformed_rows(row, reason):
    records, errors = parse_cdr(f"{HEADER}\n{row}\n")
    assert records == []
    assert [e.reason for e in errors] == [reason]


def test_header_mismatch_is_fatal():
    with pytest.raises(FormatError):
        parse_cdr("a,b,c,d,e\nA,B,2013-03-01T10:15:00Z,42,VOICE\n")


def test_event_type_case_insensitive():
    records, _ = parse_cdr(f"{HEADER}\nA,B,2013-03-01T10:15:00Z,0,sms\n")
    assert records[0].event_type is EventType.SMS


def test_zero_duration_voice_is_legal():
    records, errors = parse_cdr(f"{HEADER}\nA,B,2013-03-01T10:15:00Z,0,VOICE\n")
    assert not errors and records[0].duration == 0


def test_timezone_offsets_normalize_to_utc():
    records, _ = parse_cdr(f"{HEADER}\nA,B,2013-03-01T12:15:00+02:00,1,VOICE\n")
    assert records[0].timestamp == parse_instant("2013-03-01T10:15:00Z")


def test_self_loop_flagged_but_retained():
    records, _ = parse_cdr(f"{HEADER}\nA,A,2013-03-01T10:15:00Z,5,VOICE\n")
    assert records[0].is_self_loop


def test_column_mapping_config(tmp_path):
    cfg_file = tmp_path / "map.cfg"
    cfg_file.write_text(
        "delimiter = ;\n"
        "caller = from  # by header name\n"
        "callee = to\n"
        "timestamp = 0\n"
        "duration = 3\n"
        "event_type = 4\n"
        "type.CALL = VOICE\n"
    )
    fmt = CdrFormatConfig.load(cfg_file)
    text = "when;from;to;secs;kind\n2013-03-01T10:15:00Z;X;Y;9;call\n"
    records, errors = parse_cdr(io.StringIO(text), fmt)
    assert not errors
    assert records[0].caller == "X" and records[0].callee == "Y"
    assert records[0].event_type is EventType.VOICE
    assert records[0].duration == 9


def test_row_accounting_invariant():
    text = (
        f"{HEADER}\n"
        "A,B,2013-03-01T10:15:00Z,42,VOICE\n"
        "A,B,2013-03-01T10:15:00Z,42,VOICE\n"
        "A,B,bad,42,VOICE\n"
        "C,D,2013-03-01T11:00:00Z,0,SMS\n"
    )
    records, errors = parse_cdr(text)
    duplicates = sum(r.duplicates for r in records)
    assert len(records) + len(errors) + duplicates == 4


_ts = st.datetimes(
    min_value=parse_instant("2000-01-01T00:00:00Z").replace(tzinfo=None),
    max_value=parse_instant("2030-01-01T00:00:00Z").replace(tzinfo=None),
).map(lambda dt: dt.replace(microsecond=0, tzinfo=timezone.utc))

_identifier = st.from_regex(r"[A-Za-z0-9]{1,8}", fullmatch=True)

_record = st.builds(
    CallRecord,
    caller=_identifier,
    callee=_identifier,
    timestamp=_ts,
    duration=st.integers(min_value=0, max_value=7200),
    event_type=st.sampled_from(list(EventType)),
)


@given(st.lists(_record, max_size=30, unique_by=lambda r: (r.caller, r.callee, r.timestamp, r.duration, r.event_type)))
@settings(max_examples=50)
def test_roundtrip_byte_stable(records):
    text = serialize_cdr(records)
    reparsed, errors = parse_cdr(text)
    assert not errors
    assert serialize_cdr(reparsed) == text


@given(st.lists(_record, max_size=40))
@settings(max_examples=50)
def test_anonymize_dense_and_deterministic(records):
    anon, identity = anonymize(records)
    ids = sorted(identity.to_id.values())
    assert ids == list(range(1, len(ids) + 1))
    again, _ = anonymize(records)
    assert again == anon


def test_anonymize_first_appearance_order():
    records = [record_for("X", "Y"), record_for("X", "Z")]
    anon, identity = anonymize(records)
    assert identity.to_id == {"X": 1, "Y": 2, "Z": 3}
    assert (anon[0].caller, anon[0].callee) == (1, 2)


def record_for(caller, callee):
    return CallRecord(caller, callee, parse_instant("2013-03-01T10:00:00Z"), 1, EventType.VOICE)


def test_anonymize_empty():
    anon, identity = anonymize([])
    assert anon == [] and len(identity) == 0


def test_identity_map_roundtrip(tmp_path):
    _, identity = anonymize([record_for("X", "Y")])
    path = tmp_path / "idmap.json"
    identity.save(path)
    loaded = type(identity).load(path)
    assert loaded.to_id == identity.to_id
    assert loaded.raw_of(2) == "Y"


def test_summarize_counts_partition():
    records = [record_for("A", "B") for _ in range(3)]
    sms = CallRecord("A", "C", parse_instant("2013-03-02T10:00:00Z"), 0, EventType.SMS)
    summary = summarize(records + [sms, sms])
    assert summary.record_count == 5
    assert summary.counts_by_type == {EventType.VOICE: 3, EventType.SMS: 2}
    assert sum(summary.counts_by_type.values()) == summary.record_count
    assert summary.distinct_identifiers == 3


def test_summarize_empty():
    summary = summarize([])
    assert summary.record_count == 0
    assert summary.span is None


def test_summary_span_of_generated_stream():
    start = parse_instant("2013-03-01T00:00:00Z")
    records = [
        CallRecord("A", "B", start + timedelta(minutes=21 * i), 1, EventType.VOICE)
        for i in range(1000)
    ]
    records.append(CallRecord("A", "B", start + timedelta(days=15), 1, EventType.VOICE))
    summary = summarize(records)
    assert span_length(summary) == timedelta(days=15)

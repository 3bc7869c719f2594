"""Synthetic planted-partition CDR fixtures.

Real case data is confidential, so test fixtures and benchmarks come from
this generator: a configurable number of dense clans wired together by a
known set of inter-clan bridge edges, with timestamped events spread over a
configurable span. Everything is driven by a seeded RNG, so a (config, seed)
pair always yields the same stream.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .records import CallRecord, EventType

DEFAULT_START = datetime(2013, 3, 1, tzinfo=timezone.utc)


@dataclass
class PlantedSpec:
    clans: list[list[int]]
    intra_edges: list[tuple[int, int]]
    bridges: list[tuple[int, int]]

    @property
    def node_count(self) -> int:
        return sum(len(c) for c in self.clans)

    @property
    def edge_count(self) -> int:
        return len(self.intra_edges) + len(self.bridges)

    def to_json_dict(self) -> dict:
        return {
            "clans": self.clans,
            "intra_edges": [list(e) for e in self.intra_edges],
            "bridges": [list(e) for e in self.bridges],
        }


def planted_structure(
    clan_count: int,
    clan_size: int,
    bridges: int | None = None,
    intra_prob: float = 1.0,
    seed: int = 7,
    max_parallel_bridges: int = 3,
) -> PlantedSpec:
    """Clans of dense internal structure joined by a known bridge set.

    A ring of bridges guarantees connectivity; extra bridges spread
    round-robin over remaining clan pairs (at most ``max_parallel_bridges``
    between any one pair), with distinct endpoints wherever possible so no
    single member funnels several bridges.
    """
    if clan_count < 2 or clan_size < 2:
        raise ValueError("need at least two clans of at least two members")
    bridges = clan_count if bridges is None else bridges
    if bridges < clan_count:
        raise ValueError("bridge count below clan count would disconnect the ring")
    rng = random.Random(seed)

    clans = [
        list(range(i * clan_size + 1, (i + 1) * clan_size + 1))
        for i in range(clan_count)
    ]

    intra: list[tuple[int, int]] = []
    for members in clans:
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                if intra_prob >= 1.0 or rng.random() < intra_prob:
                    intra.append((members[a], members[b]))
        if intra_prob < 1.0:
            # spanning path keeps each clan internally connected
            path = [
                (members[i], members[i + 1]) for i in range(len(members) - 1)
            ]
            present = set(intra)
            intra.extend(e for e in path if e not in present)

    pair_cycle = [(i, (i + 1) % clan_count) for i in range(clan_count)]
    extra_pairs = [
        (i, j)
        for i in range(clan_count)
        for j in range(i + 1, clan_count)
        if (i, j) not in pair_cycle and (j, i) not in pair_cycle
    ]
    schedule = list(pair_cycle)
    cursor = 0
    skipped = 0
    per_pair: dict[tuple[int, int], int] = {}
    while len(schedule) < bridges:
        candidates = extra_pairs if extra_pairs else pair_cycle
        if skipped >= len(candidates):
            raise ValueError(
                f"cannot place {bridges} bridges over {clan_count} clans "
                f"with at most {max_parallel_bridges} per clan pair"
            )
        pair = candidates[cursor % len(candidates)]
        cursor += 1
        key = tuple(sorted(pair))
        if per_pair.get(key, 1) >= max_parallel_bridges:
            skipped += 1
            continue
        skipped = 0
        per_pair[key] = per_pair.get(key, 1) + 1
        schedule.append(pair)

    bridge_edges: list[tuple[int, int]] = []
    used: dict[int, set[int]] = {i: set() for i in range(clan_count)}
    seen_pairs: set[tuple[int, int]] = set()
    for ca, cb in schedule:
        for _ in range(100):
            a = rng.choice(clans[ca])
            b = rng.choice(clans[cb])
            if a in used[ca] or b in used[cb]:
                continue
            if (min(a, b), max(a, b)) in seen_pairs:
                continue
            break
        used[ca].add(a)
        used[cb].add(b)
        seen_pairs.add((min(a, b), max(a, b)))
        bridge_edges.append((min(a, b), max(a, b)))

    return PlantedSpec(clans=clans, intra_edges=intra, bridges=bridge_edges)


DEFAULT_TYPE_MIX = ((EventType.VOICE, 0.5), (EventType.SMS, 0.4), (EventType.MMS, 0.1))


@dataclass
class SynthConfig:
    clan_count: int = 10
    clan_size: int = 15
    bridges: int | None = None
    intra_prob: float = 1.0
    events_per_edge: float = 3.0
    days: int = 15
    start: datetime = DEFAULT_START
    seed: int = 7
    noise_events: int = 0  # INTERNET/OTHER caller-activity events
    type_mix: tuple = DEFAULT_TYPE_MIX
    identifier_prefix: str = ""  # e.g. "P" to emit string identifiers


def planted_records(config: SynthConfig) -> tuple[list[CallRecord], PlantedSpec]:
    """Timestamped event stream realizing a planted clan structure.

    Every planted edge carries at least one event so the aggregated graph
    reproduces the structure exactly; extra events per edge follow the seeded
    RNG. Optional noise events exercise the non-edge-forming types.
    """
    spec = planted_structure(
        config.clan_count,
        config.clan_size,
        config.bridges,
        config.intra_prob,
        config.seed,
    )
    rng = random.Random(config.seed * 7919 + 17)
    span_seconds = config.days * 86400

    def identifier(node: int):
        return f"{config.identifier_prefix}{node}" if config.identifier_prefix else node

    def stamp() -> datetime:
        return config.start + timedelta(seconds=rng.randrange(span_seconds))

    types, weights = zip(*config.type_mix)
    events: list[CallRecord] = []
    for u, v in spec.intra_edges + spec.bridges:
        count = max(1, round(rng.expovariate(1.0 / config.events_per_edge)))
        for _ in range(count):
            src, dst = (u, v) if rng.random() < 0.5 else (v, u)
            event_type = rng.choices(types, weights)[0]
            duration = rng.randint(5, 600) if event_type == EventType.VOICE else 0
            events.append(
                CallRecord(identifier(src), identifier(dst), stamp(), duration, event_type)
            )
    all_nodes = [n for clan in spec.clans for n in clan]
    for i in range(config.noise_events):
        caller = rng.choice(all_nodes)
        service = f"svc{i % 3}"
        event_type = EventType.INTERNET if i % 2 == 0 else EventType.OTHER
        events.append(CallRecord(identifier(caller), service, stamp(), 0, event_type))

    events.sort(key=lambda rec: (rec.timestamp, str(rec.caller), str(rec.callee)))
    return events, spec

#!/usr/bin/env python3
"""Record a fixture session for the frontend contract tests.

Drives the real service through the exact request sequence the analyst
console issues, and captures every (request, response) pair plus named
snapshots. The frontend replays the gesture log against the recorded
exchanges and must land on the identical final view.

    python3 scripts/record_fixture.py [frontend/fixtures/session_fixture.json]
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

from fastapi.testclient import TestClient

from callnet.records import serialize_cdr
from callnet.server import ServerConfig, create_app
from callnet.synth import SynthConfig, planted_records

WINDOW = "2013-03-04T00:00:00Z..2013-03-12T00:00:00Z"


class Recorder:
    def __init__(self, client: TestClient):
        self.client = client
        self.exchanges: list[dict] = []

    def request(self, method: str, path: str, body=None):
        if method == "GET":
            response = self.client.get(path)
        elif method == "POST":
            response = self.client.post(path, json=body if body is not None else {})
        else:
            raise ValueError(method)
        assert response.status_code == 200, f"{method} {path}: {response.text}"
        payload = response.json()
        self.exchanges.append(
            {"method": method, "path": path, "body": body, "response": payload}
        )
        return payload


def main(out_path: Path) -> None:
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        config = ServerConfig(
            data_dir=Path(tmp) / "data", log_dir=Path(tmp) / "logs", workers=2
        )
        app = create_app(config)
        records, _ = planted_records(
            SynthConfig(clan_count=5, clan_size=4, events_per_edge=3.0, days=15, seed=17)
        )
        csv_text = serialize_cdr(records)

        with TestClient(app) as client:
            upload = client.post("/datasets", content=csv_text.encode())
            dataset_id = upload.json()["dataset_id"]
            session = client.post("/sessions", json={"dataset_id": dataset_id})
            sid = session.json()["session_id"]

            recorder = Recorder(client)
            gestures: list[dict] = []
            snapshots: dict = {}

            # job: greedy agglomeration; wait server-side so the recorded
            # status poll is a single DONE exchange
            job = recorder.request("POST", f"/sessions/{sid}/jobs/cnm", {})
            gestures.append({"kind": "runJob", "args": ["cnm"]})
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                probe = client.get(f"/sessions/{sid}/jobs/{job['job_id']}").json()
                if probe["state"] not in ("PENDING", "RUNNING"):
                    break
                time.sleep(0.02)
            assert probe["state"] == "DONE", probe
            recorder.request("GET", f"/sessions/{sid}/jobs/{job['job_id']}")

            recorder.request(
                "POST", f"/sessions/{sid}/view/granularity", {"rule": "max_q"}
            )
            gestures.append({"kind": "cut", "args": ["max_q"]})
            recorder.request("GET", f"/sessions/{sid}/view")
            gestures.append({"kind": "refreshView", "args": []})

            recorder.request("POST", f"/sessions/{sid}/view/select", {"node": 1})
            gestures.append({"kind": "select", "args": [1]})
            recorder.request("POST", f"/sessions/{sid}/view/hops", {"k": 1})
            gestures.append({"kind": "hops", "args": [1]})
            snapshots["view_mid"] = recorder.request("GET", f"/sessions/{sid}/view")
            gestures.append({"kind": "refreshView", "args": []})

            snapshots["graph"] = recorder.request("GET", f"/sessions/{sid}/graph")
            gestures.append({"kind": "refreshGraph", "args": []})
            snapshots["events"] = recorder.request(
                "GET", f"/sessions/{sid}/temporal/events"
            )
            gestures.append({"kind": "loadEvents", "args": []})
            snapshots["series"] = recorder.request(
                "GET", f"/sessions/{sid}/temporal/series?grouping=node"
            )
            gestures.append({"kind": "loadSeries", "args": []})

            recorder.request("POST", f"/sessions/{sid}/view/window", {"window": WINDOW})
            gestures.append({"kind": "window", "args": [WINDOW]})
            snapshots["final_view"] = recorder.request("GET", f"/sessions/{sid}/view")
            gestures.append({"kind": "refreshView", "args": []})

        fixture = {
            "session_id": sid,
            "exchanges": recorder.exchanges,
            "gestures": gestures,
            "snapshots": snapshots,
        }
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(json.dumps(fixture, indent=1, sort_keys=True))
        print(
            f"wrote {out_path} ({len(recorder.exchanges)} exchanges, "
            f"{len(gestures)} gestures)"
        )


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(
        "frontend/fixtures/session_fixture.json"
    )
    main(target)

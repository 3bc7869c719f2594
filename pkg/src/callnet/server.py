"""JSON-over-HTTP service exposing datasets, sessions, jobs, and views.

Payloads reuse the module export formats (graph JSON, partition JSON,
deletion-trace CSV, dendrogram JSON, activity-series JSON/CSV), so anything
the service returns matches the batch CLI byte for byte. Raw identifiers
never leave the server: uploads are anonymized on ingest and the identity
map, while stored alongside the dataset, is not served by any endpoint.

Configuration comes from an optional JSON config file with environment
overrides (CALLNET_BIND, CALLNET_PORT, CALLNET_DATA_DIR, CALLNET_LOG_DIR,
CALLNET_WORKERS, CALLNET_TOKEN, CALLNET_STATIC_DIR).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import Body, FastAPI, Header, HTTPException, Query, Response

from . import community as comm
from .errors import (
    CallnetError,
    CannotSplit,
    CommunityNotFound,
    DegenerateInput,
    FormatError,
    InputMismatch,
    InvalidPartition,
    NodeNotFound,
    NoPartition,
    RangeError,
)
from .graph import edge_list_csv
from .metrics import top_table
from .records import anonymize, parse_cdr, serialize_cdr, summarize
from .session import (
    METRIC_NAMES,
    Session,
    SessionManager,
    load_canonical_records,
)
from .temporal import TimeWindow, activity_series, event_points

_STATUS = {
    NodeNotFound: 404,
    CommunityNotFound: 404,
    RangeError: 400,
    InvalidPartition: 400,
    InputMismatch: 400,
    FormatError: 400,
    DegenerateInput: 400,
    CannotSplit: 409,
    NoPartition: 409,
}


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8151
    data_dir: Path = Path("./callnet-data")
    log_dir: Path = Path("./callnet-sessions")
    workers: int = 2
    token: str | None = None
    static_dir: Path | None = None


def load_config(path: str | Path | None = None) -> ServerConfig:
    config = ServerConfig()
    if path is not None:
        payload = json.loads(Path(path).read_text())
        for key in ("host", "token"):
            if key in payload:
                setattr(config, key, payload[key])
        for key in ("port", "workers"):
            if key in payload:
                setattr(config, key, int(payload[key]))
        for key in ("data_dir", "log_dir", "static_dir"):
            if key in payload:
                setattr(config, key, Path(payload[key]))
    env = os.environ
    if env.get("CALLNET_BIND"):
        config.host = env["CALLNET_BIND"]
    if env.get("CALLNET_PORT"):
        config.port = int(env["CALLNET_PORT"])
    if env.get("CALLNET_DATA_DIR"):
        config.data_dir = Path(env["CALLNET_DATA_DIR"])
    if env.get("CALLNET_LOG_DIR"):
        config.log_dir = Path(env["CALLNET_LOG_DIR"])
    if env.get("CALLNET_WORKERS"):
        config.workers = int(env["CALLNET_WORKERS"])
    if env.get("CALLNET_TOKEN"):
        config.token = env["CALLNET_TOKEN"]
    if env.get("CALLNET_STATIC_DIR"):
        config.static_dir = Path(env["CALLNET_STATIC_DIR"])
    return config


class DatasetStore:
    """Canonical anonymized datasets on disk, keyed by content hash."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)

    def add(self, csv_text: str) -> tuple[str, dict]:
        records, errors = parse_cdr(csv_text)
        anonymized, identity = anonymize(records)
        summary = summarize(anonymized, errors)
        dataset_id = hashlib.sha256(csv_text.encode()).hexdigest()[:12]
        (self.root / f"{dataset_id}.csv").write_text(serialize_cdr(anonymized))
        # The identity map stays server-side only; no endpoint returns it.
        identity.save(self.root / f"{dataset_id}.identity.json")
        (self.root / f"{dataset_id}.summary.json").write_text(
            json.dumps(summary.to_json_dict(), sort_keys=True)
        )
        return dataset_id, summary.to_json_dict()

    def records(self, dataset_id: str):
        path = self.root / f"{dataset_id}.csv"
        if not path.exists():
            raise NodeNotFound(f"no dataset {dataset_id!r}")
        return load_canonical_records(path)


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or load_config()
    app = FastAPI(title="callnet", version="0.1.0")
    store = DatasetStore(config.data_dir)
    manager = SessionManager(workers=config.workers, log_dir=config.log_dir)
    app.state.config = config
    app.state.manager = manager
    app.state.store = store

    def check_token(token: str | None) -> None:
        if config.token and token != config.token:
            raise HTTPException(status_code=401, detail="bad or missing token")

    def get_session(session_id: str) -> Session:
        try:
            return manager.get(session_id)
        except NodeNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    def domain_error(exc: CallnetError) -> HTTPException:
        status = _STATUS.get(type(exc), 400)
        return HTTPException(
            status_code=status,
            detail={"error": type(exc).__name__, "message": str(exc)},
        )

    # -- datasets -----------------------------------------------------------

    @app.post("/datasets")
    async def upload_dataset(
        body: bytes = Body(..., media_type="text/csv"),
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        try:
            dataset_id, summary = store.add(body.decode("utf-8"))
        except FormatError as exc:
            raise domain_error(exc) from None
        return {"dataset_id": dataset_id, "summary": summary}

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions")
    def create_session(
        payload: dict = Body(...),
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        try:
            records = store.records(payload["dataset_id"])
        except NodeNotFound as exc:
            raise domain_error(exc) from None
        session = manager.create(payload["dataset_id"], records)
        return {"session_id": session.id, "dataset_id": session.dataset_id}

    @app.get("/sessions/{session_id}/graph")
    def session_graph(session_id: str, x_auth_token: str | None = Header(default=None)):
        check_token(x_auth_token)
        session = get_session(session_id)
        with session.lock:
            return session.graph.to_json_dict()

    # -- jobs ----------------------------------------------------------------

    @app.post("/sessions/{session_id}/jobs/{kind}")
    def submit_job(
        session_id: str,
        kind: str,
        payload: dict = Body(default={}),
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        session = get_session(session_id)
        if kind == "metrics":
            names = payload.get("metrics", list(METRIC_NAMES))
            body = lambda job: session.run_metrics_sync(names, job)  # noqa: E731
        elif kind == "gn":
            stop = comm.StopRule.parse(payload.get("stop", "exhaust"))
            body = lambda job: session.run_gn_sync(stop, job)  # noqa: E731
        elif kind == "cnm":
            body = lambda job: session.run_cnm_sync(job)  # noqa: E731
        else:
            raise HTTPException(status_code=404, detail=f"unknown job kind {kind!r}")
        job = manager.submit_job(session, kind, body)
        return {"job_id": job.id, "state": job.state}

    @app.get("/sessions/{session_id}/jobs/{job_id}")
    def job_status(
        session_id: str, job_id: str, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        session = get_session(session_id)
        job = session.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id!r}")
        return job.snapshot()

    @app.delete("/sessions/{session_id}/jobs/{job_id}")
    def cancel_job(
        session_id: str, job_id: str, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        session = get_session(session_id)
        try:
            job = manager.cancel_job(session, job_id)
        except NodeNotFound as exc:
            raise domain_error(exc) from None
        return job.snapshot()

    # -- view mutations ------------------------------------------------------

    @app.post("/sessions/{session_id}/view/{action}")
    def view_mutation(
        session_id: str,
        action: str,
        payload: dict = Body(default={}),
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        session = get_session(session_id)
        try:
            if action == "granularity":
                if "rule" in payload and payload["rule"] is not None:
                    session.set_granularity(rule=comm.CutRule.parse(payload["rule"]))
                else:
                    session.set_granularity(deletions=int(payload["deletions"]))
            elif action == "hops":
                session.set_hops(
                    int(payload["k"]),
                    payload.get("force_expanded"),
                    payload.get("force_collapsed"),
                )
            elif action == "select":
                node = payload.get("node")
                session.select_node(int(node) if node is not None else None)
            elif action == "window":
                raw = payload.get("window")
                session.set_window(TimeWindow.parse(raw) if raw else None)
            elif action == "edit":
                kwargs = {k: v for k, v in payload.items() if k != "action"}
                report = session.manual_edit(payload["action"], **kwargs)
                return {"ok": True, "q": report.q, "contributions": report.contributions}
            else:
                raise HTTPException(
                    status_code=404, detail=f"unknown view action {action!r}"
                )
        except CallnetError as exc:
            raise domain_error(exc) from None
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"ok": True}

    @app.get("/sessions/{session_id}/view")
    def get_view(session_id: str, x_auth_token: str | None = Header(default=None)):
        check_token(x_auth_token)
        session = get_session(session_id)
        try:
            return session.get_view().to_json_dict()
        except CallnetError as exc:
            raise domain_error(exc) from None

    # -- temporal -------------------------------------------------------------

    @app.get("/sessions/{session_id}/temporal/events")
    def temporal_events(
        session_id: str, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        session = get_session(session_id)
        with session.lock:
            points = event_points(session.records_all, session.window)
        return {"points": [p.to_json_dict() for p in points]}

    @app.get("/sessions/{session_id}/temporal/series")
    def temporal_series(
        session_id: str,
        grouping: str = Query(default="node"),
        bin_seconds: float | None = Query(default=None),
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        from datetime import timedelta

        session = get_session(session_id)
        with session.lock:
            try:
                series = activity_series(
                    session.records_all,
                    grouping=grouping,
                    bin_width=timedelta(seconds=bin_seconds) if bin_seconds else None,
                    window=session.window,
                    partition=session.partition,
                )
            except CallnetError as exc:
                raise domain_error(exc) from None
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from None
        return series.to_json_dict()

    # -- exports ---------------------------------------------------------------

    @app.get("/sessions/{session_id}/export/{fmt}")
    def export(
        session_id: str,
        fmt: str,
        what: str = Query(default="graph"),
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        session = get_session(session_id)
        with session.lock:
            try:
                return _render_export(session, fmt, what)
            except CallnetError as exc:
                raise domain_error(exc) from None

    def _render_export(session: Session, fmt: str, what: str) -> Response:
        graph = session.graph
        if fmt == "graphml":
            if what != "graph":
                raise HTTPException(400, "graphml export supports what=graph only")
            return Response(graph.to_graphml(), media_type="application/xml")
        if fmt == "json":
            if what == "graph":
                return Response(graph.to_json(), media_type="application/json")
            if what == "partition":
                if session.partition is None:
                    raise NoPartition("no active partition")
                base = session.partition.graph or graph
                return Response(
                    comm.partition_json(base, session.partition),
                    media_type="application/json",
                )
            if what == "dendrogram":
                if session.dendrogram is None:
                    raise NoPartition("no dendrogram computed")
                return Response(session.dendrogram.to_json(), media_type="application/json")
            raise HTTPException(400, f"json export does not support what={what!r}")
        if fmt == "csv":
            if what == "edges":
                return Response(edge_list_csv(graph), media_type="text/csv")
            if what == "trace":
                if session.trace is None:
                    raise NoPartition("no deletion trace computed")
                return Response(session.trace.to_csv(), media_type="text/csv")
            if what == "series":
                series = activity_series(
                    session.records_all, "node", window=session.window
                )
                return Response(series.to_csv(), media_type="text/csv")
            if what in session.metric_vectors:
                return Response(
                    session.metric_vectors[what].to_csv(), media_type="text/csv"
                )
            if what == "top":
                vectors = [
                    session.metric_vectors[name]
                    for name in ("degree_interaction", "betweenness", "pagerank")
                    if name in session.metric_vectors
                ]
                if not vectors:
                    raise NoPartition("no metrics computed")
                return Response(top_table(vectors, 15).to_csv(), media_type="text/csv")
            raise HTTPException(400, f"csv export does not support what={what!r}")
        raise HTTPException(404, f"unknown export format {fmt!r}")

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(config.static_dir), html=True))

    return app


def main() -> None:
    """Entry point for ``python -m callnet.server [config.json]``."""
    import sys

    import uvicorn

    config = load_config(sys.argv[1] if len(sys.argv) > 1 else None)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()

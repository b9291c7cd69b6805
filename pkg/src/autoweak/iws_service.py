"""HTTP wire protocol for interactive LF vetting sessions.

JSON over HTTP:
    POST /sessions {mode?, accuracy_threshold?}        -> {session_id}
    GET  /sessions/{id}/next                           -> candidate or done
    POST /sessions/{id}/verdict {lf_id, useful}        -> counts
    POST /sessions/{id}/finalize                       -> {lf_set_path, summary}
    GET  /sessions/{id}/state                          -> full verdict log

Every endpoint is deterministic given session state. Verdicts append to a
newline-delimited JSON log so sessions replay exactly. A static token (env
var AUTOWEAK_TOKEN) guards the API when set; the vetting UI bundle is
served from the root path when a directory is provided.
"""

import json
import os
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import iws_engine

TOKEN_ENV = "AUTOWEAK_TOKEN"
TOKEN_HEADER = "x-auth-token"


class SessionCreate(BaseModel):
    mode: str = "interactive"
    accuracy_threshold: Optional[float] = None


class VerdictBody(BaseModel):
    lf_id: str
    useful: bool


class SessionRegistry:
    """In-memory session store; one lock per session serializes verdicts."""

    def __init__(self, bundle, pool, log_dir: Path):
        self.bundle = bundle
        self.pool = pool
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self._sessions = {}
        self._locks = {}
        self._registry_lock = threading.Lock()
        pool.save(self.log_dir / "pool.json")

    def create(self, mode: str, accuracy_threshold: Optional[float]) -> str:
        session = iws_engine.open_session(self.bundle, self.pool, mode, accuracy_threshold)
        sid = uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._sessions[sid] = session
            self._locks[sid] = threading.Lock()
        self._append(sid, {"event": "created", "mode": mode,
                           "accuracy_threshold": session.accuracy_threshold,
                           "pool_size": len(self.pool.lfs)})
        return sid

    def get(self, sid: str):
        with self._registry_lock:
            if sid not in self._sessions:
                raise HTTPException(404, f"unknown session {sid}")
            return self._sessions[sid], self._locks[sid]

    def log_path(self, sid: str) -> Path:
        return self.log_dir / f"{sid}.ndjson"

    def _append(self, sid: str, entry: dict) -> None:
        with self.log_path(sid).open("a", encoding="ascii") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
            fh.flush()

    def record_verdict(self, sid: str, lf_id: str, useful: bool) -> None:
        self._append(sid, {"event": "verdict", "lf_id": lf_id, "useful": useful})

    def record_finalized(self, sid: str, summary: dict) -> None:
        self._append(sid, {"event": "finalized", **summary})


def create_app(bundle, pool, log_dir, ui_dir=None) -> FastAPI:
    app = FastAPI(title="autoweak vetting service")
    registry = SessionRegistry(bundle, pool, Path(log_dir))
    app.state.registry = registry

    def check_token(request: Request):
        token = os.environ.get(TOKEN_ENV)
        if token and request.headers.get(TOKEN_HEADER) != token:
            raise HTTPException(401, "missing or invalid token")

    guarded = Depends(check_token)

    @app.post("/sessions", dependencies=[guarded])
    def create_session(body: SessionCreate):
        try:
            sid = registry.create(body.mode, body.accuracy_threshold)
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return {"session_id": sid}

    @app.get("/sessions/{sid}/next", dependencies=[guarded])
    def next_candidate(sid: str):
        session, lock = registry.get(sid)
        with lock:
            if session.finalized:
                raise HTTPException(409, "session already finalized")
            item = iws_engine.session_next(session)
            counts = {"decided": session.decided_count,
                      "pending": len(session.pending_ids)}
            if item is None:
                return {"done": True, **counts}
            lf_id, stats = item
            lf = next(l for l in session.pool.lfs if l.lf_id == lf_id)
            committee_ids = [i for i, v in session.verdicts.items()
                             if v == iws_engine.USEFUL]
            return {
                "done": False,
                "lf_id": lf_id,
                "stats": stats.as_dict(),
                "target_class": lf.target_class,
                "learner": {"kind": lf.learner.kind,
                            "feature_subset": lf.learner.feature_subset,
                            "abstain_margin": lf.abstain_margin},
                "committee": {
                    "size": len(committee_ids),
                    "coverage": iws_engine.committee_coverage(session, registry.bundle),
                },
                **counts,
            }

    @app.post("/sessions/{sid}/verdict", dependencies=[guarded])
    def record_verdict(sid: str, body: VerdictBody):
        session, lock = registry.get(sid)
        with lock:
            try:
                iws_engine.session_verdict(session, body.lf_id, body.useful)
            except KeyError as exc:
                raise HTTPException(404, str(exc))
            except ValueError as exc:
                raise HTTPException(409, str(exc))
            registry.record_verdict(sid, body.lf_id, body.useful)
            return {"ok": True, "decided": session.decided_count,
                    "pending": len(session.pending_ids)}

    @app.post("/sessions/{sid}/finalize", dependencies=[guarded])
    def finalize(sid: str):
        session, lock = registry.get(sid)
        with lock:
            if session.finalized:
                raise HTTPException(409, "session already finalized")
            if session.mode == "automated":
                final = iws_engine.run_automated(session)
            else:
                final = iws_engine.finalize_session(session)
            path = registry.log_dir / f"{sid}.lfset.json"
            final.save(path)
            summary = {"selected": len(final.lfs),
                       "pool_size": len(session.pool.lfs),
                       "warning": session.warning}
            registry.record_finalized(sid, summary)
            return {"lf_set_path": str(path), "summary": summary}

    @app.get("/sessions/{sid}/state", dependencies=[guarded])
    def state(sid: str):
        session, lock = registry.get(sid)
        with lock:
            return {
                "mode": session.mode,
                "accuracy_threshold": session.accuracy_threshold,
                "finalized": session.finalized,
                "warning": session.warning,
                "decided": session.decided_count,
                "pending": len(session.pending_ids),
                "verdicts": list(session.verdict_order),
            }

    @app.exception_handler(ValueError)
    def value_error_handler(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def read_verdict_log(path) -> list:
    """Verdict entries (in order) from a session NDJSON log."""
    entries = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.strip():
            continue
        blob = json.loads(line)
        if blob.get("event") == "verdict":
            entries.append({"lf_id": blob["lf_id"], "useful": blob["useful"]})
    return entries

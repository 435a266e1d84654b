"""HTTP session API consumed by the web UI and scripted clients.

State is an in-memory session store; sessions expire after an idle TTL.
Concurrent feedback requests on one session are serialized by a per-session
lock (the second request waits, then usually finds the round advanced and
gets a 422, or the session terminated and gets a 409); distinct sessions
never contend.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, ConfigDict, Field

from .girtree import GirTree
from .model import Query, ValidationError
from .session import Phase, Session, Strategy, start_session, stop_session, submit_feedback

DEFAULT_TTL_SECONDS = 30 * 60


class CreateSessionBody(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lat: float
    lon: float
    words: list[int] = Field(min_length=1)
    k: int | None = Field(default=None, ge=1)
    theta: int | None = Field(default=None, ge=2)
    lam: float | None = Field(default=None, alias="lambda", ge=0.0, le=1.0)
    strategy: str | None = None


class FeedbackBody(BaseModel):
    chosen_id: int


@dataclass
class _StoredSession:
    session: Session
    lock: threading.Lock = dc_field(default_factory=threading.Lock)
    last_used: float = dc_field(default_factory=time.monotonic)


class _SessionStore:
    def __init__(self, ttl_seconds: float):
        self.ttl = ttl_seconds
        self._by_id: dict[str, _StoredSession] = {}
        self._lock = threading.Lock()

    def put(self, session: Session) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._sweep()
            self._by_id[sid] = _StoredSession(session)
        return sid

    def get(self, sid: str) -> _StoredSession | None:
        with self._lock:
            self._sweep()
            stored = self._by_id.get(sid)
            if stored is not None:
                stored.last_used = time.monotonic()
            return stored

    def _sweep(self) -> None:
        now = time.monotonic()
        dead = [sid for sid, s in self._by_id.items() if now - s.last_used > self.ttl]
        for sid in dead:
            del self._by_id[sid]


def _error(status: int, message: str, loc: list | None = None) -> JSONResponse:
    detail = [{"loc": loc or [], "msg": message}]
    return JSONResponse(status_code=status, content={"detail": detail})


def _candidate_payload(session: Session) -> list[dict]:
    out = []
    for oid in session.current_shown:
        obj, sp = session.candidates[oid]
        rec = {
            "id": obj.id,
            "lat": obj.lat,
            "lon": obj.lon,
            "proximity": sp.proximity,
            "similarity": sp.similarity,
        }
        if obj.image_url is not None:
            rec["image_url"] = obj.image_url
        out.append(rec)
    return out


def _results_payload(session: Session, sid: str) -> dict:
    assert session.results is not None and session.estimate is not None
    results = []
    for obj, score in session.results:
        rec = {"id": obj.id, "score": score, "lat": obj.lat, "lon": obj.lon}
        if obj.image_url is not None:
            rec["image_url"] = obj.image_url
        results.append(rec)
    p = session.estimate.preference
    return {
        "session_id": sid,
        "done": True,
        "results": results,
        "rounds_used": len([r for r in session.rounds if r.chosen is not None]),
        "p_hat": {
            "p0": p.p0,
            "words": list(session.query.words),
            "weights": list(p.pw),
        },
    }


def _round_payload(session: Session, sid: str) -> dict:
    return {
        "session_id": sid,
        "round": session.rounds[-1].round_no,
        "candidates": _candidate_payload(session),
    }


def _state_payload(session: Session, sid: str) -> dict:
    if session.phase is Phase.TERMINATED:
        body = _results_payload(session, sid)
    else:
        body = _round_payload(session, sid)
        body["done"] = False
    body["phase"] = session.phase.value
    return body


def create_app(
    tree: GirTree,
    default_k: int = 20,
    default_theta: int = 8,
    default_lambda: float = 0.5,
    default_strategy: str = "densest",
    session_ttl_seconds: float = DEFAULT_TTL_SECONDS,
    seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="geoprefer", docs_url=None, redoc_url=None)
    store = _SessionStore(session_ttl_seconds)
    seed_counter = {"next": seed}
    seed_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": list(err.get("loc", [])), "msg": err.get("msg", "invalid")}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=422, content={"detail": detail})

    @app.get("/healthz")
    def healthz() -> PlainTextResponse:
        return PlainTextResponse("ok")

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            q = Query(
                lon=body.lon,
                lat=body.lat,
                words=tuple(sorted(set(body.words))),
                k=body.k if body.k is not None else default_k,
                theta=body.theta if body.theta is not None else default_theta,
                lam=body.lam if body.lam is not None else default_lambda,
            )
            strategy = Strategy.parse(body.strategy or default_strategy)
        except ValidationError as exc:
            return _error(422, str(exc), ["body"])
        with seed_lock:
            session_seed = seed_counter["next"]
            seed_counter["next"] += 1
        session = start_session(tree, q, strategy, session_seed)
        sid = store.put(session)
        if session.phase is Phase.TERMINATED:
            return JSONResponse(status_code=201, content=_results_payload(session, sid))
        return JSONResponse(status_code=201, content=_round_payload(session, sid))

    @app.post("/sessions/{sid}/feedback")
    def feedback(sid: str, body: FeedbackBody):
        stored = store.get(sid)
        if stored is None:
            return _error(404, f"unknown session {sid}")
        with stored.lock:
            session = stored.session
            if session.phase is Phase.TERMINATED:
                return _error(409, "session already terminated")
            if body.chosen_id not in session.current_shown:
                return _error(
                    422,
                    f"chosen_id {body.chosen_id} was not shown this round",
                    ["body", "chosen_id"],
                )
            submit_feedback(session, body.chosen_id)
            if session.phase is Phase.TERMINATED:
                return _results_payload(session, sid)
            return _round_payload(session, sid)

    @app.post("/sessions/{sid}/stop")
    def stop(sid: str):
        stored = store.get(sid)
        if stored is None:
            return _error(404, f"unknown session {sid}")
        with stored.lock:
            stop_session(stored.session)
            return _results_payload(stored.session, sid)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        stored = store.get(sid)
        if stored is None:
            return _error(404, f"unknown session {sid}")
        with stored.lock:
            return _state_payload(stored.session, sid)

    @app.get("/objects/{oid}")
    def get_object(oid: int):
        obj = tree.object_store.get(oid)
        if obj is None:
            return _error(404, f"unknown object {oid}")
        rec = {
            "id": obj.id,
            "lat": obj.lat,
            "lon": obj.lon,
            "words": list(obj.words),
            "image_url": obj.image_url,
            "tags": list(obj.tags) if obj.tags is not None else None,
        }
        return rec

    return app

"""HTTP/JSON session service for the playground UI and other clients.

Each session owns one engine chain; requests against a session are strictly
serialized (a busy session answers 409 rather than queueing). All responses
carry the emulator version and step index.
"""

from __future__ import annotations

import time
import uuid
from contextlib import contextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import world
from .emulator import GroundedAction
from .errors import EcosimError, ParseError
from .library import list_rules, load_prelude, search_path
from .simulator import Session, pretty_action_text

DEFAULT_TTL_SECONDS = 30 * 60


class SessionIn(BaseModel):
    libs: Optional[list] = None


class UtteranceIn(BaseModel):
    text: str


class WhatIfIn(BaseModel):
    commands: list
    query: str


class _Entry:
    def __init__(self, session: Session):
        self.session = session
        self.last_used = time.monotonic()


def _action_json(session: Session, act: GroundedAction) -> dict:
    return {
        "verb": act.verb,
        "patient": act.patient,
        "target": act.target,
        "agent": act.agent,
        "label": pretty_action_text(session.emulator, session.state, act),
    }


def create_app(lib_path=None, default_libs=("core",),
               ttl_seconds: float = DEFAULT_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="ecosim service")
    sessions: dict = {}

    def purge(now: float) -> None:
        expired = [sid for sid, e in sessions.items() if now - e.last_used > ttl_seconds]
        for sid in expired:
            del sessions[sid]

    def entry(sid: str) -> _Entry:
        now = time.monotonic()
        purge(now)
        e = sessions.get(sid)
        if e is None:
            raise HTTPException(status_code=404, detail=f"no session {sid}")
        e.last_used = now
        return e

    @contextmanager
    def locked(sid: str):
        e = entry(sid)
        if not e.session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="session is busy")
        try:
            yield e.session
        finally:
            e.session.lock.release()

    def meta(session: Session) -> dict:
        return {
            "emulator_version": session.emulator.version,
            "step": session.step_index,
        }

    @app.post("/session", status_code=201)
    def create_session(body: Optional[SessionIn] = None):
        libs = body.libs if body and body.libs is not None else list(default_libs)
        try:
            em = load_prelude(libs, search_path(lib_path))
        except EcosimError as err:
            raise HTTPException(status_code=422, detail=str(err))
        sid = uuid.uuid4().hex
        sessions[sid] = _Entry(Session(em))
        return {"session_id": sid, "libs": libs, **meta(sessions[sid].session)}

    @app.post("/session/{sid}/utterance")
    def utterance(sid: str, body: UtteranceIn):
        with locked(sid) as session:
            try:
                record = session.submit(body.text)
            except ParseError as err:
                raise HTTPException(status_code=422, detail={
                    "message": err.message,
                    "span": list(err.span),
                    "expected": sorted(err.expected),
                })
            except EcosimError as err:
                raise HTTPException(status_code=422, detail={"message": str(err), "span": None})
            return {"record": record.to_json(), **meta(session)}

    @app.get("/session/{sid}/state")
    def state(sid: str):
        with locked(sid) as session:
            return {
                "state": world.to_canonical_dict(session.state),
                "canonical_json": world.canonical_json(session.state),
                "state_hash": world.state_hash(session.state),
                **meta(session),
            }

    @app.get("/session/{sid}/affordances")
    def affordances(sid: str):
        with locked(sid) as session:
            return {
                "actions": [_action_json(session, a) for a in session.affordances()],
                **meta(session),
            }

    @app.post("/session/{sid}/whatif")
    def whatif(sid: str, body: WhatIfIn):
        with locked(sid) as session:
            try:
                answer = session.whatif(body.commands, body.query)
            except ParseError as err:
                raise HTTPException(status_code=422, detail={
                    "message": err.message,
                    "span": list(err.span),
                    "expected": sorted(err.expected),
                })
            except EcosimError as err:
                raise HTTPException(status_code=422, detail={"message": str(err), "span": None})
            return {
                "answer": {"kind": answer.kind, "text": answer.text,
                           "value": answer.value.to_json() if answer.value else None},
                "applied": False,
                **meta(session),
            }

    @app.get("/session/{sid}/rules")
    def rules(sid: str):
        with locked(sid) as session:
            return {"rules": list_rules(session.emulator), **meta(session)}

    @app.get("/session/{sid}/transcript")
    def transcript(sid: str):
        with locked(sid) as session:
            return {
                "lines": [r.text for r in session.records],
                "records": [r.to_json() for r in session.records],
                **meta(session),
            }

    @app.delete("/session/{sid}")
    def delete(sid: str):
        e = entry(sid)
        final = meta(e.session)
        del sessions[sid]
        return {"deleted": True, **final}

    return app

"""WebSocket session server.

One endpoint, `/ws`, speaks a small JSON protocol. Requests carry a
client-chosen `id` and an `op`; replies echo the id with either a result
or a structured error:

    -> {"id": 1, "op": "create-session", "model": "<source>",
        "seed": 7, "mode": "instruction"}
    <- {"id": 1, "ok": true, "result": {"session": "s1", "state": {...}}}

Ops: create-session, step-event, choose, run-step, state, trace, check,
destroy-session. After a step completes (or fails) the server also pushes
{"push": "step-complete" | "step-error", "session": ..., "state": {...}}
to the owning connection, so clients can re-render without polling.

Sessions live in server memory, keyed by id, and die with their
connection. `constabl serve` runs this app with uvicorn; the port comes
from --port or the CONSTABL_PORT environment variable (default 8765).
"""

from __future__ import annotations

import itertools
import json
import os

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .diagnostics import ParseError
from .parser import parse_model
from .session import Session, SessionError
from .structural import check_model

DEFAULT_PORT = 8765


def default_port() -> int:
    return int(os.environ.get("CONSTABL_PORT", DEFAULT_PORT))


def create_app() -> FastAPI:
    app = FastAPI(title="constabl session server")
    app.state.counter = itertools.count(1)

    @app.get("/health")
    async def health() -> dict:
        return {"ok": True}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        sessions: dict[str, Session] = {}
        try:
            while True:
                try:
                    text = await ws.receive_text()
                except KeyError:
                    await ws.send_json(_bad_frame("expected a text frame"))
                    continue
                try:
                    msg = json.loads(text)
                except ValueError:
                    await ws.send_json(_bad_frame("frame is not valid JSON"))
                    continue
                if not isinstance(msg, dict):
                    await ws.send_json(_bad_frame("frame must be a JSON object"))
                    continue
                reply = await _handle(app, ws, sessions, msg)
                await ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            sessions.clear()

    return app


def _bad_frame(message: str) -> dict:
    return {"id": None, "ok": False,
            "error": {"code": "bad-request", "message": message, "data": {}}}


async def _handle(app: FastAPI, ws: WebSocket, sessions: dict, msg: dict) -> dict:
    msg_id = msg.get("id")
    op = msg.get("op")

    def ok(result: dict) -> dict:
        return {"id": msg_id, "ok": True, "result": result}

    def err(code: str, message: str, data: dict | None = None) -> dict:
        return {"id": msg_id, "ok": False,
                "error": {"code": code, "message": message, "data": data or {}}}

    def get_session() -> Session:
        sid = msg.get("session")
        if sid not in sessions:
            raise SessionError("no-such-session", f"unknown session {sid!r}")
        return sessions[sid]

    try:
        match op:
            case "create-session":
                source = msg.get("model")
                if not isinstance(source, str):
                    return err("bad-request", "create-session needs a 'model' string")
                try:
                    model = parse_model(source, file="<session>")
                except ParseError as e:
                    return err(
                        "parse-error", "the model does not parse",
                        {"diagnostics": [d.format() for d in e.diagnostics]},
                    )
                seed = msg.get("seed", 0)
                if not isinstance(seed, int) or isinstance(seed, bool):
                    return err("bad-request", f"'seed' must be an integer, got {seed!r}")
                session = Session(
                    model,
                    seed=seed,
                    mode=msg.get("mode", "event"),
                    track_reads=bool(msg.get("track_reads", False)),
                )
                sid = f"s{next(app.state.counter)}"
                sessions[sid] = session
                return ok({"session": sid, "state": session.state()})
            case "step-event":
                session = get_session()
                try:
                    outcome = session.step_event(msg.get("event", ""))
                except SessionError as e:
                    if e.code == "step-error":
                        await _push(ws, msg.get("session"), "step-error", session)
                    raise
                if not session.mid_step:
                    await _push(ws, msg.get("session"), "step-complete", session)
                return ok({"outcome": outcome, "state": session.state()})
            case "choose":
                session = get_session()
                try:
                    outcome = session.choose(msg.get("cp", ""))
                except SessionError as e:
                    if e.code == "step-error":
                        await _push(ws, msg.get("session"), "step-error", session)
                    raise
                if not session.mid_step:
                    await _push(ws, msg.get("session"), "step-complete", session)
                return ok({"outcome": outcome, "state": session.state()})
            case "run-step":
                session = get_session()
                try:
                    outcome = session.run_step()
                except SessionError as e:
                    if e.code == "step-error":
                        await _push(ws, msg.get("session"), "step-error", session)
                    raise
                await _push(ws, msg.get("session"), "step-complete", session)
                return ok({"outcome": outcome, "state": session.state()})
            case "state":
                return ok({"state": get_session().state()})
            case "trace":
                return ok({"ndjson": get_session().trace_ndjson()})
            case "check":
                source = msg.get("model")
                if not isinstance(source, str):
                    return err("bad-request", "check needs a 'model' string")
                try:
                    model = parse_model(source, file="<check>")
                except ParseError as e:
                    return ok({"diagnostics": [d.format() for d in e.diagnostics],
                               "ok": False})
                diags = check_model(model)
                return ok({
                    "diagnostics": [d.format() for d in diags],
                    "ok": not any(d.severity == "error" for d in diags),
                })
            case "destroy-session":
                sid = msg.get("session")
                if sid in sessions:
                    del sessions[sid]
                    return ok({"destroyed": sid})
                return err("no-such-session", f"unknown session {sid!r}")
            case _:
                return err("bad-request", f"unknown op {op!r}")
    except SessionError as e:
        return err(e.code, str(e), e.data)
    except WebSocketDisconnect:
        raise
    except Exception as e:  # one bad request must not kill the connection
        return err("internal-error", f"{type(e).__name__}: {e}")


async def _push(ws: WebSocket, sid, event: str, session: Session) -> None:
    await ws.send_json({"push": event, "session": sid, "state": session.state()})


app = create_app()


def serve(port: int | None = None, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port if port is not None else default_port(),
                log_level="warning")

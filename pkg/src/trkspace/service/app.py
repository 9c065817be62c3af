"""HTTP/WebSocket service over a trace store.

The core engine stays a plain library; this module wraps one Store in a
FastAPI app.  Reads are cheap dictionary lookups; replays run one at a time
(requests serialize on a lock) and every committed call is broadcast to
WebSocket subscribers as ``{"session": id, "ordinal": n}`` so timelines can
follow a replay live.
"""

from __future__ import annotations

import asyncio
import json
import threading

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect

from ..compare import align, compare_states, view
from ..hooks import default_hooks
from ..lang.errors import TrkError
from ..replay import (
    ReplayPlan,
    replay_from_snapshot,
    replay_function,
    replay_session,
)
from ..runtime import make_env
from ..store import Store, StoreError
from .schemas import (
    AlignPairOut,
    CallOut,
    CodeOut,
    EventOut,
    ReplayRequest,
    ReplayResponse,
    SessionOut,
    SnapshotOut,
)


def create_app(store: Store, env_factory=None, hooks=None) -> FastAPI:
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.loop = asyncio.get_running_loop()
        yield

    app = FastAPI(title="trkspace", version="0.1.0", lifespan=lifespan)
    app.state.store = store
    app.state.replay_lock = threading.Lock()
    app.state.sockets = set()
    app.state.loop = None
    env_factory = env_factory or (lambda seed: make_env(seed=seed))
    hooks = hooks if hooks is not None else default_hooks()

    def broadcast(session_id: int, ordinal: int) -> None:
        loop = app.state.loop
        if loop is None or not app.state.sockets:
            return
        message = json.dumps({"session": session_id, "ordinal": ordinal})

        def send():
            for ws in list(app.state.sockets):
                asyncio.ensure_future(_safe_send(ws, message))

        loop.call_soon_threadsafe(send)

    async def _safe_send(ws: WebSocket, message: str) -> None:
        try:
            await ws.send_text(message)
        except Exception:
            app.state.sockets.discard(ws)

    store.add_commit_listener(broadcast)

    # --- reads ---

    @app.get("/sessions", response_model=list[SessionOut])
    def sessions():
        return [vars(s) for s in sorted(store.sessions.values(),
                                        key=lambda s: s.id)]

    @app.get("/sessions/{sid}", response_model=SessionOut)
    def session(sid: int):
        s = store.sessions.get(sid)
        if s is None:
            raise HTTPException(404, f"unknown session {sid}")
        return vars(s)

    @app.get("/sessions/{sid}/calls", response_model=list[CallOut])
    def calls(sid: int, top_level: bool = True,
              start: int | None = None, end: int | None = None):
        if sid not in store.sessions:
            raise HTTPException(404, f"unknown session {sid}")
        out = store.get_calls(session=sid, top_level_only=top_level)
        if start is not None:
            out = [c for c in out if c.ordinal >= start]
        if end is not None:
            out = [c for c in out if c.ordinal <= end]
        return [_call_out(c) for c in out]

    def _call_out(c):
        return {"id": c.id, "session": c.session, "ordinal": c.ordinal,
                "function": c.function, "code": c.code,
                "parent_call": c.parent_call,
                "has_snapshots": bool(store.get_trace(c.id)),
                "event_count": len(store.get_events_for_call(c.id))}

    @app.get("/calls/{cid}", response_model=CallOut)
    def call(cid: int):
        try:
            return _call_out(store.get_call(cid))
        except StoreError as exc:
            raise HTTPException(404, str(exc))

    @app.get("/calls/{cid}/trace", response_model=list[SnapshotOut])
    def trace(cid: int):
        try:
            return [{"id": s.id, "call": s.call, "ordinal": s.ordinal,
                     "line_no": s.line_no} for s in store.get_trace(cid)]
        except StoreError as exc:
            raise HTTPException(404, str(exc))

    @app.get("/state/{kind}/{sid}")
    def state(kind: str, sid: int,
              facet: str = Query("V", pattern="^(V|E|C|hooks)$")):
        try:
            return {"kind": kind, "id": sid, "facet": facet,
                    "value": view(store, kind, sid, facet)}
        except StoreError as exc:
            raise HTTPException(404, str(exc))

    @app.get("/calls/{cid}/events", response_model=list[EventOut])
    def events(cid: int):
        try:
            recs = store.get_events_for_call(cid)
        except StoreError as exc:
            raise HTTPException(404, str(exc))
        return [{"callable": e.callable, "seq": e.seq,
                 "args": [store.render(a) for a in e.args],
                 "return_value": store.render(e.return_ref)} for e in recs]

    @app.get("/code/{code_id}", response_model=CodeOut)
    def code(code_id: int):
        cv = store.code_versions.get(code_id)
        if cv is None:
            raise HTTPException(404, f"unknown code version {code_id}")
        return vars(cv)

    @app.get("/compare")
    def compare(kind: str, a: int, b: int):
        try:
            return compare_states(store, kind, a, kind, b).to_record()
        except (StoreError, TrkError) as exc:
            raise HTTPException(400, str(exc))

    @app.get("/align", response_model=list[AlignPairOut])
    def align_route(session_a: int, session_b: int,
                    start_a: int | None = None, end_a: int | None = None,
                    start_b: int | None = None, end_b: int | None = None,
                    snapshots: bool = True):
        wa = (start_a, end_a) if start_a is not None and end_a is not None else None
        wb = (start_b, end_b) if start_b is not None and end_b is not None else None
        try:
            pairs = align(store, session_a, session_b, wa, wb,
                          with_snapshots=snapshots)
        except (StoreError, TrkError) as exc:
            raise HTTPException(400, str(exc))
        return [{"a": p.a, "b": p.b, "snapshots": p.snapshots} for p in pairs]

    @app.get("/export")
    def export():
        return {"stream": store.export_stream()}

    # --- replay ---

    @app.post("/replay", response_model=ReplayResponse)
    def replay(req: ReplayRequest):
        plan = ReplayPlan(window=req.window, migrate=req.migrate,
                          migrate_names=set(req.migrate_names),
                          manual_globals=dict(req.manual_globals),
                          mocked=set(req.mocked),
                          code_override=dict(req.code_override))
        env = env_factory(req.seed)
        with app.state.replay_lock:
            try:
                if req.mode == "session":
                    result = replay_session(store, req.target, plan, env,
                                            hooks, label=req.label)
                elif req.mode == "call":
                    result = replay_function(store, req.target, plan, env,
                                             hooks, label=req.label)
                else:
                    result = replay_from_snapshot(store, req.target, plan, env,
                                                  hooks, label=req.label)
            except (StoreError, TrkError) as exc:
                raise HTTPException(400, str(exc))
        return {"status": "failed" if result.error else "done",
                "session": result.session_id, "calls": result.calls,
                "snapshots": result.snapshots, "events": result.events,
                "error": result.error}

    # --- live updates ---

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        app.state.sockets.add(websocket)
        try:
            while True:
                await websocket.receive_text()
        except WebSocketDisconnect:
            pass
        finally:
            app.state.sockets.discard(websocket)

    return app

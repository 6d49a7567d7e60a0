"""Long-running pit-wall service.

HTTP/JSON commands with a WebSocket stream per session. Sessions wrap the
race environment one lap at a time; optimizer jobs run on a bounded worker
pool with polled progress. Persistence is one directory per session
(spec.json, log.jsonl with one fsync per lap, meta.json), so finished races
survive restarts without a database.
"""

from __future__ import annotations

import asyncio
import json
import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from .config import Compound, ConfigError, RaceConfig
from .env import AgentAction, RaceEnv, ScenarioSpec, SteppedAfterDone, observe
from .minlp import BnbOptions, Infeasible, branch_and_bound, build_ocp
from .race_model import RaceState, strategy_of
from .sac.train import evaluate, load_checkpoint


# ---------------------------------------------------------------------------
# Wire models


class ActionBody(BaseModel):
    f: float | None = None
    b: float | None = None
    ps: int | None = Field(default=None, ge=0, le=3)
    agent: bool = False


class DisturbanceBody(BaseModel):
    tw_delta: float


class SessionBody(BaseModel):
    spec: dict = Field(default_factory=dict)
    mode: str = "manual"   # manual | agent-assisted


class OptimizeBody(BaseModel):
    config: dict = Field(default_factory=dict)
    state: dict | None = None     # optional mid-race snapshot
    start_lap: int = 0
    gap: float = 0.05
    max_nodes: int = 20000


def state_to_wire(state: RaceState) -> dict:
    return {
        "battery": state.battery,
        "fuel": state.fuel,
        "mass": state.mass,
        "race_time": state.race_time,
        "compound_changes": state.compound_changes,
        "compound": int(state.compound),
        "compound_label": state.compound.label,
        "wear": state.wear,
        "tire_age": state.tire_age,
        "outlap": state.outlap,
    }


def state_from_wire(data: dict) -> RaceState:
    return RaceState(
        battery=float(data["battery"]), fuel=float(data["fuel"]), mass=float(data["mass"]),
        race_time=float(data.get("race_time", 0.0)),
        compound_changes=int(data.get("compound_changes", 0)),
        compound=Compound(int(data["compound"])), wear=float(data.get("wear", 0.0)),
        tire_age=int(data.get("tire_age", 0)), outlap=bool(data.get("outlap", False)),
    )


# ---------------------------------------------------------------------------
# Sessions


@dataclass
class Session:
    sid: str
    spec: ScenarioSpec
    env: RaceEnv
    mode: str
    dirpath: Path
    lock: threading.Lock = field(default_factory=threading.Lock)
    status: str = "running"
    events: list[dict] = field(default_factory=list)
    subscribers: list = field(default_factory=list)

    @property
    def lap(self) -> int:
        return self.env.k

    def summary(self) -> dict:
        return {
            "id": self.sid,
            "status": self.status,
            "mode": self.mode,
            "lap": self.lap,
            "n_laps": self.spec.cfg.n_laps,
            "state": state_to_wire(self.env.state),
            "observation": observe(self.env.state, self.env.t_lap_prev, self.env.k, self.spec.cfg).tolist(),
            "t_lap_prev": self.env.t_lap_prev,
        }


class SessionStore:
    def __init__(self, data_dir: Path):
        self.data_dir = data_dir
        self.sessions: dict[str, Session] = {}
        (data_dir / "sessions").mkdir(parents=True, exist_ok=True)

    def create(self, spec: ScenarioSpec, mode: str) -> Session:
        sid = uuid.uuid4().hex[:12]
        dirpath = self.data_dir / "sessions" / sid
        dirpath.mkdir(parents=True, exist_ok=True)
        env = RaceEnv(spec)
        env.reset()
        session = Session(sid=sid, spec=spec, env=env, mode=mode, dirpath=dirpath)
        (dirpath / "spec.json").write_text(json.dumps(spec.to_dict(), sort_keys=True))
        self._write_meta(session)
        self.sessions[sid] = session
        return session

    def get(self, sid: str) -> Session:
        if sid not in self.sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return self.sessions[sid]

    def append_event(self, session: Session, event: dict) -> None:
        session.events.append(event)
        with open(session.dirpath / "log.jsonl", "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_meta(self, session: Session) -> None:
        (session.dirpath / "meta.json").write_text(json.dumps({
            "id": session.sid, "status": session.status, "lap": session.lap,
            "mode": session.mode,
        }, sort_keys=True))

    def finish(self, session: Session) -> None:
        session.status = "finished"
        self._write_meta(session)
        (session.dirpath / "result.json").write_text(json.dumps({
            "t_race": session.env.state.race_time,
            "strategy": str(strategy_of_events(session)),
            "legal": session.env.state.compound_changes >= 1,
        }, sort_keys=True))


def strategy_of_events(session: Session):
    from .race_model import Strategy
    stops = tuple(
        (e["lap"], Compound(e["applied"]["ps"]))
        for e in session.events if e.get("applied", {}).get("ps", 0) > 0
    )
    return Strategy(initial=session.spec.cfg.initial_compound, stops=stops)


# ---------------------------------------------------------------------------
# Optimizer jobs


@dataclass
class OptimizeJob:
    jid: str
    status: str = "queued"        # queued | running | done | failed
    progress: dict = field(default_factory=dict)
    result: dict | None = None
    error: str | None = None


class JobRunner:
    """Bounded worker pool (default one worker) with progress polling."""

    def __init__(self, workers: int = 1):
        self.jobs: dict[str, OptimizeJob] = {}
        self.queue: queue.Queue = queue.Queue()
        self.workers = [
            threading.Thread(target=self._loop, daemon=True) for _ in range(workers)
        ]
        for w in self.workers:
            w.start()

    def submit(self, body: OptimizeBody) -> OptimizeJob:
        job = OptimizeJob(jid=uuid.uuid4().hex[:12])
        self.jobs[job.jid] = job
        self.queue.put((job, body))
        return job

    def get(self, jid: str) -> OptimizeJob:
        if jid not in self.jobs:
            raise HTTPException(status_code=404, detail=f"unknown job {jid}")
        return self.jobs[jid]

    def _loop(self) -> None:
        while True:
            job, body = self.queue.get()
            job.status = "running"
            try:
                cfg = RaceConfig.from_dict(body.config) if body.config else RaceConfig()
                init = state_from_wire(body.state) if body.state else None
                problem = build_ocp(cfg, init_state=init, start_lap=body.start_lap)

                def on_progress(nodes, incumbent, lb):
                    job.progress = {"nodes": nodes, "incumbent": incumbent, "lower_bound": lb}

                sol = branch_and_bound(problem, BnbOptions(
                    gap=body.gap, max_nodes=body.max_nodes, on_progress=on_progress,
                ))
                job.result = sol.to_dict()
                job.status = "done"
            except (Infeasible, ConfigError) as err:
                job.status = "failed"
                job.error = str(err)
            except Exception as err:  # surface anything else as a failed job
                job.status = "failed"
                job.error = f"{type(err).__name__}: {err}"


# ---------------------------------------------------------------------------
# App factory


def create_app(data_dir: str | Path = "./pitwall-data", checkpoint: str | Path | None = None,
               optimizer_workers: int = 1) -> FastAPI:
    data_dir = Path(data_dir)
    app = FastAPI(title="racestrat pit-wall service")
    store = SessionStore(data_dir)
    jobs = JobRunner(workers=optimizer_workers)
    agent = None
    if checkpoint is not None and Path(checkpoint).exists():
        agent, _ = load_checkpoint(checkpoint)
    app.state.store = store
    app.state.jobs = jobs
    app.state.agent = agent

    def require_agent():
        if agent is None:
            raise HTTPException(status_code=503, detail="no policy checkpoint loaded")
        return agent

    @app.post("/sessions")
    def create_session(body: SessionBody):
        try:
            spec = ScenarioSpec.from_dict(body.spec) if body.spec else ScenarioSpec()
        except (ConfigError, ValueError) as err:
            raise HTTPException(status_code=422, detail=str(err))
        session = store.create(spec, body.mode)
        return {"id": session.sid, **session.summary()}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return store.get(sid).summary()

    @app.post("/sessions/{sid}/step")
    def step_session(sid: str, body: ActionBody):
        session = store.get(sid)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="a step is already in flight")
        try:
            if session.status != "running":
                raise HTTPException(status_code=409, detail="session is finished")
            if body.agent:
                action = require_agent().act(
                    observe(session.env.state, session.env.t_lap_prev, session.env.k, session.spec.cfg),
                    deterministic=True,
                )
            else:
                if body.f is None or body.b is None or body.ps is None:
                    raise HTTPException(status_code=422, detail="action needs f, b and ps (or agent=true)")
                action = AgentAction(f=body.f, b=body.b, ps=body.ps)
            try:
                result = session.env.step(action)
            except SteppedAfterDone:
                raise HTTPException(status_code=409, detail="session is finished")
            record = result.info["record"]
            event = {
                "type": "lap",
                "lap": record.k,
                "reward": result.reward,
                "done": result.done,
                "state": state_to_wire(session.env.state),
                "observation": result.obs.tolist(),
                "lap_record": vars(record),
                "applied": {
                    "de_b": result.info["applied"].de_b,
                    "de_f": result.info["applied"].de_f,
                    "ps": result.info["applied"].ps,
                },
                "flags": {
                    "battery_case": result.info["battery_case"],
                    "fuel_case": result.info["fuel_case"],
                    "forced_compound": result.info["forced_compound"],
                    "out_of_box": result.info["out_of_box"],
                },
                "kind": result.info["kind"],
            }
            store.append_event(session, event)
            if result.done:
                store.finish(session)
            _broadcast(session, event)
            return event
        finally:
            session.lock.release()

    @app.post("/sessions/{sid}/disturbance")
    def inject(sid: str, body: DisturbanceBody):
        session = store.get(sid)
        if session.status != "running":
            raise HTTPException(status_code=409, detail="session is finished")
        wear = session.env.inject_disturbance(body.tw_delta)
        event = {"type": "disturbance", "lap": session.lap, "tw_delta": body.tw_delta, "wear": wear,
                 "state": state_to_wire(session.env.state)}
        store.append_event(session, event)
        _broadcast(session, event)
        return event

    @app.get("/sessions/{sid}/recommendation")
    def recommend(sid: str):
        session = store.get(sid)
        a = require_agent()
        obs = observe(session.env.state, session.env.t_lap_prev, session.env.k, session.spec.cfg)
        action = a.act(obs, deterministic=True)
        probs = a.pit_probabilities(obs)
        order = sorted(range(4), key=lambda i: -probs[i])
        return {
            "action": {"f": action.f, "b": action.b, "ps": action.ps},
            "pit_probabilities": probs.tolist(),
            "top_pit_actions": [{"ps": i, "p": float(probs[i])} for i in order],
        }

    @app.get("/sessions/{sid}/log")
    def session_log(sid: str):
        session = store.get(sid)
        path = session.dirpath / "log.jsonl"
        text = path.read_text() if path.exists() else ""
        from fastapi.responses import PlainTextResponse
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.post("/optimize")
    def submit_optimize(body: OptimizeBody):
        job = jobs.submit(body)
        return {"id": job.jid, "status": job.status}

    @app.get("/optimize/{jid}")
    def job_status(jid: str):
        job = jobs.get(jid)
        return {"id": job.jid, "status": job.status, "progress": job.progress,
                "result": job.result, "error": job.error}

    @app.websocket("/sessions/{sid}/stream")
    async def stream(ws: WebSocket, sid: str):
        await ws.accept()
        try:
            session = store.get(sid)
        except HTTPException:
            await ws.close(code=4404)
            return
        q: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_event_loop()
        session.subscribers.append((q, loop))
        try:
            await ws.send_json({"type": "hello", "session": session.summary(),
                                "history": session.events})
            while True:
                event = await q.get()
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            session.subscribers.remove((q, loop))

    def _broadcast(session: Session, event: dict) -> None:
        for q, loop in list(session.subscribers):
            loop.call_soon_threadsafe(q.put_nowait, event)

    return app


def serve(addr: str = "127.0.0.1:8000", data_dir: str = "./pitwall-data",
          checkpoint: str | None = None) -> None:
    import uvicorn

    host, _, port = addr.partition(":")
    app = create_app(data_dir=data_dir, checkpoint=checkpoint)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))

"""HTTP and WebSocket service for live simulation and diagnosis.

Sessions are simulated plants ticking in (compressed) real time inside
the server's event loop.  Each session owns its stepper: the tick task
is the only writer of plant state, API handlers only flip control
fields between ticks, and the event-loop scheduling of coroutines makes
those flips atomic.  Subscribers receive ordered `{type, data}`
messages over WebSocket, or the event feed alone over server-sent
events.  Model inference never mutates the loaded model; uploading a
new model swaps one reference.

Wire shapes:
    frame      {type: "frame", data: {time, index, values}}
    diagnosis  {type: "diagnosis", data: {time, size_percent, ...}}
    event      {type: "event", data: {timestamp, kind, payload}}

All timestamps in the event log are simulation seconds, so a session
replayed from the same seed produces an identical log.
"""

from __future__ import annotations

import asyncio
import contextlib
import enum
import json
import uuid
from dataclasses import dataclass, field, replace

import numpy as np
from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from . import pipeline, plantsim
from .errors import ConfigurationError, VersioningError
from .pipeline import DiagnosisModel
from .plantsim import CHANNELS, FaultKind, PlantState, ScenarioSpec

DEFAULT_SPEED = 5
DEFAULT_WINDOW_FRAMES = 50
DEFAULT_WINDOW_STRIDE = 10
DEFAULT_ALARM_SIGMAS = 4.0

# A zero-steady channel has zero noise scale; alarm it against this
# fraction of full scale instead so real deviations still register.
_ALARM_FLOOR = 1.0


class EventKind(str, enum.Enum):
    FAULT_INJECTED = "FaultInjected"
    DIAGNOSIS_ISSUED = "DiagnosisIssued"
    THRESHOLD_ALARM = "ThresholdAlarm"
    SESSION_CONTROL = "SessionControl"


@dataclass
class EventLogEntry:
    timestamp: float
    kind: EventKind
    payload: dict

    def to_json(self) -> dict:
        return {"timestamp": self.timestamp, "kind": self.kind.value,
                "payload": self.payload}


@dataclass
class Session:
    """One live simulated plant and its append-only event log."""

    session_id: str
    original_spec: ScenarioSpec
    spec: ScenarioSpec
    state: PlantState
    rng: np.random.Generator
    speed: int
    window_frames: int = DEFAULT_WINDOW_FRAMES
    window_stride: int = DEFAULT_WINDOW_STRIDE
    alarm_sigmas: float = DEFAULT_ALARM_SIGMAS
    status: str = "running"            # running | paused | finished
    frame_index: int = 0
    window: list[np.ndarray] = field(default_factory=list)
    events: list[EventLogEntry] = field(default_factory=list)
    subscribers: list[asyncio.Queue] = field(default_factory=list)
    last_diagnosis: dict | None = None
    alarm_latched: np.ndarray = field(
        default_factory=lambda: np.zeros(len(CHANNELS), dtype=bool))
    task: asyncio.Task | None = None

    @property
    def tick_period_s(self) -> float:
        return self.spec.dt / self.speed

    def log(self, kind: EventKind, payload: dict) -> EventLogEntry:
        entry = EventLogEntry(timestamp=self.state.time, kind=kind,
                              payload=payload)
        self.events.append(entry)
        self.broadcast({"type": "event", "data": entry.to_json()})
        return entry

    def broadcast(self, message: dict) -> None:
        for queue in self.subscribers:
            queue.put_nowait(message)

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self.subscribers.append(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        if queue in self.subscribers:
            self.subscribers.remove(queue)

    def info(self, model_loaded: bool) -> dict:
        return {
            "session_id": self.session_id,
            "scenario": self.spec.to_json(),
            "status": self.status,
            "time": self.state.time,
            "frame_index": self.frame_index,
            "speed": self.speed,
            "tick_period_ms": self.tick_period_s * 1000.0,
            "channel_order": list(CHANNELS),
            "fault_active": self.spec.fault_kind is not FaultKind.NORMAL,
            "window_frames": self.window_frames,
            "window_stride": self.window_stride,
            "model_loaded": model_loaded,
            "last_diagnosis": self.last_diagnosis,
            "event_count": len(self.events),
        }


class ServiceState:
    """Everything the API handlers share: sessions plus the one model."""

    def __init__(self, model: DiagnosisModel | None = None,
                 default_speed: int = DEFAULT_SPEED):
        self.sessions: dict[str, Session] = {}
        self.model = model
        self.model_meta: dict | None = None
        self.default_speed = default_speed

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise HTTPException(status_code=404, detail={
                "code": "unknown_session",
                "message": f"no session {session_id!r}"}) from None


def _model_metadata(model: DiagnosisModel) -> dict:
    meta = {
        "loaded": True,
        "schema_version": pipeline.MODEL_SCHEMA_VERSION,
        "hidden_neurons": model.network.hidden_count,
        "retained_components": model.pca.retained_count,
        "channel_order": list(model.channel_order),
    }
    if model.metrics is not None:
        meta["metrics"] = pipeline.metrics_to_json(model.metrics)
    return meta


def _alarm_scales(session: Session) -> np.ndarray:
    steady = session.state.steady
    base = np.abs(steady)
    base[base == 0.0] = _ALARM_FLOOR
    return session.alarm_sigmas * session.spec.noise_sigma * base


def _check_alarms(session: Session) -> None:
    scales = _alarm_scales(session)
    dev = np.abs(session.state.values - session.state.steady)
    out = dev > scales
    for i in np.nonzero(out & ~session.alarm_latched)[0]:
        name = CHANNELS[i]
        session.log(EventKind.THRESHOLD_ALARM, {
            "channel": name,
            "value": float(session.state.values[i]),
            "steady": float(session.state.steady[i]),
            "deviation": float(dev[i]),
            "threshold": float(scales[i]),
        })
    session.alarm_latched = out


def _issue_diagnosis(session: Session, model: DiagnosisModel) -> None:
    frames = np.array(session.window[-session.window_frames:])
    decision = pipeline.diagnose(model, frames)
    data = {
        "time": session.state.time,
        "size_percent": decision.size_percent,
        "location_code": decision.location_code,
        "location_name": decision.location_name,
        "raw_output": [float(x) for x in decision.raw_output],
        "window_frames": decision.window_frames,
    }
    session.last_diagnosis = data
    session.log(EventKind.DIAGNOSIS_ISSUED, {
        "size_percent": decision.size_percent,
        "location_code": decision.location_code,
        "location_name": decision.location_name,
    })
    session.broadcast({"type": "diagnosis", "data": data})


def tick_once(session: Session, model: DiagnosisModel | None) -> None:
    """Advance the plant one frame and emit everything that follows."""
    session.state = plantsim.step(session.state, session.spec, session.rng)
    session.frame_index += 1
    session.window.append(session.state.values)
    if len(session.window) > session.window_frames:
        del session.window[:len(session.window) - session.window_frames]
    session.broadcast({"type": "frame", "data": {
        "time": session.state.time,
        "index": session.frame_index,
        "values": [float(x) for x in session.state.values],
    }})
    _check_alarms(session)
    if (model is not None
            and len(session.window) >= session.window_frames
            and session.frame_index % session.window_stride == 0):
        _issue_diagnosis(session, model)
    if session.frame_index >= session.spec.duration_steps:
        session.status = "finished"
        session.log(EventKind.SESSION_CONTROL, {"action": "finished"})


async def _run_session(session: Session, svc: ServiceState) -> None:
    try:
        while session.status != "finished":
            if session.status == "paused":
                await asyncio.sleep(session.tick_period_s)
                continue
            tick_once(session, svc.model)
            await asyncio.sleep(session.tick_period_s)
    except asyncio.CancelledError:
        pass


def _bad_request(code: str, message: str) -> HTTPException:
    return HTTPException(status_code=400,
                         detail={"code": code, "message": message})


def _parse_scenario(payload: dict) -> ScenarioSpec:
    try:
        return ScenarioSpec.from_json(payload)
    except ConfigurationError as exc:
        raise _bad_request("bad_scenario", str(exc)) from None


def create_app(model: DiagnosisModel | None = None,
               default_speed: int = DEFAULT_SPEED) -> FastAPI:
    svc = ServiceState(model=model, default_speed=default_speed)
    if model is not None:
        svc.model_meta = _model_metadata(model)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        for session in svc.sessions.values():
            if session.task is not None:
                session.task.cancel()

    app = FastAPI(title="pwrdiag service", lifespan=lifespan)
    app.state.svc = svc
    # The operator console is served as static files from a different
    # origin (or straight off disk), so the API must answer cross-origin
    # requests.  The service carries no credentials and is meant for
    # local use only.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    # ------------------------------------------------------------------
    # Sessions
    # ------------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request) -> dict:
        body = await request.json() if await request.body() else {}
        if not isinstance(body, dict):
            raise _bad_request("bad_request", "expected a JSON object")
        speed = body.pop("speed", svc.default_speed)
        if not isinstance(speed, int) or speed < 1:
            raise _bad_request("bad_speed",
                               "speed must be a positive integer")
        window = body.pop("window_frames", DEFAULT_WINDOW_FRAMES)
        stride = body.pop("window_stride", DEFAULT_WINDOW_STRIDE)
        if not (isinstance(window, int) and window >= 1
                and isinstance(stride, int) and stride >= 1):
            raise _bad_request("bad_window",
                               "window_frames and window_stride must be "
                               "positive integers")
        start_paused = body.pop("start_paused", False)
        if not isinstance(start_paused, bool):
            raise _bad_request("bad_request", "start_paused must be a boolean")
        scenario = body.pop("scenario", body)
        spec = _parse_scenario(scenario if isinstance(scenario, dict) else {})
        session = Session(
            session_id=uuid.uuid4().hex[:12],
            original_spec=spec,
            spec=spec,
            state=plantsim.init_steady_state(),
            rng=np.random.default_rng(spec.rng_seed),
            speed=speed,
            window_frames=window,
            window_stride=stride,
        )
        if start_paused:
            session.status = "paused"
        svc.sessions[session.session_id] = session
        session.task = asyncio.get_running_loop().create_task(
            _run_session(session, svc))
        return {"session_id": session.session_id,
                "tick_period_ms": session.tick_period_s * 1000.0,
                "channel_order": list(CHANNELS)}

    @app.get("/sessions/{session_id}")
    async def session_info(session_id: str) -> dict:
        return svc.get(session_id).info(svc.model is not None)

    @app.post("/sessions/{session_id}/fault")
    async def inject_fault(session_id: str, request: Request) -> dict:
        session = svc.get(session_id)
        body = await request.json()
        if not isinstance(body, dict):
            raise _bad_request("bad_request", "expected a JSON object")
        if session.spec.fault_kind is not FaultKind.NORMAL:
            raise HTTPException(status_code=409, detail={
                "code": "fault_active",
                "message": "a fault is already active in this session"})
        try:
            kind = FaultKind(body.get("kind", ""))
        except ValueError:
            raise _bad_request("bad_fault_kind",
                               f"unknown fault kind {body.get('kind')!r}")
        if kind is FaultKind.NORMAL:
            raise _bad_request("bad_fault_kind",
                               "inject a fault kind, not normal operation")
        severity = body.get("severity", body.get("severity_percent"))
        if not isinstance(severity, (int, float)):
            raise _bad_request("bad_severity", "severity must be a number")
        eccs = bool(body.get("eccs_enabled", session.spec.eccs_enabled))
        injected = replace(session.spec, fault_kind=kind,
                           severity_percent=float(severity),
                           onset_time=session.state.time,
                           eccs_enabled=eccs)
        try:
            injected.validate()
        except ConfigurationError as exc:
            raise _bad_request("bad_fault", str(exc)) from None
        session.spec = injected
        entry = session.log(EventKind.FAULT_INJECTED, {
            "kind": kind.value,
            "severity_percent": float(severity),
            "onset_time": session.state.time,
            "eccs_enabled": eccs,
        })
        return {"injected": entry.to_json(),
                "scenario": session.spec.to_json()}

    @app.post("/sessions/{session_id}/diagnose")
    async def diagnose_now(session_id: str) -> dict:
        session = svc.get(session_id)
        if svc.model is None:
            raise HTTPException(status_code=409, detail={
                "code": "no_model",
                "message": "no diagnosis model is loaded"})
        if not session.window:
            raise _bad_request("window_empty",
                               "no telemetry frames observed yet")
        _issue_diagnosis(session, svc.model)
        return session.last_diagnosis

    @app.post("/sessions/{session_id}/control")
    async def control_session(session_id: str, request: Request) -> dict:
        session = svc.get(session_id)
        body = await request.json()
        action = body.get("action") if isinstance(body, dict) else None
        if action not in ("pause", "resume", "reset"):
            raise _bad_request("bad_action",
                               "action must be pause, resume or reset")
        if action == "pause":
            if session.status == "running":
                session.status = "paused"
        elif action == "resume":
            if session.status == "paused":
                session.status = "running"
        else:
            session.spec = session.original_spec
            session.state = plantsim.init_steady_state()
            session.rng = np.random.default_rng(session.spec.rng_seed)
            session.frame_index = 0
            session.window = []
            session.last_diagnosis = None
            session.alarm_latched[:] = False
            if session.status == "finished":
                session.status = "running"
                session.task = asyncio.get_running_loop().create_task(
                    _run_session(session, svc))
        session.log(EventKind.SESSION_CONTROL, {"action": action})
        return {"status": session.status, "time": session.state.time}

    @app.get("/sessions/{session_id}/log")
    async def session_log(session_id: str, after: int = -1) -> dict:
        session = svc.get(session_id)
        entries = session.events[after + 1:] if after >= -1 else []
        return {"session_id": session.session_id,
                "total": len(session.events),
                "events": [e.to_json() for e in entries]}

    # ------------------------------------------------------------------
    # Streaming
    # ------------------------------------------------------------------

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str) -> None:
        session = svc.sessions.get(session_id)
        if session is None:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue = session.subscribe()
        try:
            while True:
                message = await queue.get()
                await websocket.send_text(json.dumps(message))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            session.unsubscribe(queue)

    @app.get("/sessions/{session_id}/events")
    async def events(session_id: str) -> StreamingResponse:
        session = svc.get(session_id)

        async def feed():
            queue = session.subscribe()
            try:
                for entry in list(session.events):
                    yield f"data: {json.dumps(entry.to_json())}\n\n"
                while True:
                    message = await queue.get()
                    if message.get("type") == "event":
                        data = json.dumps(message["data"])
                        yield f"data: {data}\n\n"
            finally:
                session.unsubscribe(queue)

        return StreamingResponse(feed(), media_type="text/event-stream")

    # ------------------------------------------------------------------
    # Models
    # ------------------------------------------------------------------

    @app.post("/models")
    async def upload_model(request: Request) -> dict:
        try:
            doc = await request.json()
        except Exception:
            raise _bad_request("bad_json", "body must be a JSON document")
        try:
            loaded = pipeline._model_from_json(doc)
        except (VersioningError, KeyError, TypeError, ValueError) as exc:
            raise _bad_request("bad_model", f"not a loadable model: {exc}")
        svc.model = loaded
        svc.model_meta = _model_metadata(loaded)
        return svc.model_meta

    @app.get("/models/current")
    async def current_model() -> dict:
        if svc.model is None:
            return {"loaded": False}
        return svc.model_meta

    return app

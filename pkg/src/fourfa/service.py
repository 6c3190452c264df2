"""HTTP surface of the gateway: every endpoint is a thin adapter that maps a
request onto one flow event (or one merchant/store call), so the HTTP-driven
flow and a direct apply_event-driven flow traverse identical states.
"""

from __future__ import annotations

import threading
import time

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel

from . import crypto, flow, merchant
from .config import Config
from .factors import (
    GeoPoint,
    ImageTooSmall,
    InvalidLocation,
    InvalidUsername,
    UserRecord,
)
from .raster import UnsupportedImage, decode_png, encode_png
from .sms import HttpSmsTransport, RecordingSmsTransport, TransportError
from .stego import CapacityExceeded
from .store import UserStore


class SessionCreate(BaseModel):
    username: str


class PasswordBody(BaseModel):
    password: str


class CodeBody(BaseModel):
    code: str


class LocationBody(BaseModel):
    lat: float
    lon: float


def default_transport(config: Config):
    if config.sms_endpoint == "mock":
        return RecordingSmsTransport(config.store_path + ".outbox.jsonl")
    return HttpSmsTransport(config.sms_endpoint, config.sms_token)


class _Gateway:
    """Sessions, their locks, and the bound flow settings."""

    def __init__(self, config: Config, store, transport, rng, now_fn, iv_source):
        crypto.warm_up()  # pay any JIT cost at startup, not on a request
        self.store = store if store is not None else UserStore(config.store_path)
        self.now_fn = now_fn
        self.settings = flow.FlowSettings(
            transport=transport if transport is not None else default_transport(config),
            mac_pass=config.mac_pass.encode("utf-8"),
            key_pass=config.key_pass.encode("utf-8"),
            rng=rng,
            otp_digits=config.otp_digits,
            otp_ttl=config.otp_ttl,
            face_threshold=config.face_threshold,
            geofence_radius=config.geofence_radius,
        )
        if iv_source is not None:
            self.settings.iv_source = iv_source
        self.config = config
        self._sessions: dict[str, tuple[flow.Session, threading.Lock]] = {}
        self._registry_lock = threading.Lock()

    def create_session(self, username: str) -> flow.Session:
        session = flow.begin_session(username, self.now_fn())
        with self._registry_lock:
            self._sessions[session.id] = (session, threading.Lock())
        return session

    def dispatch(self, session_id: str, event: flow.FactorEvent) -> flow.Session:
        with self._registry_lock:
            entry = self._sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown session")
        session, lock = entry
        with lock:  # single writer per session
            return flow.apply_event(
                session, event, self.store, self.settings, self.now_fn()
            )


def _state_body(session: flow.Session) -> dict:
    body = {"state": session.state.value}
    if session.denied_reason is not None:
        body["reason"] = session.denied_reason
    return body


def create_app(
    config: Config,
    store=None,
    transport=None,
    rng=None,
    now_fn=time.time,
    iv_source=None,
) -> FastAPI:
    app = FastAPI(title="fourfa gateway")
    gw = _Gateway(config, store, transport, rng, now_fn, iv_source)
    app.state.gateway = gw

    @app.exception_handler(flow.InvalidTransition)
    async def _invalid_transition(request, exc):
        return Response(status_code=409, content=str(exc))

    @app.exception_handler(flow.TerminalSession)
    async def _terminal(request, exc):
        return Response(status_code=409, content=str(exc))

    @app.exception_handler(TransportError)
    async def _transport_error(request, exc):
        return Response(status_code=502, content="OTP dispatch failed")

    @app.post("/session")
    def create_session(body: SessionCreate):
        try:
            session = gw.create_session(body.username)
        except InvalidUsername as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session.id, "state": session.state.value}

    @app.post("/session/{sid}/password")
    def submit_password(sid: str, body: PasswordBody):
        return _state_body(gw.dispatch(sid, flow.PasswordSubmitted(body.password)))

    @app.post("/session/{sid}/otp/request")
    def request_otp(sid: str):
        return _state_body(gw.dispatch(sid, flow.OtpRequested()))

    @app.post("/session/{sid}/otp/verify")
    def verify_otp(sid: str, body: CodeBody):
        return _state_body(gw.dispatch(sid, flow.OtpSubmitted(body.code)))

    @app.post("/session/{sid}/face")
    async def submit_face(sid: str, request: Request):
        data = await request.body()
        return await run_in_threadpool(_submit_face, gw, sid, data)

    @app.post("/session/{sid}/location")
    def report_location(sid: str, body: LocationBody):
        try:
            point = GeoPoint(body.lat, body.lon)
        except InvalidLocation as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return _state_body(gw.dispatch(sid, flow.LocationReported(point)))

    @app.post("/session/{sid}/finalize")
    async def finalize(sid: str, request: Request):
        data = await request.body()
        return await run_in_threadpool(_finalize, gw, sid, data)

    @app.post("/merchant/verify")
    async def merchant_verify(request: Request):
        data = await request.body()
        return await run_in_threadpool(_merchant_verify, gw, data)

    @app.put("/users/{name}/location", status_code=204)
    def update_home(name: str, body: LocationBody):
        record = gw.store.get(name)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown user")
        try:
            home = GeoPoint(body.lat, body.lon)
        except InvalidLocation as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        gw.store.put(
            UserRecord(
                username=record.username,
                pw_salt=record.pw_salt,
                pw_digest=record.pw_digest,
                face=record.face,
                home=home,
            )
        )
        return Response(status_code=204)

    return app


def _decode_or_400(data: bytes):
    try:
        return decode_png(data)
    except UnsupportedImage as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def _submit_face(gw: _Gateway, sid: str, data: bytes) -> dict:
    image = _decode_or_400(data)
    try:
        return _state_body(gw.dispatch(sid, flow.FaceSubmitted(image)))
    except ImageTooSmall as exc:
        raise HTTPException(status_code=400, detail=str(exc))


def _finalize(gw: _Gateway, sid: str, data: bytes) -> Response:
    cover = _decode_or_400(data)
    try:
        session = gw.dispatch(sid, flow.FinalizeRequested(cover))
    except CapacityExceeded as exc:
        raise HTTPException(status_code=413, detail=str(exc))
    return Response(content=encode_png(session.envelope), media_type="image/png")


def _merchant_verify(gw: _Gateway, data: bytes) -> dict:
    image = _decode_or_400(data)
    decision = merchant.process_envelope(
        image,
        gw.settings.mac_pass,
        gw.settings.key_pass,
        gw.store,
        radius=gw.settings.geofence_radius,
        face_threshold=gw.settings.face_threshold,
    )
    return {"outcome": decision.outcome.value, "reason": decision.reason}

"""Per-transaction state machine with ordered stop rules.

A session walks password -> OTP -> (face and geolocation, in either order)
and any failed factor immediately denies the whole transaction. Once all
four factors pass, the collected credentials are assembled into a text
payload and sealed into a stego envelope for the merchant.

Grammar of the serialized payload (newline = 0x0A, every line terminated):

    MTRK-PAYLOAD/1
    user=<username>
    pass=<password>
    geo=<lat>,<lon>          six fixed decimals each
    face=64x32
    <32 rows of exactly 64 ramp characters>
"""

from __future__ import annotations

import random
import re
import secrets
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

from . import factors
from .factors import (
    FaceTemplate,
    GeoPoint,
    InvalidLocation,
    OtpChallenge,
    validate_username,
)
from .raster import RasterImage
from .sms import SmsTransport
from .stego import seal_envelope

PAYLOAD_HEADER = "MTRK-PAYLOAD/1"
SESSION_TTL_S = 900.0

_GEO_LINE = re.compile(r"^geo=(-?\d+\.\d{6}),(-?\d+\.\d{6})$")


class InvalidTransition(Exception):
    """Event is not legal in the session's current state; state unchanged."""


class TerminalSession(Exception):
    """Session is in Denied/Completed (or expired) and accepts no events."""


class NotAuthenticated(Exception):
    pass


class MalformedPayload(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SessionState(str, Enum):
    AWAIT_PASSWORD = "AwaitPassword"
    AWAIT_OTP = "AwaitOtp"
    OTP_PENDING = "OtpPending"
    PARALLEL_CHECKS = "ParallelChecks"
    AUTHENTICATED = "Authenticated"
    COMPLETED = "Completed"
    DENIED = "Denied"


TERMINAL_STATES = (SessionState.DENIED, SessionState.COMPLETED)


@dataclass(frozen=True)
class PasswordSubmitted:
    password: str


@dataclass(frozen=True)
class OtpRequested:
    pass


@dataclass(frozen=True)
class OtpSubmitted:
    code: str


@dataclass(frozen=True)
class FaceSubmitted:
    image: RasterImage


@dataclass(frozen=True)
class LocationReported:
    point: GeoPoint


@dataclass(frozen=True)
class FinalizeRequested:
    cover: RasterImage


FactorEvent = Union[
    PasswordSubmitted,
    OtpRequested,
    OtpSubmitted,
    FaceSubmitted,
    LocationReported,
    FinalizeRequested,
]


@dataclass
class Session:
    id: str
    username: str
    state: SessionState
    created_at: float
    challenge: OtpChallenge | None = None
    face_submitted: FaceTemplate | None = None
    reported_location: GeoPoint | None = None
    face_done: bool = False
    geo_done: bool = False
    denied_reason: str | None = None
    verified_password: str | None = field(default=None, repr=False)
    envelope: RasterImage | None = None


@dataclass(frozen=True)
class TransactionPayload:
    """The four credentials the merchant receives."""

    username: str
    password: str
    face: FaceTemplate
    geo: GeoPoint


@dataclass
class FlowSettings:
    """Everything apply_event needs beyond the session, store and clock."""

    transport: SmsTransport
    mac_pass: bytes = field(repr=False)
    key_pass: bytes = field(repr=False)
    rng: random.Random | None = None
    otp_digits: int = 6
    otp_ttl: float = 120.0
    face_threshold: float = 0.85
    geofence_radius: float = factors.DEFAULT_GEOFENCE_M
    iv_source: Callable[[], bytes] = field(
        default=lambda: secrets.token_bytes(8)
    )
    session_ttl: float = SESSION_TTL_S


def begin_session(username: str, now: float) -> Session:
    validate_username(username)
    return Session(
        id=secrets.token_urlsafe(16),
        username=username,
        state=SessionState.AWAIT_PASSWORD,
        created_at=now,
    )


def _deny(session: Session, reason: str) -> Session:
    session.state = SessionState.DENIED
    session.denied_reason = reason
    return session


def apply_event(
    session: Session,
    event: FactorEvent,
    store,
    settings: FlowSettings,
    now: float,
) -> Session:
    """Advance the session by one event per the stop-rule transition table.

    Raises InvalidTransition (session untouched) for an event that is not
    legal in the current state, and TerminalSession once the session is
    denied, completed or expired.
    """
    if session.state in TERMINAL_STATES:
        raise TerminalSession(f"session is {session.state.value}")
    if now - session.created_at > settings.session_ttl:
        raise TerminalSession("session expired")

    state = session.state
    if state is SessionState.AWAIT_PASSWORD and isinstance(event, PasswordSubmitted):
        record = store.get(session.username)
        # Unknown users fail exactly like wrong passwords.
        if record is not None and factors.verify_password(
            record, event.password.encode("utf-8")
        ):
            session.verified_password = event.password
            session.state = SessionState.AWAIT_OTP
            return session
        return _deny(session, "password")

    if state is SessionState.AWAIT_OTP and isinstance(event, OtpRequested):
        challenge = factors.issue_otp(
            settings.otp_digits,
            now,
            settings.otp_ttl,
            settings.transport,
            destination=session.id,
            rng=settings.rng,
        )
        session.challenge = challenge
        session.state = SessionState.OTP_PENDING
        return session

    if state is SessionState.OTP_PENDING and isinstance(event, OtpSubmitted):
        if factors.verify_otp(session.challenge, event.code, now):
            session.state = SessionState.PARALLEL_CHECKS
            return session
        return _deny(session, "otp")

    if state is SessionState.PARALLEL_CHECKS and isinstance(event, FaceSubmitted):
        record = store.get(session.username)
        template = factors.face_to_template(event.image)
        if factors.match_face(template, record.face) >= settings.face_threshold:
            session.face_submitted = template
            session.face_done = True
            return _maybe_authenticated(session)
        return _deny(session, "face")

    if state is SessionState.PARALLEL_CHECKS and isinstance(event, LocationReported):
        record = store.get(session.username)
        if factors.verify_location(record, event.point, settings.geofence_radius):
            session.reported_location = event.point
            session.geo_done = True
            return _maybe_authenticated(session)
        return _deny(session, "geolocation")

    if state is SessionState.AUTHENTICATED and isinstance(event, FinalizeRequested):
        payload = assemble_payload(session, store, session.verified_password)
        finalize_transaction(
            session,
            payload,
            event.cover,
            settings.mac_pass,
            settings.key_pass,
            settings.iv_source(),
        )
        return session

    raise InvalidTransition(
        f"{type(event).__name__} is not valid in state {state.value}"
    )


def _maybe_authenticated(session: Session) -> Session:
    if session.face_done and session.geo_done:
        session.state = SessionState.AUTHENTICATED
    return session


def assemble_payload(session: Session, store, password: str) -> TransactionPayload:
    if session.state is not SessionState.AUTHENTICATED:
        raise NotAuthenticated(f"session is {session.state.value}")
    return TransactionPayload(
        username=session.username,
        password=password,
        face=session.face_submitted,
        geo=session.reported_location,
    )


def serialize_payload(payload: TransactionPayload) -> bytes:
    if "\n" in payload.username or "\n" in payload.password:
        raise ValueError("username and password must be single-line text")
    lines = [
        PAYLOAD_HEADER,
        f"user={payload.username}",
        f"pass={payload.password}",
        f"geo={payload.geo.lat:.6f},{payload.geo.lon:.6f}",
        f"face={factors.TEMPLATE_COLS}x{factors.TEMPLATE_ROWS}",
        *payload.face.rows(),
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_payload(data: bytes) -> TransactionPayload:
    """Strict inverse of serialize_payload; any deviation is rejected."""

    def bad(line: int, message: str):
        raise MalformedPayload(line, message)

    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        bad(data[: exc.start].count(b"\n") + 1, "not valid UTF-8")
    if not text.endswith("\n"):
        bad(text.count("\n") + 1, "missing final newline")
    lines = text.split("\n")[:-1]
    if len(lines) < 1 or lines[0] != PAYLOAD_HEADER:
        bad(1, f"expected header {PAYLOAD_HEADER!r}")
    if len(lines) != 5 + factors.TEMPLATE_ROWS:
        bad(len(lines) + 1, f"expected {5 + factors.TEMPLATE_ROWS} lines")
    if not lines[1].startswith("user="):
        bad(2, "expected user= line")
    username = lines[1][5:]
    try:
        validate_username(username)
    except Exception:
        bad(2, "invalid username")
    if not lines[2].startswith("pass="):
        bad(3, "expected pass= line")
    password = lines[2][5:]
    geo_match = _GEO_LINE.match(lines[3])
    if not geo_match:
        bad(4, "expected geo=<lat>,<lon> with six decimals")
    try:
        geo = GeoPoint(float(geo_match.group(1)), float(geo_match.group(2)))
    except InvalidLocation:
        bad(4, "coordinates out of range")
    if lines[4] != f"face={factors.TEMPLATE_COLS}x{factors.TEMPLATE_ROWS}":
        bad(5, "expected face=64x32 line")
    rows = lines[5:]
    for i, row in enumerate(rows):
        if len(row) != factors.TEMPLATE_COLS or any(
            c not in factors.ASCII_RAMP for c in row
        ):
            bad(6 + i, "face row must be 64 ramp characters")
    return TransactionPayload(
        username=username,
        password=password,
        face=FaceTemplate.from_rows(rows),
        geo=geo,
    )


def finalize_transaction(
    session: Session,
    payload: TransactionPayload,
    cover: RasterImage,
    mac_pass: bytes,
    key_pass: bytes,
    iv: bytes,
) -> RasterImage:
    """Seal the payload for the merchant and complete the session.

    A CapacityExceeded from sealing leaves the session authenticated so the
    caller can retry with a larger cover.
    """
    if session.state in TERMINAL_STATES:
        raise TerminalSession(f"session is {session.state.value}")
    if session.state is not SessionState.AUTHENTICATED:
        raise NotAuthenticated(f"session is {session.state.value}")
    stego = seal_envelope(cover, serialize_payload(payload), mac_pass, key_pass, iv)
    session.state = SessionState.COMPLETED
    session.envelope = stego
    return stego

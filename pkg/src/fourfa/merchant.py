"""Merchant-side decoding and adjudication of received envelopes.

Every failure maps to a Deny with the first failing stage's reason;
nothing here raises. Checks run in the fixed order password, face,
geolocation so the reported reason is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import factors, stego
from .factors import UserRecord
from .flow import MalformedPayload, TransactionPayload, parse_payload
from .raster import RasterImage


class Outcome(str, Enum):
    APPROVE = "approve"
    DENY = "deny"


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    reason: str

    def __post_init__(self) -> None:
        if (self.outcome is Outcome.APPROVE) != (self.reason == "ok"):
            raise ValueError("approve pairs only with reason ok")


APPROVED = Decision(Outcome.APPROVE, "ok")


def authenticate_payload(
    payload: TransactionPayload,
    record: UserRecord,
    radius: float = factors.DEFAULT_GEOFENCE_M,
    face_threshold: float = 0.85,
) -> Decision:
    if not factors.verify_password(record, payload.password.encode("utf-8")):
        return Decision(Outcome.DENY, "password")
    if factors.match_face(payload.face, record.face) < face_threshold:
        return Decision(Outcome.DENY, "face")
    if not factors.verify_location(record, payload.geo, radius):
        return Decision(Outcome.DENY, "geolocation")
    return APPROVED


def process_envelope(
    image: RasterImage,
    mac_pass: bytes,
    key_pass: bytes,
    store,
    radius: float = factors.DEFAULT_GEOFENCE_M,
    face_threshold: float = 0.85,
) -> Decision:
    """Open, parse and authenticate an envelope, yielding approve/deny."""
    try:
        raw = stego.open_envelope(image, mac_pass, key_pass)
    except (stego.BadMagic, stego.UnsupportedVersion):
        return Decision(Outcome.DENY, "no-envelope")
    except (stego.TruncatedEnvelope, stego.TamperDetected, stego.WrongKey):
        return Decision(Outcome.DENY, "tamper")
    try:
        payload = parse_payload(raw)
    except MalformedPayload:
        return Decision(Outcome.DENY, "malformed")
    record = store.get(payload.username)
    if record is None:
        return Decision(Outcome.DENY, "unknown-user")
    return authenticate_payload(payload, record, radius, face_threshold)

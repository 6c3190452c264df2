"""The four verification factors: password, OTP, face template, geofence.

Passwords are stored as salted SHA-256 digests. OTP codes are never kept:
only a salted hash commitment survives dispatch, and verification recomputes
it. Faces are matched as 64x32 ASCII-art templates, and locations by
haversine distance against the enrolled home point.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import random
import secrets
from dataclasses import dataclass

import numpy as np

from .raster import RasterImage
from .sms import SmsTransport, TransportError  # noqa: F401  (re-exported)

ASCII_RAMP = "@%#*+=-:. "  # dark -> light
TEMPLATE_COLS = 64
TEMPLATE_ROWS = 32
TEMPLATE_CELLS = TEMPLATE_COLS * TEMPLATE_ROWS

USERNAME_MAX_BYTES = 64
OTP_MAX_ATTEMPTS = 3
EARTH_RADIUS_M = 6_371_000.0
DEFAULT_GEOFENCE_M = 500.0


class InvalidUsername(ValueError):
    pass


class InvalidLocation(ValueError):
    pass


class ImageTooSmall(ValueError):
    pass


class ChallengeLocked(Exception):
    """All attempts for this one-time code have been used up."""


def validate_username(username: str) -> str:
    if not username or len(username.encode("utf-8")) > USERNAME_MAX_BYTES:
        raise InvalidUsername("username must be 1..64 bytes")
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in username):
        raise InvalidUsername("username must not contain control characters")
    return username


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise InvalidLocation(f"latitude {self.lat} outside [-90, 90]")
        if not (math.isfinite(self.lon) and -180.0 < self.lon <= 180.0):
            raise InvalidLocation(f"longitude {self.lon} outside (-180, 180]")


@dataclass(frozen=True)
class FaceTemplate:
    """64x32 grid of ramp characters, row-major."""

    cells: str

    def __post_init__(self) -> None:
        if len(self.cells) != TEMPLATE_CELLS:
            raise ValueError(f"template must have {TEMPLATE_CELLS} cells")
        if any(c not in ASCII_RAMP for c in self.cells):
            raise ValueError("template contains characters outside the ramp")

    def rows(self) -> list[str]:
        return [
            self.cells[r * TEMPLATE_COLS : (r + 1) * TEMPLATE_COLS]
            for r in range(TEMPLATE_ROWS)
        ]

    @classmethod
    def from_rows(cls, rows: list[str]) -> "FaceTemplate":
        return cls("".join(rows))


@dataclass(frozen=True)
class UserRecord:
    username: str
    pw_salt: bytes
    pw_digest: bytes
    face: FaceTemplate
    home: GeoPoint


@dataclass
class OtpChallenge:
    salt: bytes
    commitment: bytes
    digits: int
    issued_at: float
    ttl: float
    attempts_left: int = OTP_MAX_ATTEMPTS


def _password_digest(salt: bytes, password: bytes) -> bytes:
    return hashlib.sha256(salt + password).digest()


def enroll_user(
    username: str,
    password: bytes,
    face_image: RasterImage,
    home: GeoPoint,
    salt: bytes | None = None,
) -> UserRecord:
    """Build the enrolled identity: fresh salt, digest, face template, home."""
    validate_username(username)
    if not isinstance(home, GeoPoint):
        raise InvalidLocation("home must be a GeoPoint")
    if salt is None:
        salt = secrets.token_bytes(16)
    return UserRecord(
        username=username,
        pw_salt=salt,
        pw_digest=_password_digest(salt, password),
        face=face_to_template(face_image),
        home=home,
    )


def verify_password(record: UserRecord, password: bytes) -> bool:
    return hmac.compare_digest(
        _password_digest(record.pw_salt, password), record.pw_digest
    )


def issue_otp(
    digits: int,
    now: float,
    ttl: float,
    transport: SmsTransport,
    destination: str = "",
    rng: random.Random | None = None,
) -> OtpChallenge:
    """Draw a fresh code, dispatch it, and keep only the hash commitment.

    The plaintext code leaves this function exclusively through the
    transport; a dispatch failure aborts before a challenge exists.
    """
    if digits not in (4, 6):
        raise ValueError("digits must be 4 or 6")
    if ttl <= 0:
        raise ValueError("ttl must be positive")
    if rng is None:
        rng = random.SystemRandom()
    code = f"{rng.randrange(10 ** digits):0{digits}d}"
    salt = secrets.token_bytes(16)
    commitment = hashlib.sha256(salt + code.encode("ascii")).digest()
    transport.send(destination, code)
    return OtpChallenge(
        salt=salt, commitment=commitment, digits=digits, issued_at=now, ttl=ttl
    )


def verify_otp(challenge: OtpChallenge, code: str, now: float) -> bool:
    """Check a submitted code; every call burns one of the three attempts."""
    if challenge.attempts_left <= 0:
        raise ChallengeLocked("no attempts left for this challenge")
    challenge.attempts_left -= 1
    candidate = hashlib.sha256(challenge.salt + code.encode("utf-8")).digest()
    fresh = now <= challenge.issued_at + challenge.ttl
    return hmac.compare_digest(candidate, challenge.commitment) and fresh


def face_to_template(image: RasterImage) -> FaceTemplate:
    """Downsample to a 64x32 grid and map cell luminance onto the ramp.

    Cells are the floor-sized blocks of the grid; each is reduced to its
    per-channel mean, converted to luma (0.299/0.587/0.114), and binned with
    exact integer arithmetic so 128 lands on '=' rather than drifting across
    the 25.6-wide bin edge in float. Alpha is ignored.
    """
    if image.width < TEMPLATE_COLS or image.height < TEMPLATE_ROWS:
        raise ImageTooSmall(
            f"need at least {TEMPLATE_COLS}x{TEMPLATE_ROWS}, "
            f"got {image.width}x{image.height}"
        )
    arr = np.frombuffer(image.samples, dtype=np.uint8).reshape(
        image.height, image.width, image.channels
    )
    cell_w = image.width // TEMPLATE_COLS
    cell_h = image.height // TEMPLATE_ROWS
    rgb = arr[: TEMPLATE_ROWS * cell_h, : TEMPLATE_COLS * cell_w, :3].astype(
        np.float64
    )
    cells = rgb.reshape(TEMPLATE_ROWS, cell_h, TEMPLATE_COLS, cell_w, 3).mean(
        axis=(1, 3)
    )
    luma = np.rint(
        0.299 * cells[..., 0] + 0.587 * cells[..., 1] + 0.114 * cells[..., 2]
    ).astype(np.int64)
    index = np.minimum(luma * 10 // 256, 9)
    chars = np.frombuffer(ASCII_RAMP.encode("ascii"), dtype=np.uint8)[index]
    return FaceTemplate(chars.tobytes().decode("ascii"))


def match_face(a: FaceTemplate, b: FaceTemplate) -> float:
    """Fraction of the 2048 cells whose characters agree."""
    same = sum(x == y for x, y in zip(a.cells, b.cells))
    return same / TEMPLATE_CELLS


def geo_distance(p: GeoPoint, q: GeoPoint) -> float:
    """Haversine great-circle distance in meters (R = 6,371,000 m)."""
    phi1 = math.radians(p.lat)
    phi2 = math.radians(q.lat)
    dphi = math.radians(q.lat - p.lat)
    dlam = math.radians(q.lon - p.lon)
    a = (
        math.sin(dphi / 2.0) ** 2
        + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    )
    return EARTH_RADIUS_M * 2.0 * math.atan2(math.sqrt(a), math.sqrt(1.0 - a))


def verify_location(
    record: UserRecord, reported: GeoPoint, radius: float = DEFAULT_GEOFENCE_M
) -> bool:
    return geo_distance(record.home, reported) <= radius

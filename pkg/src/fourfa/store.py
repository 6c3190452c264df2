"""File-backed user store: one JSON object per line, keyed by username.

The whole store is loaded strictly on open (a corrupt line fails fast with
its line number) and kept in memory; writes rewrite the file atomically via
a temp file so a crash never leaves a half-written store behind.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .factors import (
    ASCII_RAMP,
    FaceTemplate,
    GeoPoint,
    TEMPLATE_COLS,
    TEMPLATE_ROWS,
    UserRecord,
)


class StorageError(Exception):
    pass


def _face_to_text(face: FaceTemplate) -> str:
    return "\n".join([f"{TEMPLATE_COLS}x{TEMPLATE_ROWS}", *face.rows()])


def _face_from_text(text: str) -> FaceTemplate:
    lines = text.split("\n")
    if len(lines) != 1 + TEMPLATE_ROWS or lines[0] != f"{TEMPLATE_COLS}x{TEMPLATE_ROWS}":
        raise ValueError("face block must be the shape line plus 32 rows")
    for row in lines[1:]:
        if len(row) != TEMPLATE_COLS or any(c not in ASCII_RAMP for c in row):
            raise ValueError("face row must be 64 ramp characters")
    return FaceTemplate.from_rows(lines[1:])


def _record_to_json(record: UserRecord) -> str:
    return json.dumps(
        {
            "username": record.username,
            "pw_salt": record.pw_salt.hex(),
            "pw_digest": record.pw_digest.hex(),
            "face": _face_to_text(record.face),
            "home_lat": record.home.lat,
            "home_lon": record.home.lon,
        }
    )


def _record_from_json(line: str) -> UserRecord:
    obj = json.loads(line)
    salt = bytes.fromhex(obj["pw_salt"])
    digest = bytes.fromhex(obj["pw_digest"])
    if len(salt) != 16:
        raise ValueError("pw_salt must be 32 hex characters")
    if len(digest) != 32:
        raise ValueError("pw_digest must be 64 hex characters")
    return UserRecord(
        username=obj["username"],
        pw_salt=salt,
        pw_digest=digest,
        face=_face_from_text(obj["face"]),
        home=GeoPoint(float(obj["home_lat"]), float(obj["home_lon"])),
    )


class UserStore:
    """Durable username -> UserRecord map over a JSONL file."""

    def __init__(self, path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, UserRecord] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StorageError(f"cannot read store: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                raise StorageError(f"line {lineno}: blank line in store")
            try:
                record = _record_from_json(line)
            except Exception as exc:
                raise StorageError(f"line {lineno}: {exc}") from exc
            if record.username in self._records:
                raise StorageError(
                    f"line {lineno}: duplicate username {record.username!r}"
                )
            self._records[record.username] = record

    def put(self, record: UserRecord) -> None:
        """Insert or replace by username; durable once this returns."""
        with self._lock:
            self._records[record.username] = record
            tmp = self.path.with_name(self.path.name + ".tmp")
            try:
                with open(tmp, "w", encoding="utf-8") as fh:
                    for rec in self._records.values():
                        fh.write(_record_to_json(rec) + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp, self.path)
            except OSError as exc:
                raise StorageError(f"cannot write store: {exc}") from exc

    def get(self, username: str) -> UserRecord | None:
        return self._records.get(username)

    def usernames(self) -> list[str]:
        return sorted(self._records)

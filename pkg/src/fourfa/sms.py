"""Pluggable SMS delivery for one-time codes.

Two implementations ship: a recording mock that appends each message to a
local JSONL outbox with deterministic ids, and an HTTP client for a
third-party messaging API configured by endpoint and token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx


class TransportError(Exception):
    """Dispatch failed; the caller must not retain the challenge."""


class SmsTransport(Protocol):
    def send(self, destination: str, body: str) -> str:
        """Deliver `body` to `destination`, returning a delivery id."""
        ...


@dataclass(frozen=True)
class SmsMessage:
    id: str
    destination: str
    body: str


class RecordingSmsTransport:
    """Appends messages to a local file; ids are a simple counter."""

    def __init__(self, path) -> None:
        self.path = Path(path)
        self.sent: list[SmsMessage] = []
        self._counter = 0
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                self._counter = sum(1 for _ in fh)

    def send(self, destination: str, body: str) -> str:
        self._counter += 1
        message = SmsMessage(f"mock-{self._counter:06d}", destination, body)
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"id": message.id, "to": destination, "body": body}
                    )
                    + "\n"
                )
        except OSError as exc:
            raise TransportError(f"cannot write outbox: {exc}") from exc
        self.sent.append(message)
        return message.id


class HttpSmsTransport:
    """POSTs ``{"to": ..., "body": ...}`` to a configured SMS API endpoint."""

    def __init__(self, endpoint: str, token: str, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self._headers = {"Authorization": f"Bearer {token}"}
        self._client = client or httpx.Client(timeout=10.0)

    def send(self, destination: str, body: str) -> str:
        try:
            resp = self._client.post(
                self.endpoint,
                json={"to": destination, "body": body},
                headers=self._headers,
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"SMS dispatch failed: {exc}") from exc
        if resp.status_code // 100 != 2:
            raise TransportError(f"SMS endpoint returned {resp.status_code}")
        try:
            return str(resp.json()["id"])
        except Exception:
            return ""

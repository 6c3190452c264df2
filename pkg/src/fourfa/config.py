"""Gateway configuration: JSON file plus FOURFA_* environment overrides.

Secrets (token and the two passphrases) are excluded from repr so they can
never leak through logging of the config object.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


_ENV_MAP = {
    "FOURFA_STORE": "store_path",
    "FOURFA_SMS_ENDPOINT": "sms_endpoint",
    "FOURFA_SMS_TOKEN": "sms_token",
    "FOURFA_GEOFENCE_M": "geofence_radius",
    "FOURFA_OTP_TTL_S": "otp_ttl",
    "FOURFA_OTP_DIGITS": "otp_digits",
    "FOURFA_FACE_THRESHOLD": "face_threshold",
    "FOURFA_MAC_PASS": "mac_pass",
    "FOURFA_KEY_PASS": "key_pass",
    "FOURFA_LISTEN": "listen_addr",
}

_FLOAT_FIELDS = ("geofence_radius", "otp_ttl", "face_threshold")
_INT_FIELDS = ("otp_digits",)


@dataclass(frozen=True)
class Config:
    store_path: str = "fourfa-store.jsonl"
    sms_endpoint: str = "mock"
    sms_token: str = field(default="", repr=False)
    geofence_radius: float = 500.0
    otp_ttl: float = 120.0
    otp_digits: int = 6
    face_threshold: float = 0.85
    mac_pass: str = field(default="", repr=False)
    key_pass: str = field(default="", repr=False)
    listen_addr: str = "127.0.0.1:8475"

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_addr.rpartition(":")
        return host, int(port)


def _validate(cfg: Config) -> Config:
    # First invalid field in declaration order names the error.
    if not cfg.store_path:
        raise ConfigError("store_path")
    if not cfg.sms_endpoint:
        raise ConfigError("sms_endpoint")
    if not cfg.geofence_radius > 0:
        raise ConfigError("geofence_radius")
    if not cfg.otp_ttl > 0:
        raise ConfigError("otp_ttl")
    if cfg.otp_digits not in (4, 6):
        raise ConfigError("otp_digits")
    if not 0 < cfg.face_threshold <= 1:
        raise ConfigError("face_threshold")
    if not cfg.mac_pass:
        raise ConfigError("mac_pass")
    if not cfg.key_pass:
        raise ConfigError("key_pass")
    host, _, port = cfg.listen_addr.rpartition(":")
    if not host or not port.isdigit() or not 0 < int(port) < 65536:
        raise ConfigError("listen_addr")
    return cfg


def load_config(path=None, env: dict | None = None) -> Config:
    """Merge file values, environment overrides and defaults, then validate."""
    if env is None:
        env = dict(os.environ)
    values: dict[str, object] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if text.strip():
            try:
                file_values = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
            for key, value in file_values.items():
                if key not in Config.__dataclass_fields__:
                    raise ConfigError(key)
                values[key] = value
    for env_name, key in _ENV_MAP.items():
        if env_name in env:
            values[key] = env[env_name]
    for key in _FLOAT_FIELDS:
        if key in values:
            try:
                values[key] = float(values[key])
            except (TypeError, ValueError):
                raise ConfigError(key) from None
    for key in _INT_FIELDS:
        if key in values:
            try:
                values[key] = int(values[key])
            except (TypeError, ValueError):
                raise ConfigError(key) from None
    for key in values:
        if key not in _FLOAT_FIELDS + _INT_FIELDS and not isinstance(values[key], str):
            raise ConfigError(key)
    return _validate(Config(**values))

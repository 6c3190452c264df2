"""Command-line surface.

    fourfa hide -m <mac-password> -k <password> <secret-file> <cover.png>
    fourfa open -m <mac-password> -k <password> <stego.png>
    fourfa enroll --user <name> --password-stdin --face <image.png> --lat <deg> --lon <deg>
    fourfa demo --user <name> --face <image.png> --lat <deg> --lon <deg>
    fourfa serve --config <file>

Exit codes: 0 success, 2 usage, 3 capacity, 4 tamper or no envelope,
5 authentication denial.
"""

from __future__ import annotations

import argparse
import getpass
import math
import os
import secrets
import sys
import tempfile
import time

import numpy as np

from . import flow, merchant, stego
from .config import ConfigError, load_config
from .factors import GeoPoint, InvalidLocation, InvalidUsername, enroll_user
from .raster import RasterImage, UnsupportedImage, read_png, write_png
from .sms import RecordingSmsTransport
from .store import StorageError, UserStore

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_TAMPER = 4
EXIT_DENIED = 5


def _fail(code: int, message: str) -> int:
    print(f"fourfa: {message}", file=sys.stderr)
    return code


def _stego_path(cover_path: str) -> str:
    base = cover_path[:-4] if cover_path.lower().endswith(".png") else cover_path
    return base + ".stego.png"


def cmd_hide(args) -> int:
    try:
        with open(args.secret, "rb") as fh:
            payload = fh.read()
        cover = read_png(args.cover)
    except (OSError, UnsupportedImage) as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        sealed = stego.seal_envelope(
            cover,
            payload,
            args.mac_pass.encode("utf-8"),
            args.key_pass.encode("utf-8"),
            secrets.token_bytes(8),
        )
    except stego.CapacityExceeded as exc:
        return _fail(EXIT_CAPACITY, str(exc))
    out = _stego_path(args.cover)
    write_png(sealed, out)
    print(out)
    return EXIT_OK


def cmd_open(args) -> int:
    try:
        image = read_png(args.image)
    except (OSError, UnsupportedImage) as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        payload = stego.open_envelope(
            image, args.mac_pass.encode("utf-8"), args.key_pass.encode("utf-8")
        )
    except stego.EnvelopeError as exc:
        return _fail(EXIT_TAMPER, f"tamper or no envelope: {exc}")
    sys.stdout.buffer.write(payload)
    sys.stdout.buffer.flush()
    return EXIT_OK


def _store_path(args) -> str:
    if args.store:
        return args.store
    return os.environ.get("FOURFA_STORE", "fourfa-store.jsonl")


def cmd_enroll(args) -> int:
    password = sys.stdin.readline().rstrip("\n")
    try:
        record = enroll_user(
            args.user,
            password.encode("utf-8"),
            read_png(args.face),
            GeoPoint(args.lat, args.lon),
        )
        UserStore(_store_path(args)).put(record)
    except (InvalidUsername, InvalidLocation, UnsupportedImage, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    except StorageError as exc:
        return _fail(EXIT_USAGE, str(exc))
    print(f"enrolled {args.user}")
    return EXIT_OK


def _noise_cover(capacity_bytes: int) -> RasterImage:
    side = math.ceil(math.sqrt((capacity_bytes + 8) * 8 / 3)) + 1
    rng = np.random.default_rng()
    samples = rng.integers(0, 256, size=side * side * 3, dtype=np.uint8)
    return RasterImage(side, side, 3, samples.tobytes())


def cmd_demo(args) -> int:
    store = UserStore(_store_path(args))
    outbox = os.path.join(tempfile.mkdtemp(prefix="fourfa-demo-"), "outbox.jsonl")
    transport = RecordingSmsTransport(outbox)
    settings = flow.FlowSettings(
        transport=transport,
        mac_pass=args.mac_pass.encode("utf-8"),
        key_pass=args.key_pass.encode("utf-8"),
    )
    def step(session, event):
        updated = flow.apply_event(session, event, store, settings, time.time())
        print(f"state: {updated.state.value}", flush=True)
        if updated.state is flow.SessionState.DENIED:
            print(f"transaction stopped: {updated.denied_reason}", flush=True)
            raise SystemExit(EXIT_DENIED)
        return updated

    try:
        session = flow.begin_session(args.user, time.time())
    except InvalidUsername as exc:
        return _fail(EXIT_USAGE, str(exc))
    password = getpass.getpass("password: ")
    step(session, flow.PasswordSubmitted(password))
    step(session, flow.OtpRequested())
    print(f"mock SMS to session {session.id}: code {transport.sent[-1].body}", flush=True)
    code = input("code: ")
    step(session, flow.OtpSubmitted(code))
    try:
        face = read_png(args.face)
    except (OSError, UnsupportedImage) as exc:
        return _fail(EXIT_USAGE, str(exc))
    step(session, flow.FaceSubmitted(face))
    try:
        point = GeoPoint(args.lat, args.lon)
    except InvalidLocation as exc:
        return _fail(EXIT_USAGE, str(exc))
    step(session, flow.LocationReported(point))

    payload_len = len(flow.serialize_payload(
        flow.assemble_payload(session, store, session.verified_password)
    ))
    cover = _noise_cover(stego.OVERHEAD + stego.ciphertext_len(payload_len))
    step(session, flow.FinalizeRequested(cover))
    decision = merchant.process_envelope(
        session.envelope,
        settings.mac_pass,
        settings.key_pass,
        store,
        radius=settings.geofence_radius,
        face_threshold=settings.face_threshold,
    )
    print(f"merchant decision: {decision.outcome.value} ({decision.reason})", flush=True)
    return EXIT_OK if decision.outcome is merchant.Outcome.APPROVE else EXIT_DENIED


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _fail(EXIT_USAGE, f"bad configuration: {exc}")
    host, port = config.host_port()
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourfa")
    sub = parser.add_subparsers(dest="command", required=True)

    p_hide = sub.add_parser("hide", help="seal a secret file into a cover PNG")
    p_hide.add_argument("-m", dest="mac_pass", required=True, metavar="MAC-PASSWORD")
    p_hide.add_argument("-k", dest="key_pass", required=True, metavar="PASSWORD")
    p_hide.add_argument("secret")
    p_hide.add_argument("cover")
    p_hide.set_defaults(func=cmd_hide)

    p_open = sub.add_parser("open", help="recover the payload from a stego PNG")
    p_open.add_argument("-m", dest="mac_pass", required=True, metavar="MAC-PASSWORD")
    p_open.add_argument("-k", dest="key_pass", required=True, metavar="PASSWORD")
    p_open.add_argument("image")
    p_open.set_defaults(func=cmd_open)

    p_enroll = sub.add_parser("enroll", help="register a user in the store")
    p_enroll.add_argument("--user", required=True)
    p_enroll.add_argument(
        "--password-stdin",
        action="store_true",
        required=True,
        help="read the password from the first line of stdin",
    )
    p_enroll.add_argument("--face", required=True, help="face PNG")
    p_enroll.add_argument("--lat", type=float, required=True)
    p_enroll.add_argument("--lon", type=float, required=True)
    p_enroll.add_argument("--store", help="store path (default: $FOURFA_STORE)")
    p_enroll.set_defaults(func=cmd_enroll)

    p_demo = sub.add_parser("demo", help="run the interactive four-factor flow")
    p_demo.add_argument("--user", required=True)
    p_demo.add_argument("--face", required=True, help="face PNG")
    p_demo.add_argument("--lat", type=float, required=True)
    p_demo.add_argument("--lon", type=float, required=True)
    p_demo.add_argument("--store", help="store path (default: $FOURFA_STORE)")
    p_demo.add_argument("-m", dest="mac_pass", default="demo-mac")
    p_demo.add_argument("-k", dest="key_pass", default="demo-key")
    p_demo.set_defaults(func=cmd_demo)

    p_serve = sub.add_parser("serve", help="run the HTTP gateway")
    p_serve.add_argument("--config", help="JSON config file")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

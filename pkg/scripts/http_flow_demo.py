#!/usr/bin/env python3
"""Drive the full four-factor flow against a live local gateway.

Starts the HTTP service on a free port with a throwaway store, enrolls a
user, walks password -> OTP -> face -> location -> finalize over real HTTP,
then hands the stego PNG to the merchant endpoint. Prints each state and the
machine-side latency. Run:  python scripts/http_flow_demo.py
"""

import tempfile
import threading
import time
from pathlib import Path

import httpx
import numpy as np
import uvicorn

from fourfa.config import Config
from fourfa.factors import GeoPoint, enroll_user
from fourfa.raster import RasterImage, encode_png
from fourfa.service import create_app
from fourfa.sms import RecordingSmsTransport
from fourfa.store import UserStore

HOME = GeoPoint(28.6139, 77.2090)


def random_image(w, h, seed):
    rng = np.random.default_rng(seed)
    return RasterImage(w, h, 3, rng.integers(0, 256, size=w * h * 3, dtype=np.uint8).tobytes())


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="fourfa-http-demo-"))
    store = UserStore(workdir / "store.jsonl")
    face = random_image(64, 32, seed=1)
    store.put(enroll_user("alice", b"hunter2", face, HOME))
    transport = RecordingSmsTransport(workdir / "outbox.jsonl")

    config = Config(store_path=str(workdir / "store.jsonl"), mac_pass="m", key_pass="k")
    app = create_app(config, store=store, transport=transport)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    print(f"gateway listening on 127.0.0.1:{port}  (work dir {workdir})")

    try:
        with httpx.Client(base_url=f"http://127.0.0.1:{port}") as client:
            sid = client.post("/session", json={"username": "alice"}).json()["session_id"]
            print(f"session {sid}")
            start = time.perf_counter()

            def show(label, resp):
                print(f"  {label:<22} -> {resp.json()}")

            show("password", client.post(f"/session/{sid}/password", json={"password": "hunter2"}))
            show("otp request", client.post(f"/session/{sid}/otp/request"))
            code = transport.sent[-1].body
            print(f"  (mock SMS delivered code {code})")
            show("otp verify", client.post(f"/session/{sid}/otp/verify", json={"code": code}))
            show("face", client.post(f"/session/{sid}/face", content=encode_png(face)))
            show("location", client.post(
                f"/session/{sid}/location", json={"lat": HOME.lat, "lon": HOME.lon}
            ))
            stego_resp = client.post(
                f"/session/{sid}/finalize", content=encode_png(random_image(96, 96, seed=2))
            )
            print(f"  finalize               -> stego PNG, {len(stego_resp.content)} bytes")
            elapsed = time.perf_counter() - start

            verdict = client.post("/merchant/verify", content=stego_resp.content).json()
            print(f"merchant verdict: {verdict}")
            print(f"machine-side flow latency: {elapsed * 1e3:.1f} ms")
    finally:
        server.should_exit = True
        thread.join(timeout=5)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Measure how envelope sealing scales with payload size.

Seals random payloads of 1 KB .. 1 MB into covers sized to fit, reports the
wall time per size and the linear fit, mirroring the server-cost acceptance
check. Run:  python scripts/server_cost_experiment.py
"""

import math
import time

import numpy as np

from fourfa import crypto
from fourfa.raster import RasterImage
from fourfa.stego import OVERHEAD, ciphertext_len, seal_envelope

SIZES = [1 << 10, 4 << 10, 16 << 10, 64 << 10, 256 << 10, 1 << 20]
MAC = b"experiment-mac"
KEY = b"experiment-key"
REPS = 5


def cover_for(payload_len: int, rng) -> RasterImage:
    required = OVERHEAD + ciphertext_len(payload_len)
    side = math.isqrt(required * 8 // 3) + 2
    samples = rng.integers(0, 256, size=side * side * 3, dtype=np.uint8)
    return RasterImage(side, side, 3, samples.tobytes())


def main() -> None:
    rng = np.random.default_rng(2024)
    covers = {n: cover_for(n, rng) for n in SIZES}
    payloads = {n: rng.bytes(n) for n in SIZES}
    iv = bytes(8)

    crypto.warm_up()
    seal_envelope(covers[SIZES[2]], payloads[SIZES[2]], MAC, KEY, iv)  # warmup

    times = []
    print(f"{'payload':>10} {'cover':>12} {'best of ' + str(REPS):>12}")
    for n in SIZES:
        best = math.inf
        for _ in range(REPS):
            start = time.perf_counter()
            seal_envelope(covers[n], payloads[n], MAC, KEY, iv)
            best = min(best, time.perf_counter() - start)
        times.append(best)
        cover = covers[n]
        print(f"{n >> 10:>8}KB {cover.width:>5}x{cover.height:<5} {best * 1e3:>10.2f}ms")

    x = np.array(SIZES, dtype=np.float64)
    y = np.array(times, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    r_squared = 1.0 - float(np.sum((y - predicted) ** 2)) / float(np.sum((y - y.mean()) ** 2))
    print(f"\nlinear fit: t = {slope * 1e9:.2f} ns/byte + {intercept * 1e3:.3f} ms")
    print(f"R^2 = {r_squared:.5f}  (acceptance bound: >= 0.98, < 2 s at 1 MB)")


if __name__ == "__main__":
    main()

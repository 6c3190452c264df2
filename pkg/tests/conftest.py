"""Shared fixtures and image builders for the test suite."""

import numpy as np
import pytest

from fourfa.factors import (
    ASCII_RAMP,
    GeoPoint,
    TEMPLATE_COLS,
    TEMPLATE_ROWS,
    enroll_user,
)
from fourfa.flow import FlowSettings
from fourfa.raster import RasterImage
from fourfa.sms import RecordingSmsTransport
from fourfa.store import UserStore

# Gray level that face_to_template maps back onto ramp index i.
_LEVEL_FOR_INDEX = [13 + 26 * i for i in range(10)]

HOME = GeoPoint(28.6139, 77.2090)


def make_cover(width, height, channels=3, seed=0):
    rng = np.random.default_rng(seed)
    samples = rng.integers(0, 256, size=width * height * channels, dtype=np.uint8)
    return RasterImage(width, height, channels, samples.tobytes())


def template_image(cells, scale=1):
    """Render template cells as a grayscale image that maps back exactly."""
    assert len(cells) == TEMPLATE_COLS * TEMPLATE_ROWS
    levels = np.array(
        [_LEVEL_FOR_INDEX[ASCII_RAMP.index(c)] for c in cells], dtype=np.uint8
    ).reshape(TEMPLATE_ROWS, TEMPLATE_COLS)
    if scale > 1:
        levels = np.repeat(np.repeat(levels, scale, axis=0), scale, axis=1)
    rgb = np.repeat(levels[:, :, None], 3, axis=2)
    return RasterImage(levels.shape[1], levels.shape[0], 3, rgb.tobytes())


def random_face_image(seed=1):
    rng = np.random.default_rng(seed)
    cells = "".join(rng.choice(list(ASCII_RAMP), size=TEMPLATE_COLS * TEMPLATE_ROWS))
    return template_image(cells)


@pytest.fixture
def face_image():
    return random_face_image()


@pytest.fixture
def store(tmp_path):
    return UserStore(tmp_path / "store.jsonl")


@pytest.fixture
def alice(store, face_image):
    record = enroll_user("alice", b"hunter2", face_image, HOME)
    store.put(record)
    return record


@pytest.fixture
def transport(tmp_path):
    return RecordingSmsTransport(tmp_path / "outbox.jsonl")


@pytest.fixture
def settings(transport):
    return FlowSettings(transport=transport, mac_pass=b"mac-pass", key_pass=b"key-pass")

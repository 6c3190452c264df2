"""Authenticated, encrypted envelopes hidden in pixel LSBs.

Wire format of the embedded byte stream, written MSB-first per byte into
successive R,G,B sample LSBs in row-major order (alpha never touched):

    magic "MTRK" (4) | version 0x01 (1) | ciphertext length, u32 BE (4) |
    iv (8) | HMAC-SHA256 tag (32) | ciphertext

The tag covers ``magic || version || length || iv || ciphertext`` and is
checked before any decryption (encrypt-then-MAC), so padding oracles never
come into play on the authenticated path.
"""

from __future__ import annotations

import struct

import numpy as np

from .crypto import cbc_decrypt, cbc_encrypt, derive_key, hmac_sha256, tags_equal
from .crypto import BLOCK_SIZE, TAG_SIZE, PaddingError
from .raster import RasterImage

MAGIC = b"MTRK"
VERSION = 1
HEADER_SIZE = 17
OVERHEAD = HEADER_SIZE + TAG_SIZE  # 49 bytes before the ciphertext


class CapacityExceeded(ValueError):
    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(
            f"envelope needs {required} bytes but cover holds {available}"
        )


class EnvelopeError(ValueError):
    """Base for everything that can go wrong while opening an envelope."""


class BadMagic(EnvelopeError):
    """No envelope present in this image."""


class UnsupportedVersion(EnvelopeError):
    pass


class TruncatedEnvelope(EnvelopeError):
    """Declared ciphertext length is unusable or exceeds the image capacity."""


class TamperDetected(EnvelopeError):
    """Tag mismatch: data was modified or the MAC passphrase is wrong."""


class WrongKey(EnvelopeError):
    """Tag verified but decryption failed, so the cipher passphrase is wrong."""


def capacity_of(image: RasterImage) -> int:
    """Usable payload bytes: one LSB per R, G and B sample, floor to bytes."""
    return image.width * image.height * 3 // 8


def ciphertext_len(payload_len: int) -> int:
    return BLOCK_SIZE * ((payload_len + 1 + BLOCK_SIZE - 1) // BLOCK_SIZE)


def _rgb_sample_indices(image: RasterImage, count: int) -> np.ndarray:
    """Indices of the first `count` R/G/B samples, skipping alpha bytes."""
    if image.channels == 3:
        return np.arange(count)
    j = np.arange(count)
    return (j // 3) * 4 + (j % 3)


def _embed_stream(cover: RasterImage, stream: bytes) -> RasterImage:
    bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8))
    arr = np.frombuffer(cover.samples, dtype=np.uint8).copy()
    if cover.channels == 3:
        view = arr[: bits.size]
        view &= 0xFE
        view |= bits
    else:
        idx = _rgb_sample_indices(cover, bits.size)
        arr[idx] = (arr[idx] & 0xFE) | bits
    return RasterImage(cover.width, cover.height, cover.channels, arr.tobytes())


def _extract_stream(image: RasterImage, nbytes: int) -> bytes:
    arr = np.frombuffer(image.samples, dtype=np.uint8)
    if image.channels == 3:
        return np.packbits(arr[: nbytes * 8] & 1).tobytes()
    idx = _rgb_sample_indices(image, nbytes * 8)
    return np.packbits(arr[idx] & 1).tobytes()


def seal_envelope(
    cover: RasterImage,
    payload: bytes,
    mac_pass: bytes,
    key_pass: bytes,
    iv: bytes,
) -> RasterImage:
    """Encrypt `payload` and hide the authenticated envelope in `cover`.

    Deterministic for fixed inputs; the caller supplies the IV from a
    cryptographically strong source.
    """
    ct_len = ciphertext_len(len(payload))
    required = OVERHEAD + ct_len
    available = capacity_of(cover)
    if available < required:
        raise CapacityExceeded(required, available)
    ciphertext = cbc_encrypt(payload, derive_key(key_pass), iv)
    header = MAGIC + bytes([VERSION]) + struct.pack(">I", len(ciphertext)) + iv
    tag = hmac_sha256(derive_key(mac_pass), header + ciphertext)
    return _embed_stream(cover, header + tag + ciphertext)


def open_envelope(image: RasterImage, mac_pass: bytes, key_pass: bytes) -> bytes:
    """Recover, authenticate and decrypt the payload hidden in `image`."""
    available = capacity_of(image)
    if available < OVERHEAD + BLOCK_SIZE:  # cannot hold even an empty envelope
        raise BadMagic("image too small to hold an envelope")
    head = _extract_stream(image, OVERHEAD)
    if head[:4] != MAGIC:
        raise BadMagic("no envelope found in image")
    if head[4] != VERSION:
        raise UnsupportedVersion(f"envelope version {head[4]} not supported")
    (ct_len,) = struct.unpack(">I", head[5:9])
    if ct_len == 0 or ct_len % BLOCK_SIZE != 0 or OVERHEAD + ct_len > available:
        raise TruncatedEnvelope(
            f"declared ciphertext length {ct_len} does not fit image"
        )
    iv = head[9:17]
    stream = _extract_stream(image, OVERHEAD + ct_len)
    tag = stream[HEADER_SIZE:OVERHEAD]
    ciphertext = stream[OVERHEAD:]
    expected = hmac_sha256(derive_key(mac_pass), stream[:HEADER_SIZE] + ciphertext)
    if not tags_equal(tag, expected):
        raise TamperDetected("authentication tag mismatch")
    try:
        return cbc_decrypt(ciphertext, derive_key(key_pass), iv)
    except PaddingError as exc:
        raise WrongKey("tag verified but decryption failed") from exc

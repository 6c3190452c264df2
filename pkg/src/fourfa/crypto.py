"""Low-level cryptographic primitives for the envelope layer.

XTEA (64-bit blocks, 128-bit key, 32 cycles, delta 0x9E3779B9) with
big-endian word and key-schedule interpretation, CBC chaining over 8-byte
blocks with always-applied PKCS#7-style padding, SHA-256 truncation for
turning passphrases into cipher keys, and HMAC-SHA256 tags.

Everything here is a pure function of its inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

import hashlib
import hmac
import struct

KEY_SIZE = 16
BLOCK_SIZE = 8
TAG_SIZE = 32

_MASK32 = 0xFFFFFFFF
_DELTA = 0x9E3779B9
_CYCLES = 32

# Implicit-probe threshold: a one-shot caller only pays the numba import for
# inputs where the ~70x kernel speedup beats the import cost. Long-lived
# processes call warm_up() instead and then every size rides the kernels.
_FAST_MIN_BYTES = 1 << 20

_fastcbc = None
_fastcbc_probed = False


class LengthError(ValueError):
    """Ciphertext length is zero or not a multiple of the block size."""


class PaddingError(ValueError):
    """Final padding block is malformed (wrong key or corrupt data)."""


def derive_key(passphrase: bytes) -> bytes:
    """Derive a 16-byte cipher key as the first half of SHA-256(passphrase)."""
    return hashlib.sha256(passphrase).digest()[:KEY_SIZE]


def _check_key(key: bytes) -> None:
    if len(key) != KEY_SIZE:
        raise ValueError(f"key must be {KEY_SIZE} bytes, got {len(key)}")


def _check_block(block: bytes) -> None:
    if len(block) != BLOCK_SIZE:
        raise ValueError(f"block must be {BLOCK_SIZE} bytes, got {len(block)}")


def xtea_encrypt_block(block: bytes, key: bytes) -> bytes:
    """Encrypt one 8-byte block: 32 XTEA cycles, words read big-endian."""
    _check_block(block)
    _check_key(key)
    v0, v1 = struct.unpack(">2I", block)
    k = struct.unpack(">4I", key)
    total = 0
    for _ in range(_CYCLES):
        v0 = (v0 + ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ (total + k[total & 3]))) & _MASK32
        total = (total + _DELTA) & _MASK32
        v1 = (v1 + ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ (total + k[(total >> 11) & 3]))) & _MASK32
    return struct.pack(">2I", v0, v1)


def xtea_decrypt_block(block: bytes, key: bytes) -> bytes:
    """Exact inverse of :func:`xtea_encrypt_block` under the same key."""
    _check_block(block)
    _check_key(key)
    v0, v1 = struct.unpack(">2I", block)
    k = struct.unpack(">4I", key)
    total = (_DELTA * _CYCLES) & _MASK32
    for _ in range(_CYCLES):
        v1 = (v1 - ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ (total + k[(total >> 11) & 3]))) & _MASK32
        total = (total - _DELTA) & _MASK32
        v0 = (v0 - ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ (total + k[total & 3]))) & _MASK32
    return struct.pack(">2I", v0, v1)


def _round_keys(key: bytes) -> tuple[list[int], list[int]]:
    """Per-cycle subkey sums; they depend only on the key, not the data."""
    k = struct.unpack(">4I", key)
    ka, kb = [], []
    total = 0
    for _ in range(_CYCLES):
        ka.append((total + k[total & 3]) & _MASK32)
        total = (total + _DELTA) & _MASK32
        kb.append((total + k[(total >> 11) & 3]) & _MASK32)
    return ka, kb


def _fast_kernels():
    global _fastcbc, _fastcbc_probed
    if not _fastcbc_probed:
        _fastcbc_probed = True
        try:
            from . import _fastcbc as mod

            _fastcbc = mod
        except Exception:
            _fastcbc = None
    return _fastcbc


def _kernels_for(nbytes: int):
    """Fast kernels when loaded; only pay the numba import for large inputs."""
    if _fastcbc is not None:
        return _fastcbc
    if not _fastcbc_probed and nbytes >= _FAST_MIN_BYTES:
        return _fast_kernels()
    return None


def warm_up() -> None:
    """Import and exercise the optional numba kernels now.

    Servers call this at startup so no request ever pays the JIT cost; it is
    a no-op when numba is unavailable.
    """
    kernels = _fast_kernels()
    if kernels is not None:
        ka, kb = _round_keys(bytes(KEY_SIZE))
        kernels.cbc_encrypt_blocks(bytes(64), ka, kb, bytes(BLOCK_SIZE))
        kernels.cbc_decrypt_blocks(bytes(64), ka, kb, bytes(BLOCK_SIZE))


def _cbc_encrypt_pure(padded: bytes, key: bytes, iv: bytes) -> bytes:
    ka, kb = _round_keys(key)
    rounds = list(zip(ka, kb))
    c0, c1 = struct.unpack(">2I", iv)
    out = bytearray()
    for off in range(0, len(padded), BLOCK_SIZE):
        v0, v1 = struct.unpack_from(">2I", padded, off)
        v0 ^= c0
        v1 ^= c1
        for a, b in rounds:
            v0 = (v0 + ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ a)) & _MASK32
            v1 = (v1 + ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ b)) & _MASK32
        c0, c1 = v0, v1
        out += struct.pack(">2I", v0, v1)
    return bytes(out)


def _cbc_decrypt_pure(ciphertext: bytes, key: bytes, iv: bytes) -> bytes:
    ka, kb = _round_keys(key)
    rounds = list(zip(ka, kb))
    rounds.reverse()
    c0, c1 = struct.unpack(">2I", iv)
    out = bytearray()
    for off in range(0, len(ciphertext), BLOCK_SIZE):
        n0, n1 = struct.unpack_from(">2I", ciphertext, off)
        v0, v1 = n0, n1
        for a, b in rounds:
            v1 = (v1 - ((((v0 << 4) ^ (v0 >> 5)) + v0) ^ b)) & _MASK32
            v0 = (v0 - ((((v1 << 4) ^ (v1 >> 5)) + v1) ^ a)) & _MASK32
        out += struct.pack(">2I", v0 ^ c0, v1 ^ c1)
        c0, c1 = n0, n1
    return bytes(out)


def cbc_encrypt(plaintext: bytes, key: bytes, iv: bytes) -> bytes:
    """CBC-encrypt with XTEA after padding to a whole number of blocks.

    Padding is always applied (pad value 1..8), so the output length is
    ``8 * ceil((len(plaintext) + 1) / 8)``.
    """
    _check_key(key)
    _check_block(iv)
    pad = BLOCK_SIZE - (len(plaintext) % BLOCK_SIZE)
    padded = plaintext + bytes([pad]) * pad
    kernels = _kernels_for(len(padded))
    if kernels is not None:
        ka, kb = _round_keys(key)
        return kernels.cbc_encrypt_blocks(padded, ka, kb, iv)
    return _cbc_encrypt_pure(padded, key, iv)


def cbc_decrypt(ciphertext: bytes, key: bytes, iv: bytes) -> bytes:
    """Invert :func:`cbc_encrypt`, validating and stripping the padding."""
    _check_key(key)
    _check_block(iv)
    if len(ciphertext) == 0 or len(ciphertext) % BLOCK_SIZE != 0:
        raise LengthError(
            f"ciphertext length must be a positive multiple of {BLOCK_SIZE}, "
            f"got {len(ciphertext)}"
        )
    kernels = _kernels_for(len(ciphertext))
    if kernels is not None:
        ka, kb = _round_keys(key)
        padded = kernels.cbc_decrypt_blocks(ciphertext, ka, kb, iv)
    else:
        padded = _cbc_decrypt_pure(ciphertext, key, iv)
    pad = padded[-1]
    if not 1 <= pad <= BLOCK_SIZE or padded[-pad:] != bytes([pad]) * pad:
        raise PaddingError("malformed padding")
    return padded[:-pad]


def hmac_sha256(key: bytes, message: bytes) -> bytes:
    """Standard HMAC-SHA256 tag (full 32 bytes, no truncation)."""
    return hmac.new(key, message, hashlib.sha256).digest()


def tags_equal(a: bytes, b: bytes) -> bool:
    """Constant-time tag comparison; timing does not depend on contents."""
    return hmac.compare_digest(a, b)

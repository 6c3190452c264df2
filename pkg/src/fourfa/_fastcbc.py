"""numba-accelerated XTEA-CBC inner loops.

Imported lazily by :mod:`fourfa.crypto`; if numba is missing the package
falls back to the pure-Python loops, which produce identical bytes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M = np.uint64(0xFFFFFFFF)
_S4 = np.uint64(4)
_S5 = np.uint64(5)


@njit(cache=True)
def _encrypt_inplace(words, ka, kb, c0, c1):
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    for i in range(0, words.shape[0], 2):
        v0 = (np.uint64(words[i]) ^ c0) & _M
        v1 = (np.uint64(words[i + 1]) ^ c1) & _M
        for r in range(32):
            v0 = (v0 + ((((v1 << _S4) ^ (v1 >> _S5)) + v1) ^ np.uint64(ka[r]))) & _M
            v1 = (v1 + ((((v0 << _S4) ^ (v0 >> _S5)) + v0) ^ np.uint64(kb[r]))) & _M
        words[i] = v0
        words[i + 1] = v1
        c0 = v0
        c1 = v1


@njit(cache=True)
def _decrypt_inplace(words, ka, kb, c0, c1):
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    for i in range(0, words.shape[0], 2):
        n0 = np.uint64(words[i])
        n1 = np.uint64(words[i + 1])
        v0 = n0
        v1 = n1
        for r in range(31, -1, -1):
            v1 = (v1 - ((((v0 << _S4) ^ (v0 >> _S5)) + v0) ^ np.uint64(kb[r]))) & _M
            v0 = (v0 - ((((v1 << _S4) ^ (v1 >> _S5)) + v1) ^ np.uint64(ka[r]))) & _M
        words[i] = (v0 ^ c0) & _M
        words[i + 1] = (v1 ^ c1) & _M
        c0 = n0
        c1 = n1


def _run(data: bytes, ka, kb, iv: bytes, kernel) -> bytes:
    words = np.frombuffer(data, dtype=">u4").astype(np.uint32)
    iv_words = np.frombuffer(iv, dtype=">u4")
    kernel(
        words,
        np.asarray(ka, dtype=np.uint32),
        np.asarray(kb, dtype=np.uint32),
        np.uint64(iv_words[0]),
        np.uint64(iv_words[1]),
    )
    return words.astype(">u4").tobytes()


def cbc_encrypt_blocks(padded: bytes, ka, kb, iv: bytes) -> bytes:
    return _run(padded, ka, kb, iv, _encrypt_inplace)


def cbc_decrypt_blocks(ciphertext: bytes, ka, kb, iv: bytes) -> bytes:
    return _run(ciphertext, ka, kb, iv, _decrypt_inplace)

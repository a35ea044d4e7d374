"""Commutative encryption over ristretto255.

ristretto255 is the prime-order group built on Curve25519, so scalars live in
Z_q with q = 2^252 + 27742317777372353535851937790883648493 and multiplying by
the inverse of a key exactly undoes encryption under it. Points travel as
their 32-byte canonical encodings; equality of points is byte equality.

The group operations come from the system libsodium through ctypes.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EncodingError
from .rng import Rng

ORDER = 2**252 + 27742317777372353535851937790883648493
POINT_BYTES = 32
SCALAR_BYTES = 32
HASH_DST = b"dualjoin-v1:ristretto255:hash-to-group"
IDENTITY_ENCODING = bytes(32)


def _load_sodium():
    name = ctypes.util.find_library("sodium")
    candidates = [name] if name else []
    candidates += ["libsodium.so.23", "libsodium.so", "libsodium.dylib"]
    for cand in candidates:
        try:
            lib = ctypes.CDLL(cand)
        except OSError:
            continue
        if hasattr(lib, "crypto_scalarmult_ristretto255"):
            if lib.sodium_init() < 0:
                raise RuntimeError("sodium_init failed")
            return lib
    raise ImportError("libsodium >= 1.0.18 with ristretto255 support is required")


_sodium = _load_sodium()
_from_hash = _sodium.crypto_core_ristretto255_from_hash
_from_hash.argtypes = [ctypes.c_char_p, ctypes.c_char_p]
_from_hash.restype = ctypes.c_int
_smul = _sodium.crypto_scalarmult_ristretto255
_smul.argtypes = [ctypes.c_char_p, ctypes.c_char_p, ctypes.c_char_p]
_smul.restype = ctypes.c_int
_is_valid = _sodium.crypto_core_ristretto255_is_valid_point
_is_valid.argtypes = [ctypes.c_char_p]
_is_valid.restype = ctypes.c_int


@dataclass(frozen=True)
class GroupScalar:
    value: int

    def __post_init__(self):
        if not 1 <= self.value < ORDER:
            raise ValueError("scalar must lie in [1, q-1]")

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_BYTES, "little")

    def __repr__(self) -> str:
        # keep key material out of logs
        return "GroupScalar(<secret>)"


@dataclass(frozen=True)
class GroupElement:
    encoding: bytes

    def __post_init__(self):
        _check_encoding(self.encoding)

    def __bytes__(self) -> bytes:
        return self.encoding


def _check_encoding(buf: bytes) -> None:
    if len(buf) != POINT_BYTES:
        raise EncodingError(f"point encodings are {POINT_BYTES} bytes, got {len(buf)}")
    if buf == IDENTITY_ENCODING:
        raise EncodingError("identity element is not a valid protocol point")
    if _is_valid(buf) != 1:
        raise EncodingError("non-canonical or invalid ristretto255 encoding")


def keygen(rng: Rng) -> GroupScalar:
    """Uniform scalar in [1, q-1]."""
    return GroupScalar(1 + rng.randbelow(ORDER - 1))


def scalar_inverse(k: GroupScalar) -> GroupScalar:
    return GroupScalar(pow(k.value, -1, ORDER))


def hash_to_group(ident: bytes) -> GroupElement:
    return GroupElement(hash_many([ident])[0])


def scalar_mul(k: GroupScalar, p: GroupElement) -> GroupElement:
    return GroupElement(mul_many(k, [p.encoding])[0])


def encode_point(p: GroupElement) -> bytes:
    return p.encoding


def decode_point(buf: bytes) -> GroupElement:
    return GroupElement(bytes(buf))


# Bulk forms on raw encodings. The protocol layers stay on bytes to avoid a
# Python object per point at n = 2^20.

def hash_many(ids: Iterable[bytes]) -> list[bytes]:
    """Domain-separated SHA-512 followed by the ristretto255 one-way map."""
    out = ctypes.create_string_buffer(POINT_BYTES)
    prefix = hashlib.sha512(len(HASH_DST).to_bytes(1, "little") + HASH_DST)
    res = []
    for ident in ids:
        h = prefix.copy()
        h.update(len(ident).to_bytes(2, "little"))
        h.update(ident)
        _from_hash(out, h.digest())
        res.append(out.raw)
    return res


def mul_many(k: GroupScalar, points: Sequence[bytes]) -> list[bytes]:
    """Multiply every encoding by ``k``; rejects malformed encodings."""
    kb = k.to_bytes()
    out = ctypes.create_string_buffer(POINT_BYTES)
    res = []
    for idx, p in enumerate(points):
        if len(p) != POINT_BYTES or _smul(out, kb, p) != 0:
            raise EncodingError(f"point {idx} is not a valid ristretto255 encoding")
        res.append(out.raw)
    return res


def validate_many(points: Sequence[bytes]) -> None:
    for idx, p in enumerate(points):
        try:
            _check_encoding(p)
        except EncodingError as exc:
            raise EncodingError(f"point {idx}: {exc}") from None


def split_points(buf: bytes, count: int) -> list[bytes]:
    if len(buf) != count * POINT_BYTES:
        raise EncodingError(f"expected {count} points ({count * POINT_BYTES} bytes), got {len(buf)} bytes")
    return [buf[i:i + POINT_BYTES] for i in range(0, len(buf), POINT_BYTES)]

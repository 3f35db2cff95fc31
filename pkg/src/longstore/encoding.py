"""Canonical byte serialization, keyed hashing, and the logical clock.

Everything that is hashed, signed, or committed anywhere in the archive is
first rendered as a *canonical value*: a byte string, a non-negative
integer, the bottom placeholder, or a tuple of canonical values. The
encoding is a tagged, length-prefixed format chosen to be injective so that
independent implementations interoperate bit-exactly:

    tag(1) | length(4, big-endian) | payload

    0x00  bytes    payload = the bytes
    0x01  tuple    payload = concatenation of encoded elements
    0x02  uint     payload = 8-byte big-endian integer
    0x03  bottom   payload = empty

Python-native values are used directly: ``bytes``, ``int``, ``None`` (the
bottom placeholder), and ``tuple``.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass

from .rand import DEFAULT_RNG, ByteRng

# A canonical value is bytes | int | None | tuple of canonical values.
Value = object

TAG_BYTES = 0x00
TAG_TUPLE = 0x01
TAG_UINT = 0x02
TAG_BOTTOM = 0x03

_MAX_LEN = 2**32 - 1
_MAX_UINT = 2**64 - 1

BOTTOM = None


class EncodingError(ValueError):
    """Raised for unencodable values and malformed encodings."""


def encode(value: Value) -> bytes:
    """Serialize a canonical value. Deterministic and injective."""
    out = bytearray()
    _encode_into(value, out)
    return bytes(out)


def _encode_into(value: Value, out: bytearray) -> None:
    if value is None:
        out += bytes([TAG_BOTTOM]) + (0).to_bytes(4, "big")
    elif isinstance(value, bool):
        # bool is an int subclass; reject to keep the domain unambiguous
        raise EncodingError("bool is not a canonical value")
    elif isinstance(value, (bytes, bytearray, memoryview)):
        b = bytes(value)
        if len(b) > _MAX_LEN:
            raise EncodingError("byte string exceeds 2^32-1 bytes")
        out += bytes([TAG_BYTES]) + len(b).to_bytes(4, "big") + b
    elif isinstance(value, int):
        if value < 0 or value > _MAX_UINT:
            raise EncodingError(f"uint out of range: {value}")
        out += bytes([TAG_UINT]) + (8).to_bytes(4, "big") + value.to_bytes(8, "big")
    elif isinstance(value, tuple):
        payload = bytearray()
        for elem in value:
            _encode_into(elem, payload)
        if len(payload) > _MAX_LEN:
            raise EncodingError("tuple payload exceeds 2^32-1 bytes")
        out += bytes([TAG_TUPLE]) + len(payload).to_bytes(4, "big") + payload
    else:
        raise EncodingError(f"not a canonical value: {type(value).__name__}")


# nesting bound for decoding: honest values are a handful of levels deep,
# and untrusted wire input must not be able to exhaust the stack
_MAX_DEPTH = 256


def decode(data: bytes) -> Value:
    """Inverse of :func:`encode`. Rejects trailing or truncated input."""
    value, consumed = _decode_at(data, 0, 0)
    if consumed != len(data):
        raise EncodingError("trailing bytes after canonical value")
    return value


def _decode_at(data: bytes, pos: int, depth: int) -> tuple[Value, int]:
    if depth > _MAX_DEPTH:
        raise EncodingError("value nesting too deep")
    if pos + 5 > len(data):
        raise EncodingError("truncated header")
    tag = data[pos]
    length = int.from_bytes(data[pos + 1 : pos + 5], "big")
    end = pos + 5 + length
    if end > len(data):
        raise EncodingError("truncated payload")
    payload = data[pos + 5 : end]
    if tag == TAG_BYTES:
        return payload, end
    if tag == TAG_UINT:
        if length != 8:
            raise EncodingError("uint payload must be 8 bytes")
        return int.from_bytes(payload, "big"), end
    if tag == TAG_BOTTOM:
        if length != 0:
            raise EncodingError("bottom payload must be empty")
        return None, end
    if tag == TAG_TUPLE:
        elems = []
        inner = pos + 5
        while inner < end:
            elem, inner = _decode_at(data[:end], inner, depth + 1)
            elems.append(elem)
        return tuple(elems), end
    raise EncodingError(f"unknown tag 0x{tag:02x}")


def expect_bytes(value: Value) -> bytes:
    """Strict type guard for decoded values; coercion would let a mutated
    type tag (e.g. empty tuple vs. empty byte string) slip through parsing."""
    if type(value) is not bytes:
        raise EncodingError(f"expected byte string, got {type(value).__name__}")
    return value


def expect_uint(value: Value) -> int:
    if type(value) is not int:
        raise EncodingError(f"expected uint, got {type(value).__name__}")
    return value


def expect_tuple(value: Value, length: int | None = None) -> tuple:
    if type(value) is not tuple:
        raise EncodingError(f"expected tuple, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise EncodingError(f"expected {length}-tuple, got {len(value)} elements")
    return value


# ---------------------------------------------------------------------------
# Keyed hashing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HashDescriptor:
    """Names a keyed hash: algorithm, output length, and key length."""

    name: str
    digest_size: int  # bytes
    key_size: int  # bytes

    def raw(self, data: bytes) -> bytes:
        if self.name == "sha256":
            return hashlib.sha256(data).digest()
        if self.name == "sha512":
            return hashlib.sha512(data).digest()
        if self.name == "toy8":
            # 8-bit toy hash for statistical tests only
            return hashlib.sha256(b"toy8:" + data).digest()[:1]
        raise KeyError(f"unknown hash descriptor: {self.name}")


_DESCRIPTORS = {
    "sha256": HashDescriptor("sha256", 32, 32),
    "sha512": HashDescriptor("sha512", 64, 64),
    "toy8": HashDescriptor("toy8", 1, 4),
}


def hash_descriptor(name: str) -> HashDescriptor:
    try:
        return _DESCRIPTORS[name]
    except KeyError:
        raise KeyError(f"unknown hash descriptor: {name}") from None


@dataclass(frozen=True)
class HashKey:
    descriptor: HashDescriptor
    key: bytes

    def __post_init__(self):
        if len(self.key) != self.descriptor.key_size:
            raise ValueError(
                f"key length {len(self.key)} != descriptor "
                f"key size {self.descriptor.key_size}"
            )


def keygen(descriptor: str | HashDescriptor, rng: ByteRng = DEFAULT_RNG) -> HashKey:
    """Generate a uniformly random key for the named hash."""
    desc = descriptor if isinstance(descriptor, HashDescriptor) else hash_descriptor(descriptor)
    return HashKey(desc, rng.randbytes(desc.key_size))


def hash_value(key: HashKey, value: Value) -> bytes:
    """Keyed digest of a canonical value.

    Keying is realized as a plain hash over ``key || encode(value)``.
    """
    return key.descriptor.raw(key.key + encode(value))


def hash_bytes(key: HashKey, data: bytes) -> bytes:
    """Keyed digest of raw bytes (already-encoded material)."""
    return key.descriptor.raw(key.key + data)


# ---------------------------------------------------------------------------
# Logical clock
# ---------------------------------------------------------------------------

class LogicalClock:
    """Monotone integer clock shared by a simulation.

    Requests to move backwards are ignored, so ``now`` never decreases.
    """

    def __init__(self, start: int = 0):
        if start < 0:
            raise ValueError("clock cannot start before 0")
        self._now = start
        self._lock = threading.Lock()

    @property
    def now(self) -> int:
        return self._now

    def advance(self, t: int) -> int:
        """Move the clock to ``t`` if that is later; return the new time."""
        with self._lock:
            if t > self._now:
                self._now = t
            return self._now

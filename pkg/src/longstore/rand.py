"""Randomness sources.

Every operation in this package that consumes randomness takes an explicit
``rng`` argument satisfying :class:`ByteRng`. The default is the OS CSPRNG;
simulations and golden-vector generation use :class:`DrbgRng` so that runs
are reproducible byte-for-byte across machines and builds.
"""

from __future__ import annotations

import hashlib
import secrets
from typing import Protocol


class ByteRng(Protocol):
    def randbytes(self, n: int) -> bytes: ...


class SystemRng:
    """OS-entropy randomness (the default for real use)."""

    def randbytes(self, n: int) -> bytes:
        return secrets.token_bytes(n)

    def randbelow(self, n: int) -> int:
        return secrets.randbelow(n)


class DrbgRng:
    """Deterministic byte generator: SHA-256 in counter mode over a seed.

    Platform-independent, unlike ``random.Random``; two builds seeded with
    the same string produce identical streams.
    """

    def __init__(self, seed: bytes | str):
        if isinstance(seed, str):
            seed = seed.encode("utf-8")
        self._key = hashlib.sha256(b"longstore-drbg:" + seed).digest()
        self._counter = 0
        self._buffer = b""

    def randbytes(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        # rejection sampling over the smallest covering byte width
        width = (n.bit_length() + 7) // 8
        while True:
            v = int.from_bytes(self.randbytes(width), "big")
            if v < (256**width // n) * n:
                return v % n

    def fork(self, label: str) -> "DrbgRng":
        """Derive an independent stream; used to decorrelate sub-tasks."""
        return DrbgRng(self._key + b"/" + label.encode("utf-8"))


DEFAULT_RNG = SystemRng()

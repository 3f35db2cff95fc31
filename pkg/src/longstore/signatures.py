"""Digital signatures and the scheme-instance registry.

Two signature families are supported so that algorithm rotation can be
exercised end to end:

* ``ed25519``: conventional scheme from the ``cryptography`` package.
* ``fts-sha256-h<H>``: an in-repo hash-based few-time scheme: Winternitz
  one-time signatures (w=16, 67 chains over SHA-256) lifted to 2^H
  signatures by a Merkle tree of one-time public keys. Signing is
  stateful; exhausting the budget raises :class:`KeyExhaustedError`.

The registry maps scheme-instance ids to public parameters plus a usage
window [valid_from, breakage_time). From the breakage time onward an
instance counts as compromised, so time-aware verification is the plain
signature check conjoined with :meth:`PkiRegistry.valid_at`.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from . import encoding
from .rand import DEFAULT_RNG, ByteRng


class KeyExhaustedError(RuntimeError):
    """A few-time key has no one-time leaves left."""


class UnknownSchemeError(KeyError):
    pass


# ---------------------------------------------------------------------------
# Winternitz one-time signatures (w=16) over SHA-256
# ---------------------------------------------------------------------------

_W = 16
_CHAINS_MSG = 64  # 256-bit digest as nibbles
_CHAINS_CSUM = 3  # checksum <= 64*15 = 960 < 16^3
_CHAINS = _CHAINS_MSG + _CHAINS_CSUM


def _sha(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _chain(value: bytes, steps: int) -> bytes:
    for _ in range(steps):
        value = _sha(b"fts-chain:" + value)
    return value


def _ots_secret(seed: bytes, leaf: int, chain: int) -> bytes:
    return _sha(b"fts-sk:" + seed + leaf.to_bytes(4, "big") + bytes([chain]))


def _digest_chunks(message: bytes) -> list[int]:
    digest = _sha(message)
    chunks = []
    for byte in digest:
        chunks.append(byte >> 4)
        chunks.append(byte & 0xF)
    checksum = sum(_W - 1 - c for c in chunks)
    for shift in (8, 4, 0):
        chunks.append((checksum >> shift) & 0xF)
    return chunks


def _ots_leaf(seed: bytes, leaf: int) -> bytes:
    parts = []
    for chain in range(_CHAINS):
        parts.append(_chain(_ots_secret(seed, leaf, chain), _W - 1))
    return _sha(b"fts-leaf:" + b"".join(parts))


def _fts_tree(seed: bytes, height: int) -> list[list[bytes]]:
    level = [_ots_leaf(seed, i) for i in range(1 << height)]
    levels = [level]
    while len(level) > 1:
        level = [
            _sha(b"fts-node:" + level[2 * i] + level[2 * i + 1])
            for i in range(len(level) // 2)
        ]
        levels.append(level)
    levels.reverse()  # levels[0] = [root]
    return levels


def _fts_height(descriptor: str) -> int:
    # descriptor grammar: fts-sha256-h<height>
    prefix = "fts-sha256-h"
    if not descriptor.startswith(prefix):
        raise UnknownSchemeError(f"unknown signature descriptor: {descriptor}")
    height = int(descriptor[len(prefix):])
    if not 1 <= height <= 20:
        raise ValueError(f"fts height out of range: {height}")
    return height


# ---------------------------------------------------------------------------
# Key pairs and the uniform sign/verify surface
# ---------------------------------------------------------------------------

@dataclass
class SignatureKeyPair:
    descriptor: str
    secret_key: bytes
    public_key: bytes
    signatures_remaining: int | None = None  # None = unlimited
    _next_leaf: int = 0
    _tree: list[list[bytes]] | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def setup(descriptor: str, rng: ByteRng = DEFAULT_RNG) -> SignatureKeyPair:
    """Generate a fresh key pair for the named algorithm."""
    if descriptor == "ed25519":
        seed = rng.randbytes(32)
        sk = Ed25519PrivateKey.from_private_bytes(seed)
        pk = sk.public_key().public_bytes_raw()
        return SignatureKeyPair(descriptor, seed, pk)
    height = _fts_height(descriptor)
    seed = rng.randbytes(32)
    tree = _fts_tree(seed, height)
    pk = tree[0][0] + bytes([height])
    return SignatureKeyPair(
        descriptor, seed, pk, signatures_remaining=1 << height, _tree=tree
    )


def sign(keypair: SignatureKeyPair, message: encoding.Value) -> bytes:
    """Sign the canonical encoding of ``message``."""
    data = encoding.encode(message)
    if keypair.descriptor == "ed25519":
        return Ed25519PrivateKey.from_private_bytes(keypair.secret_key).sign(data)

    height = _fts_height(keypair.descriptor)
    with keypair._lock:
        if keypair._next_leaf >= (1 << height):
            raise KeyExhaustedError(
                f"few-time key exhausted after {1 << height} signatures"
            )
        leaf = keypair._next_leaf
        keypair._next_leaf += 1
        keypair.signatures_remaining = (1 << height) - keypair._next_leaf

    if keypair._tree is None:
        keypair._tree = _fts_tree(keypair.secret_key, height)
    tree = keypair._tree

    chunks = _digest_chunks(data)
    chains = tuple(
        _chain(_ots_secret(keypair.secret_key, leaf, i), chunks[i])
        for i in range(_CHAINS)
    )
    path = []
    a = leaf
    for level in range(height, 0, -1):
        path.append(tree[level][a ^ 1])
        a >>= 1
    return encoding.encode((leaf, chains, tuple(path)))


def verify_raw(descriptor: str, public_key: bytes, message: encoding.Value, signature: bytes) -> bool:
    """Signature check against raw public-key bytes. Malformed input -> False."""
    try:
        data = encoding.encode(message)
        if descriptor == "ed25519":
            Ed25519PublicKey.from_public_bytes(public_key).verify(signature, data)
            return True

        height = _fts_height(descriptor)
        if len(public_key) != 33 or public_key[32] != height:
            return False
        root = public_key[:32]
        leaf_index, chains, path = encoding.expect_tuple(encoding.decode(signature), 3)
        leaf_index = encoding.expect_uint(leaf_index)
        chains = encoding.expect_tuple(chains, _CHAINS)
        path = encoding.expect_tuple(path, height)
        if not 0 <= leaf_index < (1 << height):
            return False
        chunks = _digest_chunks(data)
        ends = []
        for i, value in enumerate(chains):
            value = encoding.expect_bytes(value)
            if len(value) != 32:
                return False
            ends.append(_chain(value, _W - 1 - chunks[i]))
        node = _sha(b"fts-leaf:" + b"".join(ends))
        a = leaf_index
        for sibling in path:
            sibling = encoding.expect_bytes(sibling)
            pair = node + sibling if a % 2 == 0 else sibling + node
            node = _sha(b"fts-node:" + pair)
            a >>= 1
        return node == root
    except (InvalidSignature, encoding.EncodingError, ValueError, TypeError):
        return False
    except UnknownSchemeError:
        return False


# ---------------------------------------------------------------------------
# Scheme instances and the registry
# ---------------------------------------------------------------------------

KINDS = ("signature", "timestamp", "vector-commitment", "hiding-commitment", "sharing")


@dataclass(frozen=True)
class SchemeInstance:
    scheme_id: str
    kind: str
    descriptor: str
    public_params: bytes
    valid_from: int
    breakage_time: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme kind: {self.kind}")
        if not self.valid_from < self.breakage_time:
            raise ValueError("scheme validity window is empty")


class PkiRegistry:
    """Scheme-instance lookup shared by services and verifiers."""

    def __init__(self):
        self._instances: dict[str, SchemeInstance] = {}

    def register(self, instance: SchemeInstance) -> None:
        if instance.scheme_id in self._instances:
            raise ValueError(f"duplicate scheme id: {instance.scheme_id}")
        self._instances[instance.scheme_id] = instance

    def get(self, scheme_id: str) -> SchemeInstance:
        try:
            return self._instances[scheme_id]
        except KeyError:
            raise UnknownSchemeError(f"unregistered scheme id: {scheme_id}") from None

    def __contains__(self, scheme_id: str) -> bool:
        return scheme_id in self._instances

    def ids(self) -> list[str]:
        return list(self._instances)

    def valid_at(self, scheme_id: str, t: int) -> bool:
        inst = self.get(scheme_id)
        return inst.valid_from <= t < inst.breakage_time

    # persistence: a single JSON document
    def to_json(self) -> str:
        rows = [
            {
                "scheme_id": inst.scheme_id,
                "kind": inst.kind,
                "descriptor": inst.descriptor,
                "public_params": inst.public_params.hex(),
                "valid_from": inst.valid_from,
                "t_b": inst.breakage_time,
            }
            for inst in self._instances.values()
        ]
        return json.dumps(rows, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PkiRegistry":
        registry = cls()
        for row in json.loads(text):
            registry.register(
                SchemeInstance(
                    row["scheme_id"],
                    row["kind"],
                    row["descriptor"],
                    bytes.fromhex(row["public_params"]),
                    row["valid_from"],
                    row["t_b"],
                )
            )
        return registry

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "PkiRegistry":
        return cls.from_json(Path(path).read_text())


def verify_at(
    pki: PkiRegistry,
    scheme_id: str,
    message: encoding.Value,
    signature: bytes,
    t: int,
) -> bool:
    """Signature check under a registered instance, valid at time ``t``."""
    try:
        inst = pki.get(scheme_id)
    except UnknownSchemeError:
        return False
    if inst.kind not in ("signature", "timestamp"):
        return False
    if not pki.valid_at(scheme_id, t):
        return False
    return verify_raw(inst.descriptor, inst.public_params, message, signature)

"""Vector commitments: keyed Merkle trees, plus the hiding composition.

Two modes share one opening/verification shape:

* ``merkle``: commit to a vector of canonical values with a keyed hash
  tree. Leaves are keyed digests of the messages; leaves past the vector
  length hold the digest of the bottom placeholder so the tree is always
  full at its depth; the commitment binds the depth together with the root.
  Extraction-friendly but not hiding; used for evidence renewal where the
  committed material is already public.

* ``hiding``: first commit to each message with the statistically hiding
  scheme, then build the merkle tree over the per-message commitment
  encodings. An opening bundles the per-message commitment and its
  decommitment with the tree path, so openings reveal nothing about
  unopened positions. Used for data commitments.

Internally positions are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import encoding, hiding
from .encoding import HashKey, hash_descriptor, keygen
from .rand import DEFAULT_RNG, ByteRng

MERKLE_DESCRIPTORS = {
    "merkle-sha256": "sha256",
    "merkle-sha512": "sha512",
}

HIDING_DESCRIPTORS = {
    # tree hash, per-message hiding parameter set
    "hiding-hm-256": ("sha256", "hm-256"),
    "hiding-hm-512": ("sha512", "hm-512"),
    "hiding-hm-toy4": ("sha256", "hm-toy4"),
}


class VectorLengthError(ValueError):
    """Vector length outside [1, max_length]."""


@dataclass(frozen=True)
class VcParams:
    descriptor: str
    max_length: int
    tree_key: HashKey
    hiding_params: hiding.HidingParams | None = None
    scheme_id: str = ""  # registry instance id; not part of the wire params

    @property
    def is_hiding(self) -> bool:
        return self.hiding_params is not None

    def to_value(self) -> encoding.Value:
        if self.hiding_params is None:
            return (
                b"merkle",
                self.descriptor.encode(),
                self.tree_key.key,
                self.max_length,
            )
        return (
            b"hiding",
            self.descriptor.encode(),
            self.tree_key.key,
            self.max_length,
            self.hiding_params.to_value(),
        )

    def to_bytes(self) -> bytes:
        return encoding.encode(self.to_value())

    @classmethod
    def from_value(cls, value: encoding.Value) -> "VcParams":
        mode = bytes(value[0])
        descriptor = bytes(value[1]).decode()
        if mode == b"merkle":
            _, _, key, max_length = value
            tree_hash = MERKLE_DESCRIPTORS[descriptor]
            return cls(descriptor, max_length, HashKey(hash_descriptor(tree_hash), key))
        if mode == b"hiding":
            _, _, key, max_length, hp_value = value
            tree_hash, _ = HIDING_DESCRIPTORS[descriptor]
            return cls(
                descriptor,
                max_length,
                HashKey(hash_descriptor(tree_hash), key),
                hiding.HidingParams.from_value(hp_value),
            )
        raise ValueError(f"unknown vector-commitment mode: {mode!r}")

    @classmethod
    def from_bytes(cls, data: bytes) -> "VcParams":
        return cls.from_value(encoding.decode(data))


@dataclass(frozen=True)
class VectorCommitment:
    digest: bytes


@dataclass
class TreeDecommitment:
    """Full hash tree plus, in hiding mode, the per-message commitments."""

    leaf_count: int
    depth: int
    levels: list[list[bytes]]  # levels[0] = [root], levels[depth] = leaves
    hidden: list[tuple[hiding.HidingCommitment, hiding.HidingDecommitment]] = field(
        default_factory=list
    )


@dataclass(frozen=True)
class Opening:
    index: int
    path: tuple[bytes, ...]  # sibling digests, leaf to root
    hidden: tuple[hiding.HidingCommitment, hiding.HidingDecommitment] | None = None

    def to_value(self) -> encoding.Value:
        if self.hidden is None:
            return (self.index, tuple(self.path))
        c, d = self.hidden
        return (self.index, tuple(self.path), (c.to_value(), d.witness))

    @classmethod
    def from_value(cls, value: encoding.Value) -> "Opening":
        value = encoding.expect_tuple(value)
        if len(value) not in (2, 3):
            raise encoding.EncodingError("opening must have 2 or 3 parts")
        index = encoding.expect_uint(value[0])
        path = tuple(
            encoding.expect_bytes(p) for p in encoding.expect_tuple(value[1])
        )
        if len(value) == 2:
            return cls(index, path)
        c_value, witness = encoding.expect_tuple(value[2], 2)
        return cls(
            index,
            path,
            (
                hiding.HidingCommitment.from_value(c_value),
                hiding.HidingDecommitment(encoding.expect_bytes(witness)),
            ),
        )


def setup(
    descriptor: str, max_length: int, rng: ByteRng = DEFAULT_RNG, scheme_id: str = ""
) -> VcParams:
    if max_length < 1:
        raise VectorLengthError("max length must be >= 1")
    if descriptor in MERKLE_DESCRIPTORS:
        key = keygen(MERKLE_DESCRIPTORS[descriptor], rng)
        return VcParams(descriptor, max_length, key, scheme_id=scheme_id)
    if descriptor in HIDING_DESCRIPTORS:
        tree_hash, hm_name = HIDING_DESCRIPTORS[descriptor]
        return VcParams(
            descriptor,
            max_length,
            keygen(tree_hash, rng),
            hiding.setup(hm_name, rng),
            scheme_id=scheme_id,
        )
    raise KeyError(f"unknown vector-commitment descriptor: {descriptor}")


def params_for_instance(instance) -> VcParams:
    """Rebuild commitment parameters from a registered scheme instance."""
    params = VcParams.from_bytes(instance.public_params)
    return VcParams(
        params.descriptor,
        params.max_length,
        params.tree_key,
        params.hiding_params,
        scheme_id=instance.scheme_id,
    )


def _tree_depth(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def _build_tree(key: HashKey, leaves: list[bytes], n: int, depth: int) -> list[list[bytes]]:
    levels = [leaves]
    for _ in range(depth):
        below = levels[-1]
        levels.append(
            [
                encoding.hash_value(key, (below[2 * j], below[2 * j + 1]))
                for j in range(len(below) // 2)
            ]
        )
    levels.reverse()
    return levels


def _root_commitment(key: HashKey, depth: int, root: bytes) -> bytes:
    return encoding.hash_value(key, (depth, root))


def commit(
    params: VcParams, messages: list[encoding.Value], rng: ByteRng = DEFAULT_RNG
) -> tuple[VectorCommitment, TreeDecommitment]:
    n = len(messages)
    if n < 1 or n > params.max_length:
        raise VectorLengthError(f"vector length {n} outside [1, {params.max_length}]")
    depth = _tree_depth(n)
    key = params.tree_key

    hidden: list[tuple[hiding.HidingCommitment, hiding.HidingDecommitment]] = []
    if params.hiding_params is not None:
        hp = params.hiding_params
        hidden = [hiding.commit(hp, m, rng) for m in messages]
        leaf_messages: list[encoding.Value] = [c.to_value() for c, _ in hidden]
    else:
        leaf_messages = list(messages)

    pad = encoding.hash_value(key, None)
    leaves = [encoding.hash_value(key, m) for m in leaf_messages]
    leaves += [pad] * ((1 << depth) - n)
    levels = _build_tree(key, leaves, n, depth)
    c = _root_commitment(key, depth, levels[0][0])
    return VectorCommitment(c), TreeDecommitment(n, depth, levels, hidden)


def open_at(params: VcParams, decommitment: TreeDecommitment, index: int) -> Opening:
    if not 0 <= index < decommitment.leaf_count:
        raise IndexError(f"index {index} out of range [0, {decommitment.leaf_count})")
    path = []
    a = index
    for level in range(decommitment.depth, 0, -1):
        path.append(decommitment.levels[level][a ^ 1])
        a >>= 1
    hidden = decommitment.hidden[index] if decommitment.hidden else None
    return Opening(index, tuple(path), hidden)


def verify(
    params: VcParams,
    message: encoding.Value,
    commitment: VectorCommitment,
    opening: Opening,
    index: int,
) -> bool:
    try:
        if index != opening.index:
            return False
        depth = len(opening.path)
        if not 0 <= index < (1 << depth) or depth > 60:
            return False
        key = params.tree_key

        if params.hiding_params is not None:
            if opening.hidden is None:
                return False
            hc, hd = opening.hidden
            if not hiding.verify(params.hiding_params, message, hc, hd):
                return False
            leaf_message: encoding.Value = hc.to_value()
        else:
            if opening.hidden is not None:
                return False
            leaf_message = message

        h = encoding.hash_value(key, leaf_message)
        a = index
        for sibling in opening.path:
            pair = (h, sibling) if a % 2 == 0 else (sibling, h)
            h = encoding.hash_value(key, pair)
            a >>= 1
        return _root_commitment(key, depth, h) == commitment.digest
    except Exception:
        return False

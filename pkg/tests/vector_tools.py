"""Shared test tooling: independent oracles and frozen-vector generation.

Everything here is deliberately independent of the library paths it checks:
the encoder re-implements the wire format from its written definition, the
hash vectors are produced with hashlib directly, and the statistical
distance estimator enumerates witness space instead of trusting any
commitment internals.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from longstore import encoding, hiding
from longstore.client import Archive
from longstore.encoding import LogicalClock
from longstore.rand import DrbgRng
from longstore.sharing import SharingPolicy

VECTOR_DIR = Path(__file__).parent / "vectors"
GOLDEN_DIR = VECTOR_DIR / "golden"
HASH_VECTOR_FILE = VECTOR_DIR / "hash_vectors.txt"


# ---------------------------------------------------------------------------
# Independent canonical encoder (the oracle for the wire format)
# ---------------------------------------------------------------------------

def independent_encode(value) -> bytes:
    """Re-implementation of the canonical format, kept separate on purpose."""
    if value is None:
        return b"\x03" + (0).to_bytes(4, "big")
    if isinstance(value, (bytes, bytearray)):
        raw = bytes(value)
        return b"\x00" + len(raw).to_bytes(4, "big") + raw
    if isinstance(value, int) and not isinstance(value, bool):
        return b"\x02" + (8).to_bytes(4, "big") + value.to_bytes(8, "big")
    if isinstance(value, tuple):
        payload = b"".join(independent_encode(v) for v in value)
        return b"\x01" + len(payload).to_bytes(4, "big") + payload
    raise TypeError(f"not encodable: {value!r}")


def independent_keyed_hash(algorithm: str, key: bytes, encoded: bytes) -> bytes:
    if algorithm == "sha256":
        return hashlib.sha256(key + encoded).digest()
    if algorithm == "sha512":
        return hashlib.sha512(key + encoded).digest()
    if algorithm == "toy8":
        return hashlib.sha256(b"toy8:" + key + encoded).digest()[:1]
    raise KeyError(algorithm)


# ---------------------------------------------------------------------------
# Hash test vectors: lines of `hex(key) hex(encode(v)) hex(digest)`
# ---------------------------------------------------------------------------

def sample_values() -> list:
    """Deterministic canonical values covering every type and nesting."""
    rng = DrbgRng("hash-vectors")
    return [
        None,
        0,
        1,
        2**64 - 1,
        b"",
        b"ab",
        rng.randbytes(1),
        rng.randbytes(33),
        rng.randbytes(200),
        (),
        (b"ab", 1),
        (None, b"", 0),
        ((b"x", (2, None)), b"yz", 7),
        (rng.randbytes(16), (rng.randbytes(8), (rng.randbytes(4),))),
        tuple(i for i in range(6)),
        (b"deep", ((((b"nest",),),),)),
    ]


def generate_hash_vector_lines() -> list[str]:
    rng = DrbgRng("hash-vector-keys")
    lines = []
    for algorithm, key_len in (("sha256", 32), ("sha512", 64), ("toy8", 4)):
        key = rng.randbytes(key_len)
        for value in sample_values():
            encoded = independent_encode(value)
            digest = independent_keyed_hash(algorithm, key, encoded)
            lines.append(f"{key.hex()} {encoded.hex()} {digest.hex()}")
    return lines


def write_hash_vectors(path: Path = HASH_VECTOR_FILE) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(generate_hash_vector_lines()) + "\n")


# ---------------------------------------------------------------------------
# Golden evidence trace
# ---------------------------------------------------------------------------

GOLDEN_SEED = "golden-trace-v1"
GOLDEN_T_VERIFY = 30


def build_golden_archive() -> tuple[Archive, list[tuple[str, bytes]]]:
    """Deterministic 4-entry trace crossing one full scheme rotation.

    Timeline: store two files at t=1, renew the timestamp at t=4 (early
    schemes) and t=12 (late schemes), renew the commitment at t=13. Every
    early scheme instance is broken well before the verification time.
    """
    rng = DrbgRng(GOLDEN_SEED)
    archive = Archive.create_local(SharingPolicy(3, 2), rng=rng, clock=LogicalClock())
    archive.register_signature_scheme("sig-early", "ed25519", 0, 14)
    archive.register_timestamp_scheme("ts-early", "ed25519", 0, 14)
    archive.register_vc_scheme("vc-data-early", "hiding-hm-256", 8, 0, 21)
    archive.register_vc_scheme("vc-renew-early", "merkle-sha256", 8, 0, 14)
    archive.register_signature_scheme("sig-late", "fts-sha256-h4", 10, 45)
    archive.register_timestamp_scheme("ts-late", "fts-sha256-h4", 10, 45)
    archive.register_vc_scheme("vc-data-late", "hiding-hm-512", 8, 10, 45)
    archive.register_vc_scheme("vc-renew-late", "merkle-sha512", 8, 10, 45)

    data_rng = DrbgRng(GOLDEN_SEED + "/data")
    files = [("alpha", data_rng.randbytes(48)), ("beta", data_rng.randbytes(48))]

    archive.clock.advance(1)
    archive.store(files, "sig-early", "vc-data-early", "ts-early")
    archive.clock.advance(4)
    archive.renew_ts("vc-renew-early", "ts-early")
    archive.clock.advance(12)
    archive.renew_ts("vc-renew-late", "ts-late")
    archive.clock.advance(13)
    archive.renew_com("vc-data-late", "ts-late")
    archive.clock.advance(GOLDEN_T_VERIFY)
    return archive, files


def build_golden_artifacts() -> dict[str, bytes]:
    archive, files = build_golden_archive()
    artifacts: dict[str, bytes] = {
        "pki.json": archive.pki.to_json().encode(),
        "meta.json": json.dumps(
            {
                "names": [name for name, _ in files],
                "t_store": 1,
                "t_verify": GOLDEN_T_VERIFY,
            },
            indent=2,
            sort_keys=True,
        ).encode(),
    }
    for name, dat in files:
        retrieved = archive.retrieve(name)
        assert retrieved.dat == dat
        artifacts[f"{name}.dat"] = dat
        artifacts[f"{name}.evidence"] = retrieved.bundle.to_bytes(dat)
    return artifacts


def write_golden(directory: Path = GOLDEN_DIR) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for filename, blob in build_golden_artifacts().items():
        (directory / filename).write_bytes(blob)


# ---------------------------------------------------------------------------
# Exact toy-parameter commitment distance
# ---------------------------------------------------------------------------

def toy_commitment_distance(
    params: hiding.HidingParams,
    m1,
    m2,
    field_samples: int = 512,
    seed: int = 7,
) -> tuple[float, int]:
    """Statistical distance (sum-of-absolute-differences convention) between
    the toy commitment distributions of two messages.

    Exploits the structure of the commitment (hash(x), a, b): conditioned on
    the field element a, the low bits of b are message-independent noise and
    the distribution over (hash(x), high bits of b) is enumerated *exactly*
    over the whole witness space, so the only approximation is averaging
    over a sample of a values. Returns (distance, commitments enumerated per
    message).
    """
    import numpy as np

    ell = params.ell
    width = params.element_bytes
    bits = width * 8
    if bits > 20:
        raise ValueError("enumeration only feasible for toy parameters")
    modulus = params.modulus

    mu1 = hiding._message_digest_bits(params, m1)
    mu2 = hiding._message_digest_bits(params, m2)
    delta = mu1 ^ mu2
    if delta == 0:
        # identical digests commit identically by construction
        return 0.0, (1 << bits) * field_samples

    size = 1 << bits
    digests = np.zeros(size, dtype=np.uint32)
    for x in range(size):
        digest = encoding.hash_value(params.hash_key, x.to_bytes(width, "big"))
        digests[x] = int.from_bytes(digest, "big")

    # log/exp tables for the toy field under a verified generator
    from longstore.gf2 import gf2_mul

    generator = 2
    while True:
        exp = np.zeros(2 * size, dtype=np.uint32)
        log = np.zeros(size, dtype=np.uint64)
        v = 1
        distinct = set()
        for i in range(size - 1):
            exp[i] = v
            log[v] = i
            distinct.add(v)
            v = gf2_mul(v, generator, modulus)
        if len(distinct) == size - 1:
            break
        generator += 1
    exp[size - 1 :] = exp[: size + 1]

    xs = np.arange(size, dtype=np.uint64)
    logx = log[xs[1:]]
    shift = bits - ell
    digest_bits = params.hash_key.descriptor.digest_size * 8
    n_bins = 1 << (digest_bits + ell)

    rs = np.random.RandomState(seed)
    total = 0.0
    for a in rs.randint(1, size, size=field_samples):
        products = np.zeros(size, dtype=np.uint64)
        products[1:] = exp[int(log[a]) + logx]
        msb = (products >> shift).astype(np.uint32)
        keys = (digests << ell) | msb
        counts = np.bincount(keys, minlength=n_bins).astype(np.int64)
        counts = counts.reshape(-1, 1 << ell)
        shifted = counts[:, np.arange(1 << ell) ^ delta]
        total += np.abs(counts - shifted).sum() / size
    return total / field_samples, size * field_samples

"""Statistically hiding, computationally binding commitments to one message.

Commit to the digest mu (ell bits) of a message: draw a witness x of 4*ell
bits, a field element a of GF(2^(4*ell)), and the low 3*ell bits of b
uniformly; fix the top ell bits of b so that the universal hash

    h_{a,b}(x) = msb_ell(a*x xor b)

equals mu. The commitment is (hash(x), a, b); the decommitment is x.
Hiding is statistical: conditioned on hash(x), the witness keeps enough
entropy that (a, b) reveal almost nothing about mu. Binding reduces to
finding a second preimage of hash(x).

Field moduli are fixed low-weight irreducible polynomials, one per
parameter set, taken from the standard minimal-pentanomial tables and
re-verified by the test suite:

    degree   16: x^16 + x^5 + x^3 + x + 1
    degree 1024: x^1024 + x^19 + x^6 + x + 1
    degree 2048: x^2048 + x^19 + x^14 + x^13 + 1
"""

from __future__ import annotations

from dataclasses import dataclass

from . import encoding
from .encoding import HashKey, hash_descriptor, keygen
from .gf2 import gf2_mul
from .rand import DEFAULT_RNG, ByteRng


def _pentanomial(degree: int, exponents: tuple[int, ...]) -> int:
    poly = (1 << degree) | 1
    for e in exponents:
        poly |= 1 << e
    return poly


# descriptor name -> (hash name, ell bits, field modulus of degree 4*ell)
PARAMETER_SETS = {
    "hm-256": ("sha256", 256, _pentanomial(1024, (19, 6, 1))),
    "hm-512": ("sha512", 512, _pentanomial(2048, (19, 14, 13))),
    "hm-toy4": ("toy8", 4, _pentanomial(16, (5, 3, 1))),
}


@dataclass(frozen=True)
class HidingParams:
    """Public commitment key: descriptor, hash key, and field modulus."""

    descriptor: str
    hash_key: HashKey
    ell: int  # bits
    modulus: int

    @property
    def element_bytes(self) -> int:
        return self.ell // 2  # 4*ell bits

    def to_value(self) -> encoding.Value:
        poly_bytes = self.modulus.to_bytes((self.modulus.bit_length() + 7) // 8, "big")
        return (
            self.descriptor.encode(),
            self.hash_key.key,
            poly_bytes,
        )

    @classmethod
    def from_value(cls, value: encoding.Value) -> "HidingParams":
        name_b, key, poly_bytes = encoding.expect_tuple(value, 3)
        name = encoding.expect_bytes(name_b).decode()
        hash_name, ell, modulus = PARAMETER_SETS[name]
        if int.from_bytes(encoding.expect_bytes(poly_bytes), "big") != modulus:
            raise ValueError(f"field modulus mismatch for {name}")
        return cls(
            name, HashKey(hash_descriptor(hash_name), encoding.expect_bytes(key)), ell, modulus
        )


@dataclass(frozen=True)
class HidingCommitment:
    witness_digest: bytes  # hash of the witness
    a: bytes  # field element, fixed width 4*ell bits
    b: bytes

    def to_value(self) -> encoding.Value:
        return (self.witness_digest, self.a, self.b)

    @classmethod
    def from_value(cls, value: encoding.Value) -> "HidingCommitment":
        y, a, b = encoding.expect_tuple(value, 3)
        return cls(
            encoding.expect_bytes(y), encoding.expect_bytes(a), encoding.expect_bytes(b)
        )


@dataclass(frozen=True)
class HidingDecommitment:
    witness: bytes  # 4*ell bits


def setup(descriptor: str, rng: ByteRng = DEFAULT_RNG) -> HidingParams:
    """Generate public parameters for a named parameter set."""
    try:
        hash_name, ell, modulus = PARAMETER_SETS[descriptor]
    except KeyError:
        raise KeyError(f"unknown hiding-commitment descriptor: {descriptor}") from None
    return HidingParams(descriptor, keygen(hash_name, rng), ell, modulus)


def _message_digest_bits(params: HidingParams, message: encoding.Value) -> int:
    digest = encoding.hash_value(params.hash_key, message)
    full = int.from_bytes(digest, "big")
    return full >> (len(digest) * 8 - params.ell)


def commit(
    params: HidingParams, message: encoding.Value, rng: ByteRng = DEFAULT_RNG
) -> tuple[HidingCommitment, HidingDecommitment]:
    ell = params.ell
    width = params.element_bytes
    mu = _message_digest_bits(params, message)
    witness = rng.randbytes(width)
    x = int.from_bytes(witness, "big")
    a = int.from_bytes(rng.randbytes(width), "big")
    b_low = int.from_bytes(rng.randbytes(width), "big") & ((1 << (3 * ell)) - 1)
    msb = gf2_mul(a, x, params.modulus) >> (3 * ell)
    b = ((msb ^ mu) << (3 * ell)) | b_low
    y = encoding.hash_value(params.hash_key, witness)
    commitment = HidingCommitment(y, a.to_bytes(width, "big"), b.to_bytes(width, "big"))
    return commitment, HidingDecommitment(witness)


def verify(
    params: HidingParams,
    message: encoding.Value,
    commitment: HidingCommitment,
    decommitment: HidingDecommitment,
) -> bool:
    try:
        ell = params.ell
        width = params.element_bytes
        if len(decommitment.witness) != width:
            return False
        if len(commitment.a) != width or len(commitment.b) != width:
            return False
        if encoding.hash_value(params.hash_key, decommitment.witness) != commitment.witness_digest:
            return False
        x = int.from_bytes(decommitment.witness, "big")
        a = int.from_bytes(commitment.a, "big")
        b = int.from_bytes(commitment.b, "big")
        mu = _message_digest_bits(params, message)
        return (gf2_mul(a, x, params.modulus) ^ b) >> (3 * ell) == mu
    except Exception:
        return False

"""Signature-based timestamping bound to the logical clock.

A service signs the pair (message, current time); the token records the
time, the signature, and the issuing scheme instance. Verification is
time-aware: the token must check out under its instance, the instance must
still be unbroken at the check time, and optionally the token's time must
equal an expected storage time.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import encoding, signatures
from .encoding import LogicalClock
from .rand import DEFAULT_RNG, ByteRng
from .signatures import PkiRegistry, SchemeInstance, SignatureKeyPair


class SchemeExpiredError(RuntimeError):
    """Stamping attempted at or after the service scheme's breakage time."""


@dataclass(frozen=True)
class TimestampToken:
    time: int
    signature: bytes
    scheme_id: str

    def to_value(self) -> encoding.Value:
        return (self.time, self.signature, self.scheme_id.encode())

    @classmethod
    def from_value(cls, value: encoding.Value) -> "TimestampToken":
        t, sig, scheme_id = encoding.expect_tuple(value, 3)
        return cls(
            encoding.expect_uint(t),
            encoding.expect_bytes(sig),
            encoding.expect_bytes(scheme_id).decode(),
        )


class TimestampService:
    """One service instance per timestamp scheme epoch."""

    def __init__(self, scheme_id: str, keypair: SignatureKeyPair, clock: LogicalClock, pki: PkiRegistry):
        self.scheme_id = scheme_id
        self.keypair = keypair
        self.clock = clock
        self.pki = pki
        self.issued = 0

    def stamp(self, message: encoding.Value) -> TimestampToken:
        t = self.clock.now
        if not self.pki.valid_at(self.scheme_id, t):
            raise SchemeExpiredError(
                f"timestamp scheme {self.scheme_id} is not valid at time {t}"
            )
        sig = signatures.sign(self.keypair, (message, t))
        self.issued += 1
        return TimestampToken(t, sig, self.scheme_id)


def setup(
    descriptor: str,
    pki: PkiRegistry,
    clock: LogicalClock,
    *,
    scheme_id: str,
    valid_from: int,
    breakage_time: int,
    rng: ByteRng = DEFAULT_RNG,
) -> TimestampService:
    """Create a service with a fresh key and register it in the PKI."""
    keypair = signatures.setup(descriptor, rng)
    pki.register(
        SchemeInstance(
            scheme_id, "timestamp", descriptor, keypair.public_key, valid_from, breakage_time
        )
    )
    return TimestampService(scheme_id, keypair, clock, pki)


def verify(
    pki: PkiRegistry,
    t_check: int,
    message: encoding.Value,
    token: TimestampToken,
    t_expected: int | None = None,
) -> bool:
    """Token check at time ``t_check``; all failure modes return False."""
    try:
        if t_expected is not None and token.time != t_expected:
            return False
        return signatures.verify_at(
            pki, token.scheme_id, (message, token.time), token.signature, t_check
        )
    except Exception:
        return False

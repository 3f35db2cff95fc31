"""Data-owner orchestration and the evidence verifier.

The archive wires together the logical clock, the scheme registry, the
shareholder fabric, and the evidence service. Storing a batch signs each
file, shares the data triples and per-file decommitments, and registers a
single vector commitment plus a single timestamp for the whole batch.
Renewals keep that evidence valid across scheme breakage:

* timestamp renewal (cheap, evidence-service-only): re-stamps the running
  evidence under a fresh tree commitment;
* commitment renewal (data owner): re-commits data together with the full
  prior evidence under a new hiding scheme instance.

``verify`` replays a retrieved chain against the registry: each component
must check out under a scheme instance that is still unbroken at the time
the *next* link took over protection, so evidence stays convincing only if
every scheme was renewed before its breakage time.

Evidence bundles exported to disk carry a 4-byte magic ``ELSA`` and a
version byte, then the canonical encoding of
``(sha256(dat), sig_scheme_id, signature, entries)``.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass

from . import encoding, signatures, timestamping, vector_com
from .encoding import LogicalClock
from .evidence import EvidenceEntry, EvidenceService, entry_from_value, entry_to_value
from .rand import DEFAULT_RNG, ByteRng
from .sharing import ShareStore, SharingPolicy, Shareholder, renew_sharing
from .signatures import PkiRegistry, SchemeInstance, SignatureKeyPair
from .timestamping import TimestampService
from .vector_com import Opening, VcParams, VectorCommitment

EVIDENCE_MAGIC = b"ELSA"
EVIDENCE_VERSION = 1


class ArchiveError(RuntimeError):
    pass


@dataclass
class EvidenceBundle:
    sig_scheme_id: str
    signature: bytes
    entries: list[EvidenceEntry]

    def to_bytes(self, dat: bytes) -> bytes:
        body = encoding.encode(
            (
                hashlib.sha256(dat).digest(),
                self.sig_scheme_id.encode(),
                self.signature,
                tuple(entry_to_value(e) for e in self.entries),
            )
        )
        return EVIDENCE_MAGIC + bytes([EVIDENCE_VERSION]) + body

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["EvidenceBundle", bytes]:
        """Parse a bundle file; returns (bundle, expected sha256 of dat)."""
        if data[:4] != EVIDENCE_MAGIC or len(data) < 5:
            raise ValueError("not an evidence bundle")
        if data[4] != EVIDENCE_VERSION:
            raise ValueError(f"unsupported bundle version {data[4]}")
        dat_hash, sig_id, sig, entry_values = encoding.expect_tuple(
            encoding.decode(data[5:]), 4
        )
        bundle = cls(
            encoding.expect_bytes(sig_id).decode(),
            encoding.expect_bytes(sig),
            [entry_from_value(v) for v in encoding.expect_tuple(entry_values)],
        )
        return bundle, encoding.expect_bytes(dat_hash)


@dataclass
class RetrievedFile:
    name: str
    dat: bytes
    bundle: EvidenceBundle

    @property
    def t_store(self) -> int:
        return self.bundle.entries[0].token.time


class Archive:
    """One data owner's view of the storage system."""

    def __init__(
        self,
        policy: SharingPolicy,
        share_store: ShareStore,
        es: EvidenceService,
        pki: PkiRegistry,
        clock: LogicalClock,
        rng: ByteRng = DEFAULT_RNG,
        known_names: list[str] | None = None,
    ):
        self.policy = policy
        self.share_store = share_store
        self.es = es
        self.pki = pki
        self.clock = clock
        self.rng = rng
        self.signers: dict[str, SignatureKeyPair] = {}
        self.ts_services: dict[str, TimestampService] = {}
        # the owner's roster, in storage order; drives renewal iteration so
        # the evidence service is only ever consulted through its wire ops
        self._names: list[str] = list(known_names or [])
        self._vc_cache: dict[str, VcParams] = {}
        self._lock = threading.RLock()

    def names(self) -> list[str]:
        return list(self._names)

    @classmethod
    def create_local(
        cls,
        policy: SharingPolicy,
        rng: ByteRng = DEFAULT_RNG,
        clock: LogicalClock | None = None,
        shareholder_dirs: list | None = None,
    ) -> "Archive":
        """In-process archive: local shareholders and evidence service."""
        clock = clock or LogicalClock()
        pki = PkiRegistry()
        dirs = shareholder_dirs or [None] * policy.n
        holders = [Shareholder(i + 1, dirs[i], rng) for i in range(policy.n)]
        store = ShareStore(policy, holders, rng)
        archive = cls(policy, store, EvidenceService(pki), pki, clock, rng)
        pki.register(
            SchemeInstance(
                "sharing-0",
                "sharing",
                "shamir-gf256",
                encoding.encode((policy.n, policy.threshold)),
                0,
                2**62,
            )
        )
        return archive

    # -- scheme management ----------------------------------------------------

    def register_signature_scheme(
        self, scheme_id: str, descriptor: str, valid_from: int, breakage_time: int
    ) -> None:
        keypair = signatures.setup(descriptor, self.rng)
        self.pki.register(
            SchemeInstance(
                scheme_id, "signature", descriptor, keypair.public_key, valid_from, breakage_time
            )
        )
        self.signers[scheme_id] = keypair

    def register_timestamp_scheme(
        self, scheme_id: str, descriptor: str, valid_from: int, breakage_time: int
    ) -> None:
        service = timestamping.setup(
            descriptor,
            self.pki,
            self.clock,
            scheme_id=scheme_id,
            valid_from=valid_from,
            breakage_time=breakage_time,
            rng=self.rng,
        )
        self.ts_services[scheme_id] = service
        self.es.ts_services[scheme_id] = service

    def register_vc_scheme(
        self, scheme_id: str, descriptor: str, max_length: int,
        valid_from: int, breakage_time: int,
    ) -> None:
        params = vector_com.setup(descriptor, max_length, self.rng, scheme_id=scheme_id)
        self.pki.register(
            SchemeInstance(
                scheme_id,
                "vector-commitment",
                descriptor,
                params.to_bytes(),
                valid_from,
                breakage_time,
            )
        )
        self._vc_cache[scheme_id] = params

    def vc_params(self, scheme_id: str) -> VcParams:
        if scheme_id not in self._vc_cache:
            self._vc_cache[scheme_id] = vector_com.params_for_instance(self.pki.get(scheme_id))
        return self._vc_cache[scheme_id]

    def tokens_issued(self) -> int:
        return sum(s.issued for s in self.ts_services.values())

    # -- storage operations ----------------------------------------------------

    def store(
        self,
        files: list[tuple[str, bytes]],
        sig_id: str,
        vc_id: str,
        ts_id: str,
        sign_commitment: bool = False,
    ) -> None:
        """Sign, share, commit, and timestamp a batch of files.

        By default every file is signed individually (allowing different
        signers per file). With ``sign_commitment`` one signature over the
        batch commitment covers all files: elements commit to (dat, cert)
        pairs and the shared signature is stored alongside each file. The
        two modes need no marker because the signed messages live in
        disjoint encoding domains (raw bytes vs. tuple).
        """
        with self._lock:
            names = [name for name, _ in files]
            if len(set(names)) != len(names):
                raise ArchiveError("duplicate names in batch")
            for name in names:
                if name in self._names:
                    raise ArchiveError(f"name already stored: {name}")
            params = self.vc_params(vc_id)
            if len(files) > params.max_length:
                raise ArchiveError(
                    f"batch of {len(files)} exceeds commitment capacity {params.max_length}"
                )
            signer = self.signers[sig_id]
            cert = sig_id.encode()

            if sign_commitment:
                elements: list[encoding.Value] = [(dat, cert) for _, dat in files]
                c, tree = vector_com.commit(params, elements, self.rng)
                sig = signatures.sign(signer, (vc_id.encode(), c.digest))
                for name, dat in files:
                    self.share_store.store(f"data/{name}", (dat, cert, sig))
            else:
                triples = []
                for name, dat in files:
                    sig = signatures.sign(signer, dat)
                    triple = (dat, cert, sig)
                    self.share_store.store(f"data/{name}", triple)
                    triples.append(triple)
                c, tree = vector_com.commit(params, triples, self.rng)

            for i, (name, _) in enumerate(files):
                opening = vector_com.open_at(params, tree, i)
                self.share_store.store(f"decom/{name}/0", (i, opening.to_value()))

            self.es.add_com(names, vc_id, c.digest, ts_id)
            self._names.extend(names)

    def retrieve(self, name: str) -> RetrievedFile:
        entries = self.es.get_evidence(name)
        for idx, entry in enumerate(entries):
            if entry.com is not None:
                _, opening_value = self.share_store.retrieve(f"decom/{name}/{idx}")
                entry.com.opening = Opening.from_value(opening_value)
        dat, cert, sig = self.share_store.retrieve(f"data/{name}")
        bundle = EvidenceBundle(bytes(cert).decode(), bytes(sig), entries)
        return RetrievedFile(name, bytes(dat), bundle)

    # -- renewals ---------------------------------------------------------------

    def renew_ts(self, vc_id: str, ts_id: str, per_item: bool = False) -> int:
        with self._lock:
            if not self._names:
                return 0
            return self.es.renew_ts(vc_id, ts_id, per_item=per_item, rng=self.rng)

    def renew_com(self, vc_id: str, ts_id: str, per_item: bool = False) -> None:
        """Re-commit every file together with its full evidence so far."""
        with self._lock:
            names = self.names()
            if not names:
                raise ArchiveError("nothing stored; commitment renewal is meaningless")
            params = self.vc_params(vc_id)
            retrieved: dict[str, RetrievedFile] = {}
            elements: list[encoding.Value] = []
            for name in names:
                rf = self.retrieve(name)
                retrieved[name] = rf
                elements.append(
                    (
                        rf.dat,
                        rf.bundle.sig_scheme_id.encode(),
                        rf.bundle.signature,
                        tuple(entry_to_value(e) for e in rf.bundle.entries),
                    )
                )

            if per_item:
                items = []
                for name, element in zip(names, elements):
                    c, tree = vector_com.commit(params, [element], self.rng)
                    opening = vector_com.open_at(params, tree, 0)
                    entry_index = len(retrieved[name].bundle.entries)
                    self.share_store.store(
                        f"decom/{name}/{entry_index}", (0, opening.to_value())
                    )
                    items.append((name, c.digest))
                self.es.add_com_renew_items(items, vc_id, ts_id)
                return

            if len(elements) > params.max_length:
                raise ArchiveError(
                    f"{len(elements)} items exceed commitment capacity {params.max_length}"
                )
            c, tree = vector_com.commit(params, elements, self.rng)
            positions = {}
            for i, name in enumerate(names):
                opening = vector_com.open_at(params, tree, i)
                entry_index = len(retrieved[name].bundle.entries)
                self.share_store.store(f"decom/{name}/{entry_index}", (i, opening.to_value()))
                positions[name] = i
            self.es.add_com_renew(vc_id, c.digest, ts_id, positions)

    def renew_shares(self, central: bool = False) -> None:
        with self._lock:
            if central:
                self.share_store.reshare_central()
            else:
                self.share_store.reshare()

    def renew_sharing(self, new_policy: SharingPolicy, new_shareholders: list) -> None:
        """Migrate to a new shareholder set; the old set is shut down after."""
        with self._lock:
            new_store = ShareStore(new_policy, new_shareholders, self.rng)
            names = []
            for name in self.names():
                names.append(f"data/{name}")
                for idx, entry in enumerate(self.es.get_evidence(name)):
                    if entry.com is not None:
                        names.append(f"decom/{name}/{idx}")
            renew_sharing(self.share_store, new_store, names)
            self.share_store = new_store
            self.policy = new_policy


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def _vc_verify_at(
    pki: PkiRegistry,
    scheme_id: str,
    message: encoding.Value,
    commitment: bytes,
    opening: Opening | None,
    position: int,
    t: int,
) -> bool:
    if opening is None:
        return False
    try:
        instance = pki.get(scheme_id)
    except signatures.UnknownSchemeError:
        return False
    if instance.kind != "vector-commitment":
        return False
    if not pki.valid_at(scheme_id, t):
        return False
    params = vector_com.params_for_instance(instance)
    return vector_com.verify(params, message, VectorCommitment(commitment), opening, position)


def verify(
    pki: PkiRegistry,
    t_verify: int,
    dat: bytes,
    t_store: int,
    bundle: EvidenceBundle,
) -> bool:
    """Replay an evidence chain; True only if every link checks out."""
    try:
        return _verify(pki, t_verify, dat, t_store, bundle)
    except Exception:
        return False


def _verify(
    pki: PkiRegistry, t_verify: int, dat: bytes, t_store: int, bundle: EvidenceBundle
) -> bool:
    entries = bundle.entries
    if not entries:
        return False

    def next_token_time(i: int) -> int:
        return entries[i + 1].token.time if i + 1 < len(entries) else t_verify

    def next_com_time(i: int) -> int:
        for j in range(i + 1, len(entries)):
            if entries[j].com is not None:
                return entries[j].token.time
        return t_verify

    first = entries[0]
    if first.com is None:
        return False
    cert = bundle.sig_scheme_id.encode()
    token = first.token

    # The signature covers either the file bytes (per-file signing) or the
    # batch commitment; the encoding domains are disjoint, and the vector
    # commitment pins the matching element shape.
    if signatures.verify_at(pki, bundle.sig_scheme_id, dat, bundle.signature, token.time):
        ok = True
        first_message: encoding.Value = (dat, cert, bundle.signature)
    else:
        ok = signatures.verify_at(
            pki,
            bundle.sig_scheme_id,
            (first.com.vc_scheme_id.encode(), first.com.commitment),
            bundle.signature,
            token.time,
        )
        first_message = (dat, cert)
    ok = ok and _vc_verify_at(
        pki,
        first.com.vc_scheme_id,
        first_message,
        first.com.commitment,
        first.com.opening,
        first.com.position,
        next_com_time(0),
    )
    ok = ok and timestamping.verify(
        pki,
        next_token_time(0),
        (first.com.vc_scheme_id.encode(), first.com.commitment),
        token,
        t_expected=t_store,
    )
    chain: list[encoding.Value] = [
        (first.com.vc_scheme_id.encode(), first.com.commitment, token.to_value())
    ]

    for i in range(1, len(entries)):
        entry = entries[i]
        token = entry.token
        if entry.renew is not None:
            part = entry.renew
            ok = ok and _vc_verify_at(
                pki,
                part.vc_scheme_id,
                tuple(chain),
                part.commitment,
                part.opening,
                part.position,
                next_token_time(i),
            )
            ok = ok and timestamping.verify(
                pki,
                next_token_time(i),
                (part.vc_scheme_id.encode(), part.commitment),
                token,
                t_expected=token.time,
            )
            chain.append(
                (
                    part.vc_scheme_id.encode(),
                    part.commitment,
                    part.opening.to_value(),
                    token.to_value(),
                )
            )
        elif entry.com is not None:
            part = entry.com
            prior = tuple(entry_to_value(e) for e in entries[:i])
            ok = ok and _vc_verify_at(
                pki,
                part.vc_scheme_id,
                (dat, cert, bundle.signature, prior),
                part.commitment,
                part.opening,
                part.position,
                next_com_time(i),
            )
            ok = ok and timestamping.verify(
                pki,
                next_token_time(i),
                (part.vc_scheme_id.encode(), part.commitment),
                token,
                t_expected=token.time,
            )
            chain = [(part.vc_scheme_id.encode(), part.commitment, token.to_value())]
        else:
            return False
        if not ok:
            return False
    return ok


def verify_bundle_file(
    pki: PkiRegistry,
    t_verify: int,
    dat: bytes,
    bundle_bytes: bytes,
    t_store: int | None = None,
) -> bool:
    """File-level verification: parse failures and hash mismatches are False."""
    try:
        bundle, dat_hash = EvidenceBundle.from_bytes(bundle_bytes)
        if hashlib.sha256(dat).digest() != dat_hash:
            return False
        if t_store is None:
            t_store = bundle.entries[0].token.time
        return verify(pki, t_verify, dat, t_store, bundle)
    except Exception:
        return False

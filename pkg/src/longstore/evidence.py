"""The evidence service: per-name chains of commitments and timestamps.

Names stored in one batch alias a single physical evidence segment; a
timestamp renewal vector-commits to *all* active segments at once and
therefore spends one token no matter how many items are protected. A
commitment renewal starts one fresh segment that every name's chain
appends, after which that fresh segment is the only active one.

The service never sees message plaintexts or data decommitments: inbound
payloads carry only names, scheme ids, commitments, and positions (the
recorded transcript lets tests assert this). The openings it does hold are
its own renewal-tree paths, which are hashes of already-public material.

State persists as a directory: ``lists/<segment-id>`` holds the canonical
encoding of a segment's entries, ``index.json`` maps names to their
(segment, position) chain. Networked mode speaks the framed protocol with
messages ADD_COM, RENEW_TS, ADD_COM_RENEW, and GET_EVIDENCE.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
from dataclasses import dataclass
from pathlib import Path

from . import encoding, vector_com
from .rand import DEFAULT_RNG, ByteRng
from .sharing import recv_frame, send_frame
from .signatures import PkiRegistry
from .timestamping import TimestampService, TimestampToken
from .vector_com import Opening

logger = logging.getLogger(__name__)


class EvidenceError(RuntimeError):
    pass


class DuplicateNameError(EvidenceError):
    pass


# ---------------------------------------------------------------------------
# Logical entries (what a verifier sees)
# ---------------------------------------------------------------------------

@dataclass
class ComPart:
    vc_scheme_id: str
    commitment: bytes
    position: int
    opening: Opening | None = None  # filled at retrieval from shareholders


@dataclass
class RenewPart:
    vc_scheme_id: str
    commitment: bytes
    position: int
    opening: Opening


@dataclass
class EvidenceEntry:
    token: TimestampToken
    com: ComPart | None = None
    renew: RenewPart | None = None


def entry_to_value(entry: EvidenceEntry, include_opening: bool = True) -> encoding.Value:
    if entry.com is not None:
        part = entry.com
        opening_value: encoding.Value = None
        if include_opening and part.opening is not None:
            opening_value = part.opening.to_value()
        return (
            b"com",
            part.vc_scheme_id.encode(),
            part.commitment,
            part.position,
            opening_value,
            entry.token.to_value(),
        )
    assert entry.renew is not None
    part = entry.renew
    return (
        b"renew",
        part.vc_scheme_id.encode(),
        part.commitment,
        part.position,
        part.opening.to_value(),
        entry.token.to_value(),
    )


def entry_from_value(value: encoding.Value) -> EvidenceEntry:
    tag, scheme_id, commitment, position, opening_value, token_value = encoding.expect_tuple(
        value, 6
    )
    tag = encoding.expect_bytes(tag)
    scheme_id = encoding.expect_bytes(scheme_id).decode()
    commitment = encoding.expect_bytes(commitment)
    position = encoding.expect_uint(position)
    token = TimestampToken.from_value(token_value)
    if tag == b"com":
        opening = None if opening_value is None else Opening.from_value(opening_value)
        return EvidenceEntry(token, com=ComPart(scheme_id, commitment, position, opening))
    if tag == b"renew":
        opening = Opening.from_value(opening_value)
        return EvidenceEntry(token, renew=RenewPart(scheme_id, commitment, position, opening))
    raise encoding.EncodingError(f"unknown evidence entry tag {tag!r}")


# ---------------------------------------------------------------------------
# Physical segments
# ---------------------------------------------------------------------------

@dataclass
class _ComHead:
    vc_scheme_id: str
    commitment: bytes
    positions: dict[str, int]
    token: TimestampToken


@dataclass
class _RenewTail:
    vc_scheme_id: str
    commitment: bytes
    position: int
    opening: Opening
    token: TimestampToken


class EvidenceSegment:
    def __init__(self, seg_id: str, head: _ComHead):
        self.seg_id = seg_id
        self.head = head
        self.tail: list[_RenewTail] = []

    def chain_value(self) -> encoding.Value:
        """Canonical value of the running chain used by timestamp renewal.

        Element shapes mirror what a verifier replays: the last data
        commitment without its opening, then each renewal with its tree
        opening attached.
        """
        elems: list[encoding.Value] = [
            (self.head.vc_scheme_id.encode(), self.head.commitment, self.head.token.to_value())
        ]
        for t in self.tail:
            elems.append(
                (t.vc_scheme_id.encode(), t.commitment, t.opening.to_value(), t.token.to_value())
            )
        return tuple(elems)

    def to_value(self) -> encoding.Value:
        entries: list[encoding.Value] = [
            (
                b"com",
                self.head.vc_scheme_id.encode(),
                self.head.commitment,
                self.head.token.to_value(),
            )
        ]
        for t in self.tail:
            entries.append(
                (
                    b"renew",
                    t.vc_scheme_id.encode(),
                    t.commitment,
                    t.position,
                    t.opening.to_value(),
                    t.token.to_value(),
                )
            )
        return tuple(entries)

    @classmethod
    def from_value(cls, seg_id: str, value: encoding.Value) -> "EvidenceSegment":
        head_value, *tail_values = encoding.expect_tuple(value)
        tag, scheme_id, commitment, token_value = encoding.expect_tuple(head_value, 4)
        if encoding.expect_bytes(tag) != b"com":
            raise encoding.EncodingError("segment must start with a commitment entry")
        seg = cls(
            seg_id,
            _ComHead(
                encoding.expect_bytes(scheme_id).decode(),
                encoding.expect_bytes(commitment),
                {},
                TimestampToken.from_value(token_value),
            ),
        )
        for tv in tail_values:
            tag, scheme_id, commitment, position, opening_value, token_value = (
                encoding.expect_tuple(tv, 6)
            )
            if encoding.expect_bytes(tag) != b"renew":
                raise encoding.EncodingError("segment tail must be renewal entries")
            seg.tail.append(
                _RenewTail(
                    encoding.expect_bytes(scheme_id).decode(),
                    encoding.expect_bytes(commitment),
                    encoding.expect_uint(position),
                    Opening.from_value(opening_value),
                    TimestampToken.from_value(token_value),
                )
            )
        return seg


# ---------------------------------------------------------------------------
# The service
# ---------------------------------------------------------------------------

class EvidenceService:
    """Single-writer evidence store; reads return deep copies."""

    def __init__(self, pki: PkiRegistry, ts_services: dict[str, TimestampService] | None = None):
        self.pki = pki
        self.ts_services = ts_services if ts_services is not None else {}
        self._chains: dict[str, list[EvidenceSegment]] = {}
        self._renew_lists: list[EvidenceSegment] = []
        self._next_seg = 0
        self._lock = threading.RLock()
        self.inbound_transcript: list[bytes] = []

    # -- helpers -------------------------------------------------------------

    def _ts(self, ts_scheme_id: str) -> TimestampService:
        try:
            return self.ts_services[ts_scheme_id]
        except KeyError:
            raise EvidenceError(f"no timestamp service for {ts_scheme_id}") from None

    def _new_segment(self, head: _ComHead) -> EvidenceSegment:
        seg = EvidenceSegment(f"seg-{self._next_seg:06d}", head)
        self._next_seg += 1
        return seg

    def _record(self, request: encoding.Value) -> None:
        self.inbound_transcript.append(encoding.encode(request))

    # -- operations ----------------------------------------------------------

    def names(self) -> list[str]:
        with self._lock:
            return list(self._chains)

    def __contains__(self, name: str) -> bool:
        return name in self._chains

    def add_com(
        self, names: list[str], vc_scheme_id: str, commitment: bytes, ts_scheme_id: str
    ) -> None:
        """Start one shared evidence list for a fresh batch of names."""
        with self._lock:
            self._record(
                (b"ADD_COM", tuple(n.encode() for n in names), vc_scheme_id.encode(),
                 commitment, ts_scheme_id.encode())
            )
            if len(set(names)) != len(names):
                raise DuplicateNameError("duplicate names within batch")
            already = [n for n in names if n in self._chains]
            if already:
                raise DuplicateNameError(f"names already stored: {already}")
            token = self._ts(ts_scheme_id).stamp((vc_scheme_id.encode(), commitment))
            head = _ComHead(vc_scheme_id, commitment, {n: i for i, n in enumerate(names)}, token)
            seg = self._new_segment(head)
            for name in names:
                self._chains[name] = [seg]
            self._renew_lists.append(seg)

    def renew_ts(
        self,
        vc_scheme_id: str,
        ts_scheme_id: str,
        per_item: bool = False,
        rng: ByteRng = DEFAULT_RNG,
    ) -> int:
        """Stamp the running evidence under a fresh commitment.

        Returns the number of tokens issued: one in batched mode, one per
        active list in per-item mode. An empty service is a logged no-op.
        """
        with self._lock:
            self._record(
                (b"RENEW_TS", vc_scheme_id.encode(), ts_scheme_id.encode(),
                 1 if per_item else 0)
            )
            if not self._renew_lists:
                logger.info("timestamp renewal skipped: no evidence lists")
                return 0
            params = vector_com.params_for_instance(self.pki.get(vc_scheme_id))
            service = self._ts(ts_scheme_id)
            if per_item:
                for seg in self._renew_lists:
                    c, tree = vector_com.commit(params, [seg.chain_value()], rng)
                    token = service.stamp((vc_scheme_id.encode(), c.digest))
                    opening = vector_com.open_at(params, tree, 0)
                    seg.tail.append(_RenewTail(vc_scheme_id, c.digest, 0, opening, token))
                return len(self._renew_lists)
            vector = [seg.chain_value() for seg in self._renew_lists]
            c, tree = vector_com.commit(params, vector, rng)
            token = service.stamp((vc_scheme_id.encode(), c.digest))
            for i, seg in enumerate(self._renew_lists):
                opening = vector_com.open_at(params, tree, i)
                seg.tail.append(_RenewTail(vc_scheme_id, c.digest, i, opening, token))
            return 1

    def add_com_renew(
        self,
        vc_scheme_id: str,
        commitment: bytes,
        ts_scheme_id: str,
        positions: dict[str, int],
    ) -> None:
        """Append a fresh data commitment to every name's chain."""
        with self._lock:
            self._record(
                (
                    b"ADD_COM_RENEW",
                    vc_scheme_id.encode(),
                    commitment,
                    ts_scheme_id.encode(),
                    tuple((n.encode(), p) for n, p in sorted(positions.items())),
                )
            )
            if not self._chains:
                raise EvidenceError("no stored names to renew")
            missing = [n for n in self._chains if n not in positions]
            if missing:
                raise EvidenceError(f"position map missing names: {missing}")
            token = self._ts(ts_scheme_id).stamp((vc_scheme_id.encode(), commitment))
            seg = self._new_segment(_ComHead(vc_scheme_id, commitment, dict(positions), token))
            for name in self._chains:
                self._chains[name].append(seg)
            self._renew_lists = [seg]

    def add_com_renew_items(
        self,
        items: list[tuple[str, bytes]],
        vc_scheme_id: str,
        ts_scheme_id: str,
    ) -> None:
        """Per-item variant: every name gets its own fresh commitment entry."""
        with self._lock:
            self._record(
                (
                    b"ADD_COM_RENEW",
                    vc_scheme_id.encode(),
                    b"",
                    ts_scheme_id.encode(),
                    tuple((n.encode(), 0) for n, _ in items),
                )
            )
            if not self._chains:
                raise EvidenceError("no stored names to renew")
            missing = [n for n in self._chains if n not in {i[0] for i in items}]
            if missing:
                raise EvidenceError(f"position map missing names: {missing}")
            service = self._ts(ts_scheme_id)
            fresh = []
            for name, commitment in items:
                token = service.stamp((vc_scheme_id.encode(), commitment))
                seg = self._new_segment(_ComHead(vc_scheme_id, commitment, {name: 0}, token))
                self._chains[name].append(seg)
                fresh.append(seg)
            self._renew_lists = fresh

    def get_evidence(self, name: str) -> list[EvidenceEntry]:
        """The name's chain as independent entries; data openings are empty."""
        with self._lock:
            try:
                segments = self._chains[name]
            except KeyError:
                raise KeyError(f"unknown name: {name}") from None
            entries: list[EvidenceEntry] = []
            for seg in segments:
                entries.append(
                    EvidenceEntry(
                        seg.head.token,
                        com=ComPart(
                            seg.head.vc_scheme_id,
                            seg.head.commitment,
                            seg.head.positions[name],
                        ),
                    )
                )
                for t in seg.tail:
                    entries.append(
                        EvidenceEntry(
                            t.token,
                            renew=RenewPart(
                                t.vc_scheme_id,
                                t.commitment,
                                t.position,
                                Opening(t.opening.index, tuple(t.opening.path), t.opening.hidden),
                            ),
                        )
                    )
            return entries

    # -- persistence ---------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        lists_dir = directory / "lists"
        lists_dir.mkdir(parents=True, exist_ok=True)
        with self._lock:
            segments: dict[str, EvidenceSegment] = {}
            for chain in self._chains.values():
                for seg in chain:
                    segments[seg.seg_id] = seg
            for seg in self._renew_lists:
                segments[seg.seg_id] = seg
            for seg_id, seg in segments.items():
                (lists_dir / seg_id).write_bytes(encoding.encode(seg.to_value()))
            index = {
                "names": {
                    name: [
                        {"list": seg.seg_id, "position": seg.head.positions[name]}
                        for seg in chain
                    ]
                    for name, chain in self._chains.items()
                },
                "renew_lists": [seg.seg_id for seg in self._renew_lists],
                "next_seg": self._next_seg,
            }
            (directory / "index.json").write_text(json.dumps(index, sort_keys=True, indent=1))

    @classmethod
    def load(
        cls,
        directory: str | Path,
        pki: PkiRegistry,
        ts_services: dict[str, TimestampService] | None = None,
    ) -> "EvidenceService":
        directory = Path(directory)
        index = json.loads((directory / "index.json").read_text())
        service = cls(pki, ts_services)
        segments: dict[str, EvidenceSegment] = {}

        def load_segment(seg_id: str) -> EvidenceSegment:
            if seg_id not in segments:
                raw = (directory / "lists" / seg_id).read_bytes()
                segments[seg_id] = EvidenceSegment.from_value(seg_id, encoding.decode(raw))
            return segments[seg_id]

        for name, refs in index["names"].items():
            chain = []
            for ref in refs:
                seg = load_segment(ref["list"])
                seg.head.positions[name] = ref["position"]
                chain.append(seg)
            service._chains[name] = chain
        service._renew_lists = [load_segment(seg_id) for seg_id in index["renew_lists"]]
        service._next_seg = index["next_seg"]
        return service


# ---------------------------------------------------------------------------
# Networked mode
# ---------------------------------------------------------------------------

class EvidenceServiceServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, service: EvidenceService, host: str = "127.0.0.1", port: int = 0):
        self.service = service
        super().__init__((host, port), _EvidenceHandler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self.server_address
        return f"{host}:{port}"

    def start(self) -> "EvidenceServiceServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


class _EvidenceHandler(socketserver.BaseRequestHandler):
    def handle(self):
        service: EvidenceService = self.server.service
        try:
            while True:
                request = recv_frame(self.request)
                try:
                    reply = self._dispatch(service, request)
                except (EvidenceError, KeyError, ValueError) as exc:
                    reply = (b"ERR", type(exc).__name__.encode(), str(exc).encode())
                send_frame(self.request, reply)
        except (ConnectionError, OSError):
            return

    def _dispatch(self, service: EvidenceService, request: tuple) -> tuple:
        op = bytes(request[0])
        if op == b"ADD_COM":
            _, names, vc_id, commitment, ts_id = request
            service.add_com(
                [bytes(n).decode() for n in names],
                bytes(vc_id).decode(),
                bytes(commitment),
                bytes(ts_id).decode(),
            )
            return (b"OK",)
        if op == b"RENEW_TS":
            _, vc_id, ts_id, per_item = request
            count = service.renew_ts(
                bytes(vc_id).decode(), bytes(ts_id).decode(), per_item=bool(per_item)
            )
            return (b"OK", count)
        if op == b"ADD_COM_RENEW":
            _, vc_id, commitment, ts_id, positions = request
            service.add_com_renew(
                bytes(vc_id).decode(),
                bytes(commitment),
                bytes(ts_id).decode(),
                {bytes(n).decode(): p for n, p in positions},
            )
            return (b"OK",)
        if op == b"GET_EVIDENCE":
            entries = service.get_evidence(bytes(request[1]).decode())
            return (b"OK", tuple(entry_to_value(e) for e in entries))
        raise EvidenceError(f"unknown op {op!r}")


class RemoteEvidenceService:
    """Client proxy for the framed evidence-service protocol."""

    def __init__(self, address: str):
        host, port = address.rsplit(":", 1)
        self._addr = (host, int(port))

    def _call(self, request: tuple) -> tuple:
        with socket.create_connection(self._addr, timeout=10) as sock:
            send_frame(sock, request)
            reply = recv_frame(sock)
        if bytes(reply[0]) == b"ERR":
            kind = bytes(reply[1]).decode()
            message = bytes(reply[2]).decode()
            if kind == "DuplicateNameError":
                raise DuplicateNameError(message)
            if kind == "KeyError":
                raise KeyError(message)
            raise EvidenceError(message)
        return reply

    def add_com(self, names, vc_scheme_id, commitment, ts_scheme_id) -> None:
        self._call(
            (b"ADD_COM", tuple(n.encode() for n in names), vc_scheme_id.encode(),
             commitment, ts_scheme_id.encode())
        )

    def renew_ts(self, vc_scheme_id, ts_scheme_id, per_item=False, rng=DEFAULT_RNG) -> int:
        reply = self._call(
            (b"RENEW_TS", vc_scheme_id.encode(), ts_scheme_id.encode(), 1 if per_item else 0)
        )
        return reply[1]

    def add_com_renew(self, vc_scheme_id, commitment, ts_scheme_id, positions) -> None:
        self._call(
            (
                b"ADD_COM_RENEW",
                vc_scheme_id.encode(),
                commitment,
                ts_scheme_id.encode(),
                tuple((n.encode(), p) for n, p in sorted(positions.items())),
            )
        )

    def get_evidence(self, name: str) -> list[EvidenceEntry]:
        reply = self._call((b"GET_EVIDENCE", name.encode()))
        return [entry_from_value(v) for v in reply[1]]

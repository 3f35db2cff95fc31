"""Threshold secret sharing with proactive renewal.

Secrets are shared byte-wise over GF(256) (AES polynomial): each byte gets
its own random degree-(T-1) polynomial with the secret byte as constant
term, and shareholder i holds the evaluations at x=i. Share size therefore
equals secret size for any secret length, so no chunking layer is needed.

Shares are refreshed without reconstruction (proactive renewal): every
shareholder deals evaluations of a fresh zero-constant-term polynomial to
all peers, and each shareholder folds the received sub-shares into its
share. Sums of zero polynomials leave the secret fixed while re-randomizing
everything else, so shares leaked before and after a renewal cannot be
combined. Each renewal increments an epoch counter and shares from
different epochs refuse to interpolate together.

Shareholders run either in-process or behind a length-prefixed TCP
protocol with messages PUT, GET, RESHARE_BEGIN, RESHARE_SUBSHARE,
RESHARE_COMMIT, RESHARE_ABORT, and SHUTDOWN.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
from dataclasses import dataclass
from pathlib import Path

from . import _kernels, encoding
from .rand import DEFAULT_RNG, ByteRng


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


class ShareError(RuntimeError):
    pass


class ShareholderUnavailableError(ShareError):
    pass


class EpochMismatchError(ShareError):
    pass


class UnknownNameError(KeyError):
    pass


@dataclass(frozen=True)
class Share:
    x: int
    y: bytes
    name: str = ""
    epoch: int = 0


@dataclass(frozen=True)
class SharingPolicy:
    n: int
    threshold: int
    addresses: tuple[str, ...] = ()

    def __post_init__(self):
        if not 1 <= self.threshold <= self.n <= 255:
            raise ValueError(f"invalid sharing policy: {self.threshold} of {self.n}")


def split(
    secret: bytes, n: int, threshold: int, rng: ByteRng = DEFAULT_RNG,
    *, name: str = "", epoch: int = 0,
) -> list[Share]:
    """Share ``secret`` into n points, any ``threshold`` of which recover it."""
    if not 1 <= threshold <= n <= 255:
        raise ValueError(f"invalid parameters: threshold {threshold}, n {n}")
    coeffs = [rng.randbytes(len(secret)) for _ in range(threshold - 1)]
    xs = bytes(range(1, n + 1))
    rows = _kernels.eval_shares(secret, coeffs, xs)
    return [Share(x, y, name, epoch) for x, y in zip(xs, rows)]


def reconstruct(shares: list[Share], threshold: int | None = None) -> bytes:
    """Byte-wise Lagrange interpolation at x=0."""
    if not shares:
        raise ShareError("no shares supplied")
    if threshold is not None and len(shares) < threshold:
        raise ShareError(f"need {threshold} shares, got {len(shares)}")
    names = {s.name for s in shares}
    if len(names) != 1:
        raise ShareError(f"shares for different names: {sorted(names)}")
    epochs = {s.epoch for s in shares}
    if len(epochs) != 1:
        raise EpochMismatchError(f"shares from mixed epochs: {sorted(epochs)}")
    lengths = {len(s.y) for s in shares}
    if len(lengths) != 1:
        raise ShareError("share rows of unequal length")
    xs = bytes(s.x for s in shares)
    if len(set(xs)) != len(xs):
        raise ShareError("duplicate share points")
    return _kernels.interpolate_at_zero(xs, [s.y for s in shares])


# ---------------------------------------------------------------------------
# Shareholders
# ---------------------------------------------------------------------------

class Shareholder:
    """One storage node: a database of (name -> epoch, share bytes).

    With ``store_dir`` set, every accepted mutation is appended to
    ``records.jsonl``; loading replays the log.
    """

    def __init__(self, x: int, store_dir: str | Path | None = None,
                 rng: ByteRng = DEFAULT_RNG):
        if not 1 <= x <= 255:
            raise ValueError("share point must be in [1, 255]")
        self.x = x
        self.rng = rng
        self.available = True
        self._records: dict[str, tuple[int, bytes]] = {}  # name -> (epoch, y)
        self._pending: dict[str, bytes] | None = None
        self._lock = threading.RLock()
        self._log = None
        if store_dir is not None:
            store_dir = Path(store_dir)
            store_dir.mkdir(parents=True, exist_ok=True)
            log_path = store_dir / "records.jsonl"
            if log_path.exists():
                self._replay(log_path)
            self._log = log_path.open("a")

    def _replay(self, path: Path) -> None:
        for line in path.read_text().splitlines():
            rec = json.loads(line)
            if rec["op"] == "put":
                self._records[rec["name"]] = (rec["epoch"], bytes.fromhex(rec["share"]))
            elif rec["op"] == "reshare":
                for name, share_hex in rec["shares"].items():
                    self._records[name] = (rec["epoch"], bytes.fromhex(share_hex))

    def _append(self, record: dict) -> None:
        if self._log is not None:
            self._log.write(json.dumps(record, sort_keys=True) + "\n")
            self._log.flush()

    def _check_up(self) -> None:
        if not self.available:
            raise ShareholderUnavailableError(f"shareholder {self.x} unreachable")

    def put(self, name: str, epoch: int, y: bytes, overwrite: bool = False) -> None:
        self._check_up()
        with self._lock:
            if name in self._records and not overwrite:
                raise ShareError(f"share already stored for {name!r}")
            self._records[name] = (epoch, y)
            self._append({"op": "put", "name": name, "epoch": epoch,
                          "x": self.x, "share": y.hex()})

    def get(self, name: str) -> tuple[int, int, bytes]:
        self._check_up()
        with self._lock:
            try:
                epoch, y = self._records[name]
            except KeyError:
                raise UnknownNameError(name) from None
            return epoch, self.x, y

    def names(self) -> list[str]:
        self._check_up()
        with self._lock:
            return list(self._records)

    # -- proactive renewal ---------------------------------------------------

    def begin_reshare(self, threshold: int, peer_xs: list[int]) -> dict[int, dict[str, bytes]]:
        """Deal zero-polynomial sub-shares for every stored name to every peer."""
        self._check_up()
        with self._lock:
            self._pending = {}
            out: dict[int, dict[str, bytes]] = {x: {} for x in peer_xs}
            xs = bytes(peer_xs)
            for name, (_epoch, y) in self._records.items():
                coeffs = [self.rng.randbytes(len(y)) for _ in range(threshold - 1)]
                rows = _kernels.eval_shares(bytes(len(y)), coeffs, xs)
                for x, row in zip(peer_xs, rows):
                    out[x][name] = row
            return out

    def receive_subshares(self, deltas: dict[str, bytes]) -> None:
        self._check_up()
        with self._lock:
            if self._pending is None:
                raise ShareError("no renewal in progress")
            for name, delta in deltas.items():
                if name not in self._records:
                    raise UnknownNameError(name)
                prev = self._pending.get(name)
                self._pending[name] = delta if prev is None else _xor(prev, delta)

    def commit_reshare(self, new_epoch: int) -> None:
        self._check_up()
        with self._lock:
            if self._pending is None:
                raise ShareError("no renewal in progress")
            shares = {}
            for name, (_epoch, y) in self._records.items():
                delta = self._pending.get(name)
                fresh = y if delta is None else _xor(y, delta)
                self._records[name] = (new_epoch, fresh)
                shares[name] = fresh.hex()
            self._pending = None
            self._append({"op": "reshare", "epoch": new_epoch, "shares": shares})

    def abort_reshare(self) -> None:
        with self._lock:
            self._pending = None

    def shutdown(self) -> None:
        with self._lock:
            self._records.clear()
            self._pending = None
            self.available = False
            if self._log is not None:
                self._log.close()
                self._log = None


# ---------------------------------------------------------------------------
# Wire protocol
# ---------------------------------------------------------------------------

def send_frame(sock: socket.socket, value: encoding.Value) -> None:
    payload = encoding.encode(value)
    sock.sendall(len(payload).to_bytes(4, "big") + payload)


def recv_frame(sock: socket.socket) -> encoding.Value:
    header = _recv_exact(sock, 4)
    length = int.from_bytes(header, "big")
    return encoding.decode(_recv_exact(sock, length))


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("peer closed connection")
        buf += chunk
    return buf


class ShareholderServer(socketserver.ThreadingTCPServer):
    """Serves one shareholder over the framed protocol."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, shareholder: Shareholder, host: str = "127.0.0.1", port: int = 0):
        self.shareholder = shareholder
        super().__init__((host, port), _ShareholderHandler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self.server_address
        return f"{host}:{port}"

    def start(self) -> "ShareholderServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()


class _ShareholderHandler(socketserver.BaseRequestHandler):
    def handle(self):
        sh: Shareholder = self.server.shareholder
        try:
            while True:
                request = recv_frame(self.request)
                if not isinstance(request, tuple) or not request:
                    send_frame(self.request, (b"ERR", b"ShareError", b"malformed request"))
                    continue
                op = bytes(request[0])
                try:
                    reply = self._dispatch(sh, op, request)
                except (ShareError, UnknownNameError, ValueError) as exc:
                    reply = (b"ERR", type(exc).__name__.encode(), str(exc).encode())
                send_frame(self.request, reply)
                if op == b"SHUTDOWN":
                    threading.Thread(target=self.server.stop, daemon=True).start()
                    return
        except (ConnectionError, OSError):
            return

    def _dispatch(self, sh: Shareholder, op: bytes, request: tuple) -> tuple:
        if op == b"PUT":
            _, name, epoch, flags, share = request
            sh.put(bytes(name).decode(), epoch, bytes(share), overwrite=bool(flags & 1))
            return (b"OK",)
        if op == b"GET":
            epoch, x, y = sh.get(bytes(request[1]).decode())
            return (b"OK", epoch, x, y)
        if op == b"RESHARE_BEGIN":
            _, threshold, peers = request
            dealt = sh.begin_reshare(threshold, [int(p) for p in peers])
            return (
                b"OK",
                tuple(
                    (x, tuple((n.encode(), d) for n, d in per_name.items()))
                    for x, per_name in dealt.items()
                ),
            )
        if op == b"RESHARE_SUBSHARE":
            deltas = {bytes(n).decode(): bytes(d) for n, d in request[1]}
            sh.receive_subshares(deltas)
            return (b"OK",)
        if op == b"RESHARE_COMMIT":
            sh.commit_reshare(request[1])
            return (b"OK",)
        if op == b"RESHARE_ABORT":
            sh.abort_reshare()
            return (b"OK",)
        if op == b"SHUTDOWN":
            sh.shutdown()
            return (b"OK",)
        raise ShareError(f"unknown op {op!r}")


class RemoteShareholder:
    """Client proxy speaking the framed protocol; one connection per call."""

    def __init__(self, x: int, address: str):
        self.x = x
        host, port = address.rsplit(":", 1)
        self._addr = (host, int(port))

    def _call(self, request: tuple) -> tuple:
        try:
            with socket.create_connection(self._addr, timeout=10) as sock:
                send_frame(sock, request)
                reply = recv_frame(sock)
        except (OSError, ConnectionError) as exc:
            raise ShareholderUnavailableError(f"shareholder {self.x}: {exc}") from exc
        if bytes(reply[0]) == b"ERR":
            kind = bytes(reply[1]).decode()
            message = bytes(reply[2]).decode()
            exc_type = {
                "UnknownNameError": UnknownNameError,
                "EpochMismatchError": EpochMismatchError,
                "ShareholderUnavailableError": ShareholderUnavailableError,
            }.get(kind, ShareError)
            raise exc_type(message)
        return reply

    def put(self, name: str, epoch: int, y: bytes, overwrite: bool = False) -> None:
        self._call((b"PUT", name.encode(), epoch, 1 if overwrite else 0, y))

    def get(self, name: str) -> tuple[int, int, bytes]:
        _, epoch, x, y = self._call((b"GET", name.encode()))
        return epoch, x, bytes(y)

    def begin_reshare(self, threshold: int, peer_xs: list[int]) -> dict[int, dict[str, bytes]]:
        reply = self._call((b"RESHARE_BEGIN", threshold, tuple(peer_xs)))
        return {
            int(x): {bytes(n).decode(): bytes(d) for n, d in per_name}
            for x, per_name in reply[1]
        }

    def receive_subshares(self, deltas: dict[str, bytes]) -> None:
        self._call((b"RESHARE_SUBSHARE", tuple((n.encode(), d) for n, d in deltas.items())))

    def commit_reshare(self, new_epoch: int) -> None:
        self._call((b"RESHARE_COMMIT", new_epoch))

    def abort_reshare(self) -> None:
        self._call((b"RESHARE_ABORT",))

    def shutdown(self) -> None:
        self._call((b"SHUTDOWN",))


# ---------------------------------------------------------------------------
# Data-owner orchestration
# ---------------------------------------------------------------------------

class ShareStore:
    """The data-owner side of the storage fabric.

    Writes require all N shareholders (keeps epochs uniform); reads succeed
    with any T. One renewal or migration at a time; per-store serialization
    is provided by the orchestrator lock.
    """

    def __init__(self, policy: SharingPolicy, shareholders: list, rng: ByteRng = DEFAULT_RNG):
        if len(shareholders) != policy.n:
            raise ValueError("shareholder count does not match policy")
        self.policy = policy
        self.shareholders = list(shareholders)
        self.rng = rng
        self.epoch = 0
        self._names: set[str] = set()
        self._lock = threading.RLock()

    def names(self) -> list[str]:
        return sorted(self._names)

    def remember_names(self, names) -> None:
        """Re-register stored names after reloading from persisted state."""
        self._names.update(names)

    def store_bytes(self, name: str, payload: bytes, overwrite: bool = False) -> None:
        with self._lock:
            shares = split(payload, self.policy.n, self.policy.threshold, self.rng)
            for holder, share in zip(self.shareholders, shares):
                holder.put(name, self.epoch, share.y, overwrite=overwrite)
            self._names.add(name)

    def store(self, name: str, value: encoding.Value, overwrite: bool = False) -> None:
        self.store_bytes(name, encoding.encode(value), overwrite=overwrite)

    def retrieve_bytes(self, name: str) -> bytes:
        with self._lock:
            collected: dict[int, list[Share]] = {}
            found = False
            for holder in self.shareholders:
                try:
                    epoch, x, y = holder.get(name)
                except ShareholderUnavailableError:
                    continue
                except UnknownNameError:
                    continue
                found = True
                collected.setdefault(epoch, []).append(Share(x, y, name, epoch))
                group = collected[epoch]
                if len(group) >= self.policy.threshold:
                    return reconstruct(group, self.policy.threshold)
            if not found:
                raise UnknownNameError(name)
            raise ShareholderUnavailableError(
                f"fewer than {self.policy.threshold} shareholders reachable for {name!r}"
            )

    def retrieve(self, name: str) -> encoding.Value:
        return encoding.decode(self.retrieve_bytes(name))

    def reshare(self) -> None:
        """Herzberg-style renewal run among the shareholders."""
        with self._lock:
            xs = [holder.x for holder in self.shareholders]
            by_x = {holder.x: holder for holder in self.shareholders}
            dealt = []
            try:
                for holder in self.shareholders:
                    dealt.append(holder.begin_reshare(self.policy.threshold, xs))
                totals: dict[int, dict[str, bytes]] = {x: {} for x in xs}
                for per_dealer in dealt:
                    for x, per_name in per_dealer.items():
                        bucket = totals[x]
                        for name, delta in per_name.items():
                            prev = bucket.get(name)
                            bucket[name] = delta if prev is None else _xor(prev, delta)
                for x, deltas in totals.items():
                    if deltas:
                        by_x[x].receive_subshares(deltas)
                for holder in self.shareholders:
                    holder.commit_reshare(self.epoch + 1)
            except ShareError:
                for holder in self.shareholders:
                    try:
                        holder.abort_reshare()
                    except ShareError:
                        pass
                raise
            self.epoch += 1

    def reshare_central(self) -> None:
        """Renewal carried out centrally: reconstruct and share afresh."""
        with self._lock:
            new_epoch = self.epoch + 1
            payloads = {name: self.retrieve_bytes(name) for name in sorted(self._names)}
            for name, payload in payloads.items():
                shares = split(payload, self.policy.n, self.policy.threshold, self.rng)
                for holder, share in zip(self.shareholders, shares):
                    holder.put(name, new_epoch, share.y, overwrite=True)
            self.epoch = new_epoch

    def shutdown(self) -> None:
        with self._lock:
            for holder in self.shareholders:
                holder.shutdown()
            self._names.clear()


def renew_sharing(old: ShareStore, new: ShareStore, names: list[str] | None = None) -> None:
    """Migrate every stored item to a new shareholder set, then retire the old.

    Any retrieval failure aborts before the old set is touched.
    """
    if names is None:
        names = old.names()
    payloads = {name: old.retrieve_bytes(name) for name in names}
    for name, payload in payloads.items():
        new.store_bytes(name, payload)
    old.shutdown()

import itertools

import pytest

from longstore.rand import DrbgRng
from longstore.sharing import (
    EpochMismatchError,
    RemoteShareholder,
    Share,
    ShareError,
    Shareholder,
    ShareholderServer,
    ShareholderUnavailableError,
    ShareStore,
    SharingPolicy,
    UnknownNameError,
    reconstruct,
    renew_sharing,
    split,
)


class ScriptedRng:
    """Returns queued byte strings; used to pin polynomial coefficients."""

    def __init__(self, chunks):
        self.chunks = list(chunks)

    def randbytes(self, n):
        chunk = self.chunks.pop(0)
        assert len(chunk) == n, f"expected request of {len(chunk)} bytes, got {n}"
        return chunk


def slow_gf_mul(a, b):
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        b >>= 1
    for bit in range(acc.bit_length() - 1, 7, -1):
        if acc >> bit & 1:
            acc ^= 0x11B << (bit - 8)
    return acc


class TestSplitReconstruct:
    def test_threshold_one_shares_equal_secret(self):
        secret = b"plain"
        for share in split(secret, 4, 1, DrbgRng("t1")):
            assert share.y == secret

    def test_hand_computed_two_of_two(self):
        # secret byte 0x2a, coefficient byte c: shares are (1, s^c), (2, s^mul(2,c))
        secret = bytes([0x2A])
        for c in (0x01, 0x53, 0xFE):
            shares = split(secret, 2, 2, ScriptedRng([bytes([c])]))
            assert shares[0] == Share(1, bytes([0x2A ^ c]))
            assert shares[1] == Share(2, bytes([0x2A ^ slow_gf_mul(2, c)]))
            assert reconstruct(shares, 2) == secret

    def test_all_subsets_reconstruct(self):
        rng = DrbgRng("subsets")
        for n in range(1, 6):
            for t in range(1, n + 1):
                secret = rng.randbytes(9)
                shares = split(secret, n, t, rng)
                for subset in itertools.combinations(shares, t):
                    assert reconstruct(list(subset), t) == secret

    def test_more_than_threshold_also_works(self):
        rng = DrbgRng("extra")
        secret = rng.randbytes(20)
        shares = split(secret, 5, 2, rng)
        assert reconstruct(shares, 2) == secret

    def test_too_few_shares(self):
        shares = split(b"secret", 4, 3, DrbgRng("few"))
        with pytest.raises(ShareError):
            reconstruct(shares[:2], 3)

    def test_mixed_epochs_rejected(self):
        shares = split(b"s", 3, 2, DrbgRng("epoch"))
        mixed = [shares[0], Share(shares[1].x, shares[1].y, shares[1].name, epoch=1)]
        with pytest.raises(EpochMismatchError):
            reconstruct(mixed, 2)

    def test_duplicate_points_rejected(self):
        shares = split(b"s", 3, 2, DrbgRng("dup"))
        with pytest.raises(ShareError):
            reconstruct([shares[0], shares[0]], 2)

    def test_mismatched_names_rejected(self):
        a = split(b"s", 2, 2, DrbgRng("na"), name="a")
        b = split(b"s", 2, 2, DrbgRng("nb"), name="b")
        with pytest.raises(ShareError):
            reconstruct([a[0], b[1]])

    def test_large_secret_round_trip(self):
        rng = DrbgRng("large")
        secret = rng.randbytes(4096)
        shares = split(secret, 5, 3, rng)
        assert reconstruct(shares[1:4], 3) == secret
        assert reconstruct(shares, 3) == secret

    def test_zero_length_secret(self):
        shares = split(b"", 3, 2, DrbgRng("zero"))
        assert all(share.y == b"" for share in shares)
        assert reconstruct(shares[:2], 2) == b""

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            split(b"s", 2, 3)
        with pytest.raises(ValueError):
            split(b"s", 256, 2)
        with pytest.raises(ValueError):
            SharingPolicy(2, 3)

    def test_partial_views_leak_nothing_exhaustively(self):
        """T-1 views for 1-byte secrets are identically distributed.

        With threshold 2 of 2, enumerate all 256 coefficient values: each
        shareholder's view multiset must be exactly the full byte range for
        both secrets, so the statistical distance is exactly zero.
        """
        for x in (1, 2):
            views = {}
            for secret in (0x00, 0xFF):
                multiset = sorted(
                    split(bytes([secret]), 2, 2, ScriptedRng([bytes([c])]))[x - 1].y[0]
                    for c in range(256)
                )
                views[secret] = multiset
            assert views[0x00] == views[0xFF] == list(range(256))

    def test_cross_epoch_interpolation_gives_wrong_secret(self):
        """The epoch guard exists because mixing epochs silently corrupts."""
        rng = DrbgRng("cross")
        secret = rng.randbytes(16)
        holders = [Shareholder(i, rng=rng) for i in (1, 2, 3)]
        store = ShareStore(SharingPolicy(3, 2), holders, rng)
        store.store_bytes("item", secret)
        old_share = Share(*(holders[0].get("item")[1], holders[0].get("item")[2]))
        store.reshare()
        new_epoch, x2, y2 = holders[1].get("item")
        forced = [
            Share(old_share.x, old_share.y, "item", epoch=new_epoch),  # stale share
            Share(x2, y2, "item", epoch=new_epoch),
        ]
        assert reconstruct(forced, 2) != secret


class TestShareholderStore:
    def test_put_get_overwrite(self):
        holder = Shareholder(1)
        holder.put("a", 0, b"\x01")
        assert holder.get("a") == (0, 1, b"\x01")
        with pytest.raises(ShareError):
            holder.put("a", 0, b"\x02")
        holder.put("a", 0, b"\x02", overwrite=True)
        assert holder.get("a")[2] == b"\x02"
        with pytest.raises(UnknownNameError):
            holder.get("missing")

    def test_persistence_replay(self, tmp_path):
        holder = Shareholder(2, tmp_path / "sh")
        holder.put("a", 0, b"\x10")
        holder.put("b", 0, b"\x20")
        holder._pending = {}
        holder.receive_subshares({"a": b"\x01", "b": b"\x02"})
        holder.commit_reshare(1)
        reloaded = Shareholder(2, tmp_path / "sh")
        assert reloaded.get("a") == (1, 2, b"\x11")
        assert reloaded.get("b") == (1, 2, b"\x22")

    def test_log_is_append_only(self, tmp_path):
        holder = Shareholder(1, tmp_path / "sh")
        holder.put("a", 0, b"\x01")
        size_one = (tmp_path / "sh" / "records.jsonl").stat().st_size
        holder.put("b", 0, b"\x02")
        assert (tmp_path / "sh" / "records.jsonl").stat().st_size > size_one


def make_store(n=4, t=3, seed="fabric", dirs=None):
    rng = DrbgRng(seed)
    dirs = dirs or [None] * n
    holders = [Shareholder(i + 1, dirs[i], rng) for i in range(n)]
    return ShareStore(SharingPolicy(n, t), holders, rng), holders


class TestShareStore:
    def test_store_retrieve(self):
        store, _ = make_store()
        store.store("name", (b"payload", 3))
        assert store.retrieve("name") == (b"payload", 3)

    def test_duplicate_store_requires_overwrite(self):
        store, _ = make_store()
        store.store("name", b"one")
        with pytest.raises(ShareError):
            store.store("name", b"two")
        store.store("name", b"two", overwrite=True)
        assert store.retrieve("name") == b"two"

    def test_write_requires_all_shareholders(self):
        store, holders = make_store()
        holders[3].available = False
        with pytest.raises(ShareholderUnavailableError):
            store.store("name", b"payload")

    def test_read_requires_threshold(self):
        store, holders = make_store(4, 3)
        store.store("name", b"payload")
        holders[0].available = False
        assert store.retrieve("name") == b"payload"  # 3 of 4 reachable
        holders[1].available = False
        with pytest.raises(ShareholderUnavailableError):
            store.retrieve("name")

    def test_unknown_name(self):
        store, _ = make_store()
        with pytest.raises(UnknownNameError):
            store.retrieve("missing")

    @pytest.mark.parametrize("central", [False, True])
    def test_renewal_preserves_secrets(self, central):
        store, holders = make_store(seed=f"renew-{central}")
        payloads = {f"n{i}": DrbgRng(f"p{i}").randbytes(50 + i) for i in range(5)}
        for name, payload in payloads.items():
            store.store_bytes(name, payload)
        before = {name: holders[0].get(name) for name in payloads}
        if central:
            store.reshare_central()
        else:
            store.reshare()
        assert store.epoch == 1
        for name, payload in payloads.items():
            assert store.retrieve_bytes(name) == payload
            epoch, _, y = holders[0].get(name)
            assert epoch == 1
        # run a second renewal for good measure
        store.reshare()
        assert store.epoch == 2
        for name, payload in payloads.items():
            assert store.retrieve_bytes(name) == payload

    def test_renewal_changes_share_bytes(self):
        store, holders = make_store(seed="delta")
        names = [f"n{i}" for i in range(100)]
        for name in names:
            store.store_bytes(name, DrbgRng("pay" + name).randbytes(24))
        before = {name: holders[0].get(name)[2] for name in names}
        store.reshare()
        changed = sum(holders[0].get(name)[2] != before[name] for name in names)
        assert changed == len(names)

    def test_renewal_aborts_when_shareholder_down(self):
        store, holders = make_store()
        store.store_bytes("item", b"payload-bytes")
        snapshot = [h.get("item") for h in holders]
        holders[2].available = False
        with pytest.raises(ShareholderUnavailableError):
            store.reshare()
        assert store.epoch == 0
        holders[2].available = True
        assert [h.get("item") for h in holders] == snapshot
        assert store.retrieve_bytes("item") == b"payload-bytes"

    def test_migration(self):
        old, _ = make_store(4, 3, seed="old")
        payloads = {f"n{i}": bytes([i]) * 10 for i in range(6)}
        for name, payload in payloads.items():
            old.store_bytes(name, payload)
        rng = DrbgRng("new")
        new_holders = [Shareholder(i, rng=rng) for i in range(1, 6)]
        new = ShareStore(SharingPolicy(5, 3), new_holders, rng)
        renew_sharing(old, new)
        for name, payload in payloads.items():
            assert new.retrieve_bytes(name) == payload
        # old set is shut down and unreachable
        with pytest.raises((ShareholderUnavailableError, UnknownNameError)):
            old.retrieve_bytes("n0")

    def test_migration_abort_leaves_old_intact(self):
        old, holders = make_store(4, 3, seed="abort")
        old.store_bytes("good", b"fine")
        rng = DrbgRng("new2")
        new = ShareStore(SharingPolicy(3, 2), [Shareholder(i, rng=rng) for i in (1, 2, 3)], rng)
        with pytest.raises(UnknownNameError):
            renew_sharing(old, new, names=["good", "missing"])
        assert old.retrieve_bytes("good") == b"fine"


class TestNetworkedShareholders:
    @pytest.fixture
    def cluster(self):
        rng = DrbgRng("net")
        locals_ = [Shareholder(i, rng=rng) for i in (1, 2, 3)]
        servers = [ShareholderServer(sh).start() for sh in locals_]
        proxies = [
            RemoteShareholder(sh.x, server.address)
            for sh, server in zip(locals_, servers)
        ]
        yield locals_, servers, proxies
        for server in servers:
            try:
                server.stop()
            except Exception:
                pass

    def test_put_get_over_socket(self, cluster):
        _, _, proxies = cluster
        proxies[0].put("name", 0, b"\xaa\xbb")
        assert proxies[0].get("name") == (0, 1, b"\xaa\xbb")
        with pytest.raises(ShareError):
            proxies[0].put("name", 0, b"\xcc")
        proxies[0].put("name", 0, b"\xcc", overwrite=True)
        with pytest.raises(UnknownNameError):
            proxies[1].get("name")  # other shareholder, nothing stored

    def test_full_fabric_over_sockets(self, cluster):
        _, _, proxies = cluster
        rng = DrbgRng("net-fabric")
        store = ShareStore(SharingPolicy(3, 2), proxies, rng)
        payload = rng.randbytes(64)
        store.store_bytes("item", payload)
        assert store.retrieve_bytes("item") == payload
        store.reshare()
        assert store.epoch == 1
        assert store.retrieve_bytes("item") == payload

    def test_reshare_abort_over_sockets(self, cluster):
        locals_, servers, proxies = cluster
        rng = DrbgRng("net-abort")
        store = ShareStore(SharingPolicy(3, 2), proxies, rng)
        store.store_bytes("item", b"payload")
        servers[2].stop()
        with pytest.raises(ShareholderUnavailableError):
            store.reshare()
        assert store.epoch == 0
        # remaining shareholders still serve reads at the old epoch
        assert store.retrieve_bytes("item") == b"payload"

    def test_shutdown_over_socket(self, cluster):
        locals_, _, proxies = cluster
        proxies[1].put("n", 0, b"\x01")
        proxies[1].shutdown()
        assert not locals_[1].available

    def test_unreachable_peer_raises(self):
        proxy = RemoteShareholder(1, "127.0.0.1:1")  # nothing listens there
        with pytest.raises(ShareholderUnavailableError):
            proxy.get("x")

"""Compressed-timeline simulator and the kernel benchmark.

The simulator drives the logical clock through a schedule of stores,
timestamp renewals, commitment renewals, and share renewals, with one
scheme rotation mid-run, and measures exact token counts and persisted
byte sizes. Two modes share the schedule:

* ``elsa``  : batched protection: one commitment and one timestamp per
  event, regardless of how many items are covered.
* ``baseline``: per-item protection: every item carries its own
  commitment and timestamp and every renewal touches every item.

Token counts follow closed forms computed from the schedule, so a run can
be checked exactly: batched mode spends stores + renewals tokens; per-item
mode spends one token per covered item per event.

Wall-clock numbers depend on hardware and are reported for information
only; counts and byte-scaling ratios are the assertable outputs.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

from . import _kernels, client
from .client import Archive
from .encoding import LogicalClock
from .rand import DrbgRng
from .sharing import SharingPolicy


@dataclass(frozen=True)
class RotationRow:
    from_epoch: int
    sig: str  # "ed25519" | "fts-sha256"
    hiding: str  # hiding vector-commitment descriptor
    merkle: str  # renewal tree descriptor


DEFAULT_ROTATION = (
    RotationRow(0, "ed25519", "hiding-hm-256", "merkle-sha256"),
    RotationRow(11, "fts-sha256", "hiding-hm-512", "merkle-sha512"),
)


@dataclass(frozen=True)
class Schedule:
    horizon: int = 20
    items_per_epoch: int = 12
    item_size: int = 1024
    ts_renew_period: int = 2
    com_renew_period: int = 10
    reshare_period: int = 5
    shareholders: int = 4
    threshold: int = 3
    store_until: int | None = None  # stores stop after this epoch; None = horizon
    skip_ts_renewals: frozenset[int] = frozenset()
    rotation: tuple[RotationRow, ...] = DEFAULT_ROTATION

    @property
    def last_store_epoch(self) -> int:
        return self.horizon if self.store_until is None else self.store_until

    def validate(self) -> None:
        if self.horizon < 1 or self.items_per_epoch < 1 or self.item_size < 0:
            raise ValueError("degenerate schedule")
        if not self.rotation or self.rotation[0].from_epoch > 1:
            raise ValueError("rotation must cover the first epoch")
        froms = [row.from_epoch for row in self.rotation]
        if froms != sorted(froms) or len(set(froms)) != len(froms):
            raise ValueError("rotation rows must have increasing from_epoch")
        # every scheme instance must be rotated away before its breakage time
        for i in range(len(self.rotation)):
            if self.rotation[i].from_epoch > self.horizon:
                continue
            end = self._row_end(i)
            if self._sig_breakage(i) <= end - 1:
                raise ValueError("signature scheme would break while still in use")

    # -- instance windows ------------------------------------------------------

    def _row_end(self, i: int) -> int:
        """First epoch no longer covered by row i."""
        if i + 1 < len(self.rotation):
            return self.rotation[i + 1].from_epoch
        return self.horizon + 1

    def _sig_breakage(self, i: int) -> int:
        return self._row_end(i) + self.ts_renew_period

    def _hiding_breakage(self, i: int) -> int:
        period = self.com_renew_period or (self.horizon + 1)
        return self._row_end(i) + period

    def row_at(self, epoch: int) -> int:
        active = 0
        for i, row in enumerate(self.rotation):
            if row.from_epoch <= epoch:
                active = i
        return active

    # -- per-epoch op predicates ----------------------------------------------

    def stores_at(self, epoch: int) -> int:
        return self.items_per_epoch if epoch <= self.last_store_epoch else 0

    def ts_renew_at(self, epoch: int) -> bool:
        return (
            self.ts_renew_period > 0
            and epoch % self.ts_renew_period == 0
            and epoch not in self.skip_ts_renewals
        )

    def com_renew_at(self, epoch: int) -> bool:
        return self.com_renew_period > 0 and epoch % self.com_renew_period == 0

    def reshare_at(self, epoch: int) -> bool:
        return self.reshare_period > 0 and epoch % self.reshare_period == 0

    # -- closed forms -----------------------------------------------------------

    def expected_tokens(self, mode: str) -> int:
        """Exact number of timestamp tokens the schedule will spend."""
        stored = 0
        total = 0
        for epoch in range(1, self.horizon + 1):
            fresh = self.stores_at(epoch)
            if fresh:
                total += 1 if mode == "elsa" else fresh
                stored += fresh
            if self.ts_renew_at(epoch) and stored:
                total += 1 if mode == "elsa" else stored
            if self.com_renew_at(epoch) and stored:
                total += 1 if mode == "elsa" else stored
        return total

    def _row_stamp_budget(self, i: int, mode: str) -> int:
        """Tokens the row's timestamp service must be able to issue."""
        stored = 0
        total = 0
        for epoch in range(1, self.horizon + 1):
            fresh = self.stores_at(epoch)
            stored += fresh
            if self.row_at(epoch) != i:
                continue
            if fresh:
                total += 1 if mode == "elsa" else fresh
            if self.ts_renew_at(epoch) and stored:
                total += 1 if mode == "elsa" else stored
            if self.com_renew_at(epoch) and stored:
                total += 1 if mode == "elsa" else stored
        return total

    def _row_file_signatures(self, i: int) -> int:
        return sum(
            self.stores_at(e)
            for e in range(1, self.horizon + 1)
            if self.row_at(e) == i
        )


@dataclass
class MetricsReport:
    mode: str
    seed: str
    backend: str
    tokens_issued: int
    tokens_expected: int
    evidence_lists_bytes: int
    evidence_index_bytes: int
    shareholder_bytes: int
    items_stored: int
    verify_pass: int
    verify_fail: int
    final_verify_pass: int
    final_verify_fail: int
    phase_seconds: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def table(self) -> str:
        rows = [
            ("mode", self.mode),
            ("kernel backend", self.backend),
            ("items stored", self.items_stored),
            ("timestamp tokens issued", self.tokens_issued),
            ("timestamp tokens expected", self.tokens_expected),
            ("evidence service bytes (lists)", self.evidence_lists_bytes),
            ("evidence service bytes (index)", self.evidence_index_bytes),
            ("per-shareholder bytes", self.shareholder_bytes),
            ("scheduled verifications pass/fail", f"{self.verify_pass}/{self.verify_fail}"),
            ("final sweep pass/fail", f"{self.final_verify_pass}/{self.final_verify_fail}"),
        ]
        width = max(len(label) for label, _ in rows)
        lines = [f"{label:<{width}}  {value}" for label, value in rows]
        lines.append("phase seconds:")
        for phase, seconds in sorted(self.phase_seconds.items()):
            lines.append(f"  {phase:<{width - 2}}  {seconds:.3f}")
        return "\n".join(lines)


def _fts_height(budget: int) -> int:
    height = max(2, (max(budget, 1) - 1).bit_length() + 1)
    return min(height, 16)


def _sig_descriptor(base: str, budget: int) -> str:
    if base == "ed25519":
        return "ed25519"
    if base == "fts-sha256":
        return f"fts-sha256-h{_fts_height(budget)}"
    raise ValueError(f"unknown signature family: {base}")


def _dir_bytes(path: Path) -> int:
    return sum(p.stat().st_size for p in path.rglob("*") if p.is_file())


def build_archive(schedule: Schedule, mode: str, seed: str, state_dir: Path) -> Archive:
    """Archive with one scheme-instance set per rotation row."""
    rng = DrbgRng(f"{seed}/{mode}")
    policy = SharingPolicy(schedule.shareholders, schedule.threshold)
    sh_dirs = [state_dir / f"shareholder-{i}" for i in range(1, policy.n + 1)]
    archive = Archive.create_local(
        policy, rng=rng, clock=LogicalClock(), shareholder_dirs=sh_dirs
    )
    total_items = schedule.items_per_epoch * schedule.last_store_epoch
    for i, row in enumerate(schedule.rotation):
        if row.from_epoch > schedule.horizon:
            continue  # rotation never reached within this run
        sig_budget = schedule._row_file_signatures(i)
        ts_budget = schedule._row_stamp_budget(i, mode)
        valid_from = row.from_epoch
        archive.register_signature_scheme(
            f"sig-r{i}", _sig_descriptor(row.sig, sig_budget),
            valid_from, schedule._sig_breakage(i),
        )
        archive.register_timestamp_scheme(
            f"ts-r{i}", _sig_descriptor(row.sig, ts_budget),
            valid_from, schedule._sig_breakage(i),
        )
        archive.register_vc_scheme(
            f"vc-data-r{i}", row.hiding, total_items + 8,
            valid_from, schedule._hiding_breakage(i),
        )
        archive.register_vc_scheme(
            f"vc-renew-r{i}", row.merkle, total_items + 8,
            valid_from, schedule._sig_breakage(i),
        )
    return archive


def simulate(schedule: Schedule, mode: str = "elsa", seed: str = "0",
             state_dir: str | Path | None = None) -> MetricsReport:
    """Run the schedule and measure counts, bytes, and phase timings."""
    if mode not in ("elsa", "baseline"):
        raise ValueError(f"unknown mode: {mode}")
    schedule.validate()

    import tempfile

    cleanup = None
    if state_dir is None:
        cleanup = tempfile.TemporaryDirectory(prefix="longstore-sim-")
        state_dir = Path(cleanup.name)
    else:
        state_dir = Path(state_dir)
        state_dir.mkdir(parents=True, exist_ok=True)

    try:
        archive = build_archive(schedule, mode, seed, state_dir)
        data_rng = DrbgRng(f"{seed}/{mode}/data")
        phases: dict[str, float] = {}
        verify_pass = verify_fail = 0
        store_epoch_names: dict[int, list[str]] = {}
        datasets: dict[str, bytes] = {}

        def timed(phase: str, fn, *args, **kwargs):
            start = time.perf_counter()
            result = fn(*args, **kwargs)
            phases[phase] = phases.get(phase, 0.0) + time.perf_counter() - start
            return result

        for epoch in range(1, schedule.horizon + 1):
            archive.clock.advance(epoch)
            row = schedule.row_at(epoch)
            sig_id, ts_id = f"sig-r{row}", f"ts-r{row}"
            vc_data, vc_renew = f"vc-data-r{row}", f"vc-renew-r{row}"

            fresh = schedule.stores_at(epoch)
            if fresh:
                files = [
                    (f"item-{epoch:03d}-{j:02d}", data_rng.randbytes(schedule.item_size))
                    for j in range(fresh)
                ]
                store_epoch_names[epoch] = [name for name, _ in files]
                datasets.update(files)
                if mode == "elsa":
                    timed("store", archive.store, files, sig_id, vc_data, ts_id)
                else:
                    for item in files:
                        timed("store", archive.store, [item], sig_id, vc_data, ts_id)

            if schedule.ts_renew_at(epoch) and archive.names():
                timed("renew_ts", archive.renew_ts, vc_renew, ts_id,
                      per_item=(mode == "baseline"))
            if schedule.com_renew_at(epoch) and archive.names():
                timed("renew_com", archive.renew_com, vc_data, ts_id,
                      per_item=(mode == "baseline"))
            if schedule.reshare_at(epoch) and archive.names():
                timed("renew_shares", archive.renew_shares)

            for past in range(1, epoch):
                if past not in store_epoch_names:
                    continue
                name = store_epoch_names[past][0]
                rf = timed("retrieve", archive.retrieve, name)
                ok = timed(
                    "verify", client.verify,
                    archive.pki, epoch, rf.dat, rf.t_store, rf.bundle,
                )
                if ok:
                    verify_pass += 1
                else:
                    verify_fail += 1

        final_pass = final_fail = 0
        for name in archive.names():
            rf = archive.retrieve(name)
            ok = client.verify(archive.pki, schedule.horizon, rf.dat, rf.t_store, rf.bundle)
            if rf.dat != datasets[name]:
                ok = False
            if ok:
                final_pass += 1
            else:
                final_fail += 1

        es_dir = state_dir / "evidence-service"
        archive.es.save(es_dir)
        lists_bytes = _dir_bytes(es_dir / "lists")
        index_bytes = (es_dir / "index.json").stat().st_size
        shareholder_bytes = _dir_bytes(state_dir / "shareholder-1")

        return MetricsReport(
            mode=mode,
            seed=seed,
            backend=_kernels.BACKEND,
            tokens_issued=archive.tokens_issued(),
            tokens_expected=schedule.expected_tokens(mode),
            evidence_lists_bytes=lists_bytes,
            evidence_index_bytes=index_bytes,
            shareholder_bytes=shareholder_bytes,
            items_stored=len(archive.names()),
            verify_pass=verify_pass,
            verify_fail=verify_fail,
            final_verify_pass=final_pass,
            final_verify_fail=final_fail,
            phase_seconds=phases,
        )
    finally:
        if cleanup is not None:
            cleanup.cleanup()


# ---------------------------------------------------------------------------
# Kernel benchmark
# ---------------------------------------------------------------------------

def benchmark_kernels(size_kib: int = 256, shares: int = 4, threshold: int = 3,
                      repeats: int = 3) -> dict:
    """Throughput of share evaluation and reconstruction per backend."""
    from ._kernels import pure

    backends = {"pure": pure}
    try:
        from ._kernels import _gf256

        backends["cython"] = _gf256
    except ImportError:
        pass

    rng = DrbgRng("bench-kernels")
    secret = rng.randbytes(size_kib * 1024)
    coeffs = [rng.randbytes(len(secret)) for _ in range(threshold - 1)]
    xs = bytes(range(1, shares + 1))

    results: dict = {"size_kib": size_kib, "shares": shares, "threshold": threshold,
                     "backends": {}}
    reference = None
    for name, impl in backends.items():
        best_eval = best_interp = float("inf")
        rows = None
        for _ in range(repeats):
            start = time.perf_counter()
            rows = impl.eval_shares(secret, coeffs, xs)
            best_eval = min(best_eval, time.perf_counter() - start)
        subset_xs = xs[:threshold]
        subset_rows = rows[:threshold]
        recovered = None
        for _ in range(repeats):
            start = time.perf_counter()
            recovered = impl.interpolate_at_zero(subset_xs, subset_rows)
            best_interp = min(best_interp, time.perf_counter() - start)
        if recovered != secret:
            raise AssertionError(f"backend {name} failed round-trip")
        if reference is None:
            reference = rows
        elif rows != reference:
            raise AssertionError("backends disagree on share evaluation")
        mib = size_kib / 1024
        results["backends"][name] = {
            "eval_seconds": best_eval,
            "eval_mib_per_s": mib * shares / best_eval if best_eval else float("inf"),
            "interpolate_seconds": best_interp,
            "interpolate_mib_per_s": mib / best_interp if best_interp else float("inf"),
        }
    return results

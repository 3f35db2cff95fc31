"""Command-line interface.

All archive commands work against a state directory named by a JSON config
file, e.g. ``{"state_dir": "archive-state", "shareholders": 4,
"threshold": 3}``. Time is the archive's logical clock: pass ``--at T`` to
advance it before an operation (requests to move backwards are ignored).

Exit codes: 0 success / verification passed, 1 operation or verification
failure, 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, client
from .client import Archive
from .encoding import LogicalClock
from .evidence import EvidenceService
from .sharing import Shareholder, ShareStore, SharingPolicy
from .signatures import PkiRegistry, SignatureKeyPair
from .timestamping import TimestampService


class CliError(RuntimeError):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


def _load_config(path: str) -> dict:
    try:
        config = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}", 2) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file is not valid JSON: {exc}", 2) from None
    if "state_dir" not in config:
        raise CliError("config must name a state_dir", 2)
    return config


class ArchiveState:
    """Filesystem-backed archive: pki.json, clock, keys.json, es/, sh/."""

    def __init__(self, config: dict, archive: Archive, state_dir: Path):
        self.config = config
        self.archive = archive
        self.state_dir = state_dir

    @classmethod
    def init(cls, config: dict, force: bool = False) -> "ArchiveState":
        state_dir = Path(config["state_dir"])
        if (state_dir / "pki.json").exists() and not force:
            raise CliError(
                f"state already initialized at {state_dir}; use --force to reset", 1
            )
        if state_dir.exists() and force:
            import shutil

            shutil.rmtree(state_dir)
        state_dir.mkdir(parents=True, exist_ok=True)
        policy = SharingPolicy(config.get("shareholders", 4), config.get("threshold", 3))
        sharing_meta = {
            "n": policy.n,
            "threshold": policy.threshold,
            "dirs": [f"sh/{i}" for i in range(1, policy.n + 1)],
            "epoch": 0,
        }
        (state_dir / "sharing.json").write_text(json.dumps(sharing_meta, indent=2))
        archive = Archive.create_local(
            policy,
            clock=LogicalClock(),
            shareholder_dirs=[state_dir / d for d in sharing_meta["dirs"]],
        )
        state = cls(config, archive, state_dir)
        state.save()
        return state

    @classmethod
    def load(cls, config: dict) -> "ArchiveState":
        state_dir = Path(config["state_dir"])
        if not (state_dir / "pki.json").exists():
            raise CliError(f"no archive state at {state_dir}; run init first", 2)
        pki = PkiRegistry.load(state_dir / "pki.json")
        clock = LogicalClock(int((state_dir / "clock").read_text()))
        sharing_meta = json.loads((state_dir / "sharing.json").read_text())
        policy = SharingPolicy(sharing_meta["n"], sharing_meta["threshold"])
        holders = [
            Shareholder(i + 1, state_dir / d)
            for i, d in enumerate(sharing_meta["dirs"])
        ]
        store = ShareStore(policy, holders)
        store.epoch = sharing_meta["epoch"]
        es_dir = state_dir / "es"
        if (es_dir / "index.json").exists():
            es = EvidenceService.load(es_dir, pki)
        else:
            es = EvidenceService(pki)
        archive = Archive(policy, store, es, pki, clock, known_names=es.names())
        share_names = []
        for name in es.names():
            share_names.append(f"data/{name}")
            for idx, entry in enumerate(es.get_evidence(name)):
                if entry.com is not None:
                    share_names.append(f"decom/{name}/{idx}")
        store.remember_names(share_names)

        keys = json.loads((state_dir / "keys.json").read_text())
        for scheme_id, row in keys.get("signers", {}).items():
            archive.signers[scheme_id] = _keypair_from_row(row)
        for scheme_id, row in keys.get("ts", {}).items():
            keypair = _keypair_from_row(row)
            service = TimestampService(scheme_id, keypair, clock, pki)
            archive.ts_services[scheme_id] = service
            es.ts_services[scheme_id] = service
        return cls(config, archive, state_dir)

    def save(self) -> None:
        archive = self.archive
        (self.state_dir / "clock").write_text(str(archive.clock.now))
        archive.pki.save(self.state_dir / "pki.json")
        keys = {
            "signers": {sid: _keypair_to_row(kp) for sid, kp in archive.signers.items()},
            "ts": {
                sid: _keypair_to_row(svc.keypair)
                for sid, svc in archive.ts_services.items()
            },
        }
        (self.state_dir / "keys.json").write_text(json.dumps(keys, indent=2, sort_keys=True))
        sharing_path = self.state_dir / "sharing.json"
        sharing_meta = json.loads(sharing_path.read_text())
        sharing_meta["epoch"] = archive.share_store.epoch
        sharing_meta["n"] = archive.policy.n
        sharing_meta["threshold"] = archive.policy.threshold
        sharing_path.write_text(json.dumps(sharing_meta, indent=2))
        archive.es.save(self.state_dir / "es")


def _keypair_to_row(keypair: SignatureKeyPair) -> dict:
    return {
        "descriptor": keypair.descriptor,
        "secret": keypair.secret_key.hex(),
        "public": keypair.public_key.hex(),
        "next_leaf": keypair._next_leaf,
    }


def _keypair_from_row(row: dict) -> SignatureKeyPair:
    remaining = None
    if row["descriptor"].startswith("fts-"):
        height = int(row["descriptor"].rsplit("h", 1)[1])
        remaining = (1 << height) - row["next_leaf"]
    return SignatureKeyPair(
        row["descriptor"],
        bytes.fromhex(row["secret"]),
        bytes.fromhex(row["public"]),
        signatures_remaining=remaining,
        _next_leaf=row["next_leaf"],
    )


def _open(args) -> ArchiveState:
    state = ArchiveState.load(_load_config(args.config))
    if getattr(args, "at", None) is not None:
        state.archive.clock.advance(args.at)
    return state


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_init(args) -> int:
    state = ArchiveState.init(_load_config(args.config), force=args.force)
    print(f"initialized archive state at {state.state_dir}")
    return 0


def cmd_add_scheme(args) -> int:
    state = _open(args)
    archive = state.archive
    if args.kind == "signature":
        archive.register_signature_scheme(args.scheme_id, args.descriptor,
                                          args.valid_from, args.t_b)
    elif args.kind == "timestamp":
        archive.register_timestamp_scheme(args.scheme_id, args.descriptor,
                                          args.valid_from, args.t_b)
    elif args.kind == "vector-commitment":
        archive.register_vc_scheme(args.scheme_id, args.descriptor, args.max_length,
                                   args.valid_from, args.t_b)
    else:
        raise CliError(f"unknown scheme kind {args.kind}", 2)
    state.save()
    print(f"registered {args.kind} scheme {args.scheme_id} ({args.descriptor})")
    return 0


def cmd_store(args) -> int:
    state = _open(args)
    files = []
    for path in args.files:
        p = Path(path)
        if not p.exists():
            raise CliError(f"no such file: {path}", 1)
        files.append((p.name, p.read_bytes()))
    state.archive.store(files, args.sig, args.vc, args.ts,
                        sign_commitment=args.sign_commitment)
    state.save()
    print(f"stored {len(files)} file(s) at time {state.archive.clock.now}")
    return 0


def cmd_retrieve(args) -> int:
    state = _open(args)
    rf = state.archive.retrieve(args.name)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / args.name).write_bytes(rf.dat)
    (out / f"{args.name}.evidence").write_bytes(rf.bundle.to_bytes(rf.dat))
    state.save()
    print(f"retrieved {args.name} (stored at time {rf.t_store}, "
          f"{len(rf.bundle.entries)} evidence entries)")
    return 0


def cmd_verify(args) -> int:
    if args.pki:
        pki = PkiRegistry.load(args.pki)
        now = args.at if args.at is not None else 0
    else:
        if not args.config:
            raise CliError("verify needs --pki or --config", 2)
        state = _open(args)
        pki = state.archive.pki
        now = state.archive.clock.now
    dat = Path(args.data).read_bytes()
    bundle_bytes = Path(args.bundle).read_bytes()
    ok = client.verify_bundle_file(pki, now, dat, bundle_bytes, args.t_store)
    print(f"verify at time {now}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_renew_ts(args) -> int:
    state = _open(args)
    count = state.archive.renew_ts(args.vc, args.ts)
    state.save()
    print(f"timestamp renewal issued {count} token(s) at time {state.archive.clock.now}")
    return 0


def cmd_renew_com(args) -> int:
    state = _open(args)
    state.archive.renew_com(args.vc, args.ts)
    state.save()
    print(f"commitment renewal completed at time {state.archive.clock.now}")
    return 0


def cmd_renew_shares(args) -> int:
    state = _open(args)
    state.archive.renew_shares(central=args.central)
    state.save()
    print(f"share renewal completed (epoch {state.archive.share_store.epoch})")
    return 0


def cmd_migrate_sharing(args) -> int:
    state = _open(args)
    new_policy = SharingPolicy(args.shareholders, args.threshold)
    generation = 1
    while (state.state_dir / f"sh-gen{generation}").exists():
        generation += 1
    rel_dirs = [f"sh-gen{generation}/{i}" for i in range(1, new_policy.n + 1)]
    holders = [
        Shareholder(i + 1, state.state_dir / d) for i, d in enumerate(rel_dirs)
    ]
    state.archive.renew_sharing(new_policy, holders)
    sharing_path = state.state_dir / "sharing.json"
    sharing_meta = json.loads(sharing_path.read_text())
    sharing_meta.update({"n": new_policy.n, "threshold": new_policy.threshold,
                         "dirs": rel_dirs, "epoch": 0})
    sharing_path.write_text(json.dumps(sharing_meta, indent=2))
    state.save()
    print(f"migrated to {new_policy.n} shareholders (threshold {new_policy.threshold})")
    return 0


def _schedule_from_json(path: str) -> "bench.Schedule":
    raw = json.loads(Path(path).read_text())
    if "rotation" in raw:
        raw["rotation"] = tuple(
            bench.RotationRow(
                row["from_epoch"], row["sig"], row["hiding"], row["merkle"]
            )
            for row in raw["rotation"]
        )
    if "skip_ts_renewals" in raw:
        raw["skip_ts_renewals"] = frozenset(raw["skip_ts_renewals"])
    return bench.Schedule(**raw)


def cmd_simulate(args) -> int:
    if args.schedule:
        schedule = _schedule_from_json(args.schedule)
    else:
        schedule = bench.Schedule(
            horizon=args.horizon,
            items_per_epoch=args.items_per_epoch,
            item_size=args.item_size,
            ts_renew_period=args.ts_renew_period,
            com_renew_period=args.com_renew_period,
            reshare_period=args.reshare_period,
            rotation=bench.DEFAULT_ROTATION,
        )
    report = bench.simulate(schedule, args.mode, seed=args.seed)
    print(report.table())
    if args.report:
        Path(args.report).write_text(report.to_json())
        print(f"\nreport written to {args.report}")
    if report.tokens_issued != report.tokens_expected:
        print("token count diverged from closed form", file=sys.stderr)
        return 1
    if report.final_verify_fail:
        print("final verification sweep had failures", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    data = json.loads(Path(args.report).read_text())
    report = bench.MetricsReport(**data)
    print(report.table())
    return 0


def cmd_bench_kernels(args) -> int:
    results = bench.benchmark_kernels(size_kib=args.size_kib)
    print(json.dumps(results, indent=2))
    if len(results["backends"]) < 2:
        print("(compiled backend unavailable; only pure Python measured)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longstore",
        description="Long-term secure archive with renewable integrity evidence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_state(p, clocked=True):
        p.add_argument("--config", required=True, help="JSON config naming state_dir")
        if clocked:
            p.add_argument("--at", type=int, default=None,
                           help="advance the logical clock to this time first")

    p = sub.add_parser("init", help="create empty archive state")
    with_state(p, clocked=False)
    p.add_argument("--force", action="store_true", help="reset existing state")
    p.set_defaults(fn=cmd_init)

    p = sub.add_parser("add-scheme", help="register a scheme instance")
    with_state(p)
    p.add_argument("--kind", required=True,
                   choices=["signature", "timestamp", "vector-commitment"])
    p.add_argument("--scheme-id", required=True)
    p.add_argument("--descriptor", required=True,
                   help="e.g. ed25519, fts-sha256-h8, hiding-hm-256, merkle-sha256")
    p.add_argument("--valid-from", type=int, default=0)
    p.add_argument("--t-b", type=int, required=True, help="breakage time")
    p.add_argument("--max-length", type=int, default=1024,
                   help="vector capacity (vector-commitment kind)")
    p.set_defaults(fn=cmd_add_scheme)

    p = sub.add_parser("store", help="store files as one protected batch")
    with_state(p)
    p.add_argument("--sig", required=True, help="signature scheme id")
    p.add_argument("--vc", required=True, help="data commitment scheme id")
    p.add_argument("--ts", required=True, help="timestamp scheme id")
    p.add_argument("--sign-commitment", action="store_true",
                   help="one signature over the batch commitment instead of "
                        "per-file signatures")
    p.add_argument("files", nargs="+")
    p.set_defaults(fn=cmd_store)

    p = sub.add_parser("retrieve", help="fetch a file plus its evidence bundle")
    with_state(p)
    p.add_argument("name")
    p.add_argument("--out", default=".")
    p.set_defaults(fn=cmd_retrieve)

    p = sub.add_parser("verify", help="verify a file against an evidence bundle")
    p.add_argument("--config", help="archive config (uses its PKI and clock)")
    p.add_argument("--pki", help="standalone PKI registry JSON")
    p.add_argument("--at", type=int, default=None, help="verification time")
    p.add_argument("--bundle", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--t-store", type=int, default=None,
                   help="claimed storage time (default: first token time)")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("renew-ts", help="renew timestamp protection")
    with_state(p)
    p.add_argument("--vc", required=True, help="renewal tree commitment scheme id")
    p.add_argument("--ts", required=True)
    p.set_defaults(fn=cmd_renew_ts)

    p = sub.add_parser("renew-com", help="renew commitment protection")
    with_state(p)
    p.add_argument("--vc", required=True, help="fresh data commitment scheme id")
    p.add_argument("--ts", required=True)
    p.set_defaults(fn=cmd_renew_com)

    p = sub.add_parser("renew-shares", help="proactively refresh all shares")
    with_state(p)
    p.add_argument("--central", action="store_true",
                   help="reconstruct-and-reshare at the client instead of the "
                        "shareholder-to-shareholder protocol")
    p.set_defaults(fn=cmd_renew_shares)

    p = sub.add_parser("migrate-sharing", help="move to a new shareholder set")
    with_state(p)
    p.add_argument("--shareholders", type=int, required=True)
    p.add_argument("--threshold", type=int, required=True)
    p.set_defaults(fn=cmd_migrate_sharing)

    p = sub.add_parser("simulate", help="run the efficiency simulation")
    p.add_argument("--mode", choices=["elsa", "baseline"], default="elsa")
    p.add_argument("--seed", default="0")
    p.add_argument("--schedule", help="JSON file with schedule fields "
                                      "(overrides the individual flags)")
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--items-per-epoch", type=int, default=12)
    p.add_argument("--item-size", type=int, default=1024)
    p.add_argument("--ts-renew-period", type=int, default=2)
    p.add_argument("--com-renew-period", type=int, default=10)
    p.add_argument("--reshare-period", type=int, default=5)
    p.add_argument("--report", help="write machine-readable JSON here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("report", help="pretty-print a simulation report")
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("bench-kernels", help="compare GF(256) kernel backends")
    p.add_argument("--size-kib", type=int, default=256)
    p.set_defaults(fn=cmd_bench_kernels)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, KeyError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: gen-data, run, verify, cost.

Exit codes of ``run``: 0 success, 2 parameter mismatch with the peer,
3 I/O or input-file problem, 4 protocol or transport abort.
``verify`` exits 0 on PASS and 1 on FAIL.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import cost as costmod
from .datagen import generate_tables
from .errors import JoinError, ParameterMismatchError
from .files import read_share, read_table, write_share, write_table
from .join import JoinConfig, run_join, run_loopback, verify_join
from .ring import Ring
from .rng import Rng
from .transport import TcpTransport

log = logging.getLogger("dualjoin")

EXIT_MISMATCH = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4


class InputFileError(Exception):
    pass


def _load_table(path: Path, ring: Ring):
    try:
        return read_table(path, ring)
    except (OSError, ValueError) as exc:
        raise InputFileError(f"{path}: {exc}") from exc


def _load_share(path: Path):
    try:
        return read_share(path)
    except (OSError, ValueError) as exc:
        raise InputFileError(f"{path}: {exc}") from exc


def _endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep:
        host, port = "127.0.0.1", text
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}") from None


def _seed(text: str) -> int | str:
    return int(text) if text.isdigit() else text


def _rate(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"rho must be in [0, 1], got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualjoin", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write two CSV tables with a planted intersection")
    g.add_argument("--n-a", type=_positive, required=True)
    g.add_argument("--n-b", type=_positive, required=True)
    g.add_argument("--m-a", type=_nonneg, required=True)
    g.add_argument("--m-b", type=_nonneg, required=True)
    g.add_argument("--rho", type=_rate, required=True, help="shared fraction of min(n_a, n_b), floored")
    g.add_argument("--seed", type=_seed, default=None)
    g.add_argument("--ell", type=int, default=64, choices=[8, 16, 32, 64])
    g.add_argument("--out-a", type=Path, required=True)
    g.add_argument("--out-b", type=Path, required=True)

    r = sub.add_parser("run", help="run one party, or both in loopback")
    r.add_argument("--role", choices=["alice", "bob", "loopback"], required=True)
    r.add_argument("--table", type=Path, action="append", required=True,
                   help="party table CSV (loopback: give alice's then bob's)")
    r.add_argument("--out-share", type=Path, action="append", required=True,
                   help="share output file (loopback: alice's then bob's)")
    r.add_argument("--seed", type=_seed, action="append", default=None,
                   help="deterministic seed (loopback: alice's then bob's)")
    r.add_argument("--stats-out", type=Path, action="append", default=None)
    conn = r.add_mutually_exclusive_group()
    conn.add_argument("--listen", type=_endpoint, metavar="HOST:PORT")
    conn.add_argument("--connect", type=_endpoint, metavar="HOST:PORT")
    r.add_argument("--ell", type=int, default=64, choices=[8, 16, 32, 64])
    r.add_argument("--timeout", type=float, default=300.0)

    v = sub.add_parser("verify", help="reconstruct two shares and compare with the plaintext join")
    v.add_argument("--share-a", type=Path, required=True)
    v.add_argument("--share-b", type=Path, required=True)
    v.add_argument("--table-a", type=Path, required=True)
    v.add_argument("--table-b", type=Path, required=True)

    c = sub.add_parser("cost", help="closed-form online communication")
    c.add_argument("--n", type=_positive, required=True)
    c.add_argument("--m-a", type=_nonneg, required=True)
    c.add_argument("--m-b", type=_nonneg, required=True)
    c.add_argument("--c", type=_nonneg, required=True)
    c.add_argument("--ell", type=_positive, default=64)
    c.add_argument("--sigma", type=_positive, default=256)
    c.add_argument("--packed-idx", action="store_true", help="ceil(log2 n)-bit indices instead of 64-bit")
    c.add_argument("--h", type=_positive, default=3)
    c.add_argument("--lam", type=_positive, default=40)
    c.add_argument("--kappa", type=_positive, default=128)
    return p


def cmd_gen_data(args) -> int:
    ring = Ring(args.ell)
    ta, tb = generate_tables(args.n_a, args.n_b, args.m_a, args.m_b, args.rho, Rng(args.seed), ring)
    write_table(args.out_a, ta)
    write_table(args.out_b, tb)
    log.info("wrote %s (%d rows) and %s (%d rows)", args.out_a, ta.n, args.out_b, tb.n)
    return 0


def _write_stats(path: Path | None, stats) -> None:
    if path is not None:
        path.write_text(json.dumps(stats.to_record(), indent=1, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    ring = Ring(args.ell)
    stats_out = args.stats_out or []
    seeds = args.seed or []
    if args.role == "loopback":
        if len(args.table) != 2 or len(args.out_share) != 2:
            raise SystemExit("loopback needs --table and --out-share twice (alice, then bob)")
        ta, tb = (_load_table(t, ring) for t in args.table)
        seeds = seeds + [None] * (2 - len(seeds))
        res = run_loopback(ta, tb, ell=args.ell, seed_a=seeds[0], seed_b=seeds[1], timeout=args.timeout)
        write_share(args.out_share[0], res.share_a.data)
        write_share(args.out_share[1], res.share_b.data)
        for path, st in zip(stats_out, (res.stats_a, res.stats_b)):
            _write_stats(path, st)
        print(f"joined rows: {res.stats_a.c}; online payload bytes: {res.stats_a.online_payload_bytes}; "
              f"online rounds: {res.stats_a.online_rounds}")
        return 0

    if len(args.table) != 1 or len(args.out_share) != 1:
        raise SystemExit("alice/bob take exactly one --table and one --out-share")
    if not (args.listen or args.connect):
        raise SystemExit("alice/bob need --listen or --connect")
    table = _load_table(args.table[0], ring)
    role = "a" if args.role == "alice" else "b"
    cfg = JoinConfig(role, args.ell, seeds[0] if seeds else None)
    if args.listen:
        transport = TcpTransport.listen(*args.listen, name=args.role, timeout=args.timeout)
    else:
        transport = TcpTransport.connect(*args.connect, name=args.role, timeout=args.timeout)
    with transport:
        share, stats = run_join(cfg, table, transport)
    write_share(args.out_share[0], share.data)
    if stats_out:
        _write_stats(stats_out[0], stats)
    print(f"joined rows: {stats.c}; online payload bytes: {stats.online_payload_bytes}; "
          f"online rounds: {stats.online_rounds}")
    return 0


def cmd_verify(args) -> int:
    sa, sb = _load_share(args.share_a), _load_share(args.share_b)
    ring = Ring(sa.dtype.itemsize * 8)
    ta, tb = _load_table(args.table_a, ring), _load_table(args.table_b, ring)
    report = verify_join(sa, sb, ta, tb)
    print(report.describe())
    return 0 if report.ok else 1


def cmd_cost(args) -> int:
    p = costmod.CostParams(args.n, args.m_a, args.m_b, args.c, args.ell, args.sigma, args.h, args.lam,
                           args.kappa, None if args.packed_idx else costmod.WIRE_INDEX_BITS)
    parts = costmod.online_bits_breakdown(p)
    total = costmod.join_online_bits(p)
    base = costmod.iprivjoin_online_bits_estimate(p)
    width = max(len(k) for k in list(parts) + ["iprivjoin ESTIMATE step2+3"])
    print(f"n={p.n} m_a={p.m_a} m_b={p.m_b} c={p.c} ell={p.ell} sigma={p.sigma} index_bits={p.index_bits}")
    print(f"{'flight':<{width}}  {'bits':>24}  {'bytes':>22}")
    for k, bits in parts.items():
        print(f"{k:<{width}}  {bits:>24,}  {bits / 8:>22,.1f}")
    smig = sum(v for k, v in parts.items() if k.startswith("smig"))
    print(f"{'smig total (3 rounds)':<{width}}  {smig:>24,}  {smig / 8:>22,.1f}")
    print(f"{'misfa total (1 round)':<{width}}  {total - smig:>24,}  {(total - smig) / 8:>22,.1f}")
    print(f"{'online total (4 rounds)':<{width}}  {total:>24,}  {total / 8:>22,.1f}")
    for k in ("step1", "step2+3", "total"):
        label = f"iprivjoin ESTIMATE {k}"
        print(f"{label:<{width}}  {base[k]:>24,}  {base[k] / 8:>22,.1f}")
    print(f"ratio online/iprivjoin ESTIMATE: {total / base['total']:.4f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("BIFROST_LOG", "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"gen-data": cmd_gen_data, "run": cmd_run, "verify": cmd_verify, "cost": cmd_cost}[args.command]
    try:
        return handler(args)
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParameterMismatchError as exc:
        print(f"error: parameter mismatch with peer: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except JoinError as exc:
        print(f"error: protocol aborted: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``ibf <experiment> --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .core import BloomFilter
from .secure import SecretSchedule, SecureVerifier, build_secure_filter, element_name


def _experiment(args: argparse.Namespace) -> int:
    cfg = harness.load_config(args.config)
    if cfg.experiment != args.command:
        raise ValueError(f"config is for {cfg.experiment!r}, not {args.command!r}")
    cfg = harness.with_overrides(cfg, seed=args.seed, out=args.out, trials=args.trials)
    rows = harness.run_experiment(cfg, jobs=args.jobs)
    if not cfg.out:
        harness.write_csv(rows, sys.stdout)
    return 0


def _tables(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in harness.bundled_configs():
        cfg = harness.bundled_config(name)
        target = out_dir / name.replace(".cfg", ".csv")
        cfg = harness.with_overrides(cfg, out=str(target), trials=args.trials, seed=args.seed)
        logging.info("running %s -> %s", name, target)
        harness.run_experiment(cfg, jobs=args.jobs)
        print(target)
    return 0


def _schedule(args: argparse.Namespace) -> SecretSchedule:
    return SecretSchedule(bytes.fromhex(args.secret), epoch_length=args.epoch_length)


def _sign(args: argparse.Namespace) -> int:
    """Emit one trace line: packet id, filter, epoch, elements."""
    names = [element_name(e.encode("utf-8"), args.m) for e in args.elements]
    I = int(args.packet, 16)
    filt = build_secure_filter(names, I, args.m, args.k, schedule=_schedule(args), epoch=args.epoch)
    print(f"{args.packet} {filt.to_bytes().hex()} {args.epoch} {','.join(args.elements)}")
    return 0


def _verify(args: argparse.Namespace) -> int:
    verifier = SecureVerifier(_schedule(args), args.m, args.k)
    with open(args.trace, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                packet, filt_hex, epoch, elements = line.split(maxsplit=3)
                filt = BloomFilter.from_bytes(bytes.fromhex(filt_hex))
                I = int(packet, 16)
                hint = int(epoch) if args.epoch is None else args.epoch
            except ValueError as exc:
                raise ValueError(f"{args.trace}:{lineno}: malformed trace line") from exc
            words = elements.split(",")
            names = [element_name(w.encode("utf-8"), args.m) for w in words]
            for word, ok in zip(words, verifier.verify(filt, I, names, hint)):
                print(f"{lineno}\t{word}\t{'accept' if ok else 'reject'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ibf", description="In-packet Bloom filter experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for exp in harness.EXPERIMENTS:
        p = sub.add_parser(exp, help=f"run a {exp} experiment")
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--trials", type=int)
        p.set_defaults(func=_experiment)

    p = sub.add_parser("tables", help="regenerate the bundled table analogs")
    p.add_argument("--out-dir", default="tables")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=_tables)

    for name, func in (("sign", _sign), ("verify", _verify)):
        p = sub.add_parser(name, help=f"{name} packet-bound filters")
        p.add_argument("--secret", required=True, help="hex-encoded schedule seed")
        p.add_argument("--epoch-length", type=float, default=60.0)
        p.add_argument("-m", type=int, default=256)
        p.add_argument("-k", type=int, default=4)
        p.set_defaults(func=func)
        if name == "sign":
            p.add_argument("--packet", required=True, help="hex packet invariant")
            p.add_argument("--epoch", type=int, required=True)
            p.add_argument("elements", nargs="+")
        else:
            p.add_argument("--trace", required=True)
            p.add_argument("--epoch", type=int, help="verifier epoch; defaults to each line's hint")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"ibf: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``lpalab <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .binom import SUITES
from .errors import ParameterError


def _regime(sp):
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float, help="edge probability")
    g.add_argument("--alpha", type=float, help="np = n^alpha")
    g.add_argument("--c", type=float, help="np = c n^(2/3)")


def _common(sp):
    sp.add_argument("--n", type=int, required=True)
    _regime(sp)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True, help="base seed (unsigned 64-bit)")
    sp.add_argument("--threads", type=int, default=None, help="worker threads (default: LPA_THREADS or CPU count)")
    sp.add_argument("--out", required=True, help="JSON-lines output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpalab", description="Label propagation on G(n, p): simulation and verification.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sim = sub.add_parser("simulate", help="run LPA trials")
    _common(sim)
    sim.add_argument("--max-rounds", type=int, default=64)
    sim.add_argument("--events", action="store_true", help="evaluate the per-trial events")

    cmp_ = sub.add_parser("compare", help="LPA vs ALAP round-2 disagreement")
    _common(cmp_)

    sw = sub.add_parser("sweep", help="run a JSON array of simulate/compare configs")
    sw.add_argument("--config", required=True)

    ver = sub.add_parser("verify", help="run a binomial verification suite")
    ver.add_argument("--suite", required=True, choices=sorted(SUITES))
    ver.add_argument("--grid", help="JSON file overriding the default grid")

    sm = sub.add_parser("summarize", help="aggregate a JSON-lines file into CSV")
    sm.add_argument("records")
    sm.add_argument("--out", required=True)
    return ap


def _config(args, mode) -> harness.ExperimentConfig:
    return harness.ExperimentConfig(
        mode=mode,
        n=args.n,
        p=args.p,
        alpha=args.alpha,
        c=args.c,
        trials=args.trials,
        base_seed=args.seed,
        max_rounds=getattr(args, "max_rounds", 64),
        thread_count=args.threads,
        events=getattr(args, "events", False),
        out=args.out,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd in ("simulate", "compare"):
            recs = harness.run_trials(_config(args, args.cmd))
            rows = harness.summary_rows(recs)
            print(json.dumps(rows, indent=2))
            return 0
        if args.cmd == "sweep":
            harness.run_sweep(args.config)
            return 0
        if args.cmd == "verify":
            grid = json.loads(Path(args.grid).read_text()) if args.grid else None
            rep = harness.verify(args.suite, grid)
            print(json.dumps(rep.as_dict(), indent=2, default=str))
            return 0 if rep.passed else 1
        if args.cmd == "summarize":
            rows = harness.summarize(args.records, args.out)
            print(f"{len(rows)} row(s) written to {args.out}")
            return 0
    except (ParameterError, harness.HarnessError, OSError) as e:
        print(f"lpalab: error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())

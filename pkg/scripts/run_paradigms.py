#!/usr/bin/env python3
"""Run the experiment paradigms end to end and collect their reports.

Each paradigm gets its own subdirectory under --out with a p<N>_report.json
(plus p4_curve.csv and the p3 stream directories where applicable). The
resolved configuration is written next to them so a run documents itself.

    python3 scripts/run_paradigms.py --config configs/desk.json --out runs/desk
    python3 scripts/run_paradigms.py --paradigms p2,p4 --out runs/quick
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from coreselect.config import RunConfig
from coreselect.errors import CoreselectError
from coreselect.paradigms import PARADIGM_NAMES, run_paradigm


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=None,
                        help="RunConfig JSON; defaults apply when omitted")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the global seed")
    parser.add_argument(
        "--paradigms", default=",".join(PARADIGM_NAMES),
        help="comma-separated subset, e.g. p1,p4 (default: all)",
    )
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        config = RunConfig.load(args.config).with_overrides(seed=args.seed)
        names = [n.strip().lower() for n in args.paradigms.split(",") if n.strip()]
        unknown = [n for n in names if n not in PARADIGM_NAMES]
        if unknown:
            print(f"error: unknown paradigm(s) {unknown}", file=sys.stderr)
            return 2
        plan = config.experiment_plan()

        args.out.mkdir(parents=True, exist_ok=True)
        config.write_resolved(args.out)
        summaries = {}
        for name in names:
            start = time.perf_counter()
            report = run_paradigm(name, plan, args.out / name)
            elapsed = time.perf_counter() - start
            summaries[name] = report["summary"]
            print(f"{name}: {elapsed:.1f}s")
            for key, value in report["summary"].items():
                print(f"  {key}: {value}")
        with open(args.out / "summaries.json", "w") as fh:
            json.dump(summaries, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"reports under {args.out}")
        return 0
    except CoreselectError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2 if "Config" in type(exc).__name__ else 1


if __name__ == "__main__":
    sys.exit(main())

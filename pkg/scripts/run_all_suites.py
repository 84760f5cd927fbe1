"""Run every named suite through the CLI, writing one report per suite plus an aggregate.

    python3 scripts/run_all_suites.py [--outdir reports] [--seed 0]
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from riskdex.cli import run
from riskdex.suites import SUITES


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="reports")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths, worst = [], 0
    for name in SUITES:
        path = out / f"{name}.json"
        code = run(["suite", "--name", name, "--seed", str(args.seed), "--out", str(path)])
        print(f"{name:15} exit {code}")
        worst = max(worst, code)
        paths.append(str(path))
    code = run(["suite", "--aggregate", *paths, "--out", str(out / "aggregate.json")])
    return max(worst, code)


if __name__ == "__main__":
    sys.exit(main())

"""Print the short-horizon limit table: every catalog process x limit agent x fn.

    python3 scripts/limits_table.py [--seed 0] [--json out.json]
"""
from __future__ import annotations

import argparse
import json

from riskdex.convergence import run_convergence
from riskdex.presets import limit_agents, limit_processes


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the rows as JSON")
    args = ap.parse_args()

    rows = []
    print(f"{'process':8} {'agent':6} {'fn':3} {'limit':>14} {'target':>14} {'rel err':>9} {'tol':>5}  ok")
    for p in limit_processes():
        for a in limit_agents():
            for fn in ("rp", "ca", "ce"):
                r = run_convergence(a, p, fn, seed=args.seed)
                kind = a.utility.kind
                print(f"{p.kind:8} {kind:6} {fn:3} {r.limit:14.8g} {r.target:14.8g} "
                      f"{r.rel_error:9.2e} {r.tolerance:5.2f}  {'yes' if r.passed else 'NO'}")
                rows.append({"process": p.to_json(), "agent": a.to_json(), "fn": fn,
                             "limit": r.limit, "target": r.target, "rel_error": r.rel_error,
                             "method": r.method, "passed": r.passed})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()

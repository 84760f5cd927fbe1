"""Command-line front end: ``riskdex <subcommand> ...``.

Every subcommand writes one JSON report (stdout or --out). Exit status is 0
when the run passes, 2 when an acceptance check fails and 1 on error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .closed_form import CaraNormalCase, cara_normal_all, cara_normal_multiplicative_all
from .convergence import run_convergence, run_jump_reversal
from .core import Agent, Gamble
from .decisions import MULTIPLICATIVE, SolverConfig, evaluate
from .errors import RiskdexError
from .expectation import IntegrationPolicy, provenance
from .indices import INDEX_FOR_FN, consistency_check, index, local_index
from .processes import process_from_json, t_grid
from . import presets
from .suites import SUITES

SCHEMA = "riskdex-report/1"
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class ConfigError(Exception):
    pass


def load_json(path: str) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _parse(path: str, build):
    obj = load_json(path)
    try:
        return build(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid specification ({exc})") from exc


def resolve_seed(flag: int | None) -> int:
    env = os.environ.get("RISKDEX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"RISKDEX_SEED={env!r} is not an integer") from exc
    return 0 if flag is None else flag


def config_hash(config: dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def make_report(command: str, config: dict[str, Any], seed: int, results: dict[str, Any],
                passed: bool | None, prov: dict[str, Any] | None = None) -> dict[str, Any]:
    config = {**config, "seed": seed}
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "results": results,
        "provenance": prov or {},
        "passed": passed,
    }


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def _default(o: Any):
    import numpy as np

    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _policy(args) -> IntegrationPolicy:
    pol = IntegrationPolicy.from_json(_parse(args.policy, dict) if args.policy else None)
    return IntegrationPolicy(**{**pol.to_json(), "seed": args.seed_value})


def _solver(args) -> SolverConfig:
    return SolverConfig.from_json(_parse(args.solver, dict) if args.solver else None)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_eval(args) -> tuple[dict, bool | None, dict]:
    agent = _parse(args.agent, Agent.from_json)
    g = _parse(args.gamble, Gamble.from_json)
    policy, cfg = _policy(args), _solver(args)
    if args.multiplicative:
        if args.fn not in MULTIPLICATIVE:
            raise ConfigError(f"--multiplicative supports {sorted(MULTIPLICATIVE)}")
        v = MULTIPLICATIVE[args.fn](agent, g, args.rf, policy, cfg)
    else:
        v = evaluate(args.fn, agent, g, policy, cfg)
    res = {"fn": args.fn, **v.to_json()}
    if v.tag == "accept" or v.tag == "reject":
        res["value"] = v.tag
    cfg_echo = {"agent": agent.to_json(), "gamble": g.to_json(), "fn": args.fn,
                "multiplicative": args.multiplicative, "rf": args.rf,
                "policy": policy.to_json(), "solver": cfg.to_json()}
    return cfg_echo, res, None, provenance(agent, g, policy)


def cmd_closed_form(args):
    c = CaraNormalCase(args.rho, args.mu, args.sigma, args.wealth)
    res = cara_normal_all(c)
    if args.rf is not None:
        res["multiplicative"] = cara_normal_multiplicative_all(c, args.rf)
    return {**c.to_json(), "rf": args.rf}, res, None, {"method": "closed_form"}


def cmd_index(args):
    if args.process:
        proc = _parse(args.process, process_from_json)
        val = local_index(args.kind, proc, args.rf)
        echo = {"process": proc.to_json()}
    else:
        g = _parse(args.gamble, Gamble.from_json)
        val = index(args.kind, g, args.rf)
        echo = {"gamble": g.to_json()}
    return {**echo, "kind": args.kind, "rf": args.rf}, {"kind": args.kind, "value": val}, None, {}


def cmd_consistency(args):
    agents = _parse(args.agents, lambda o: [Agent.from_json(a) for a in o])
    gambles = _parse(args.gambles, lambda o: [Gamble.from_json(g) for g in o])
    policy, cfg = _policy(args), _solver(args)
    kind = args.index or INDEX_FOR_FN.get(args.fn)
    rep = consistency_check(lambda a, g: evaluate(args.fn, a, g, policy, cfg), agents, gambles,
                            fn_name=args.fn, index_kind=kind)
    echo = {"fn": args.fn, "agents": [a.to_json() for a in agents],
            "gambles": [g.to_json() for g in gambles], "index": kind,
            "policy": policy.to_json(), "solver": cfg.to_json()}
    return echo, rep.to_json(), None, {}


def cmd_converge(args):
    agent = _parse(args.agent, Agent.from_json)
    proc = _parse(args.process, process_from_json)
    policy, cfg = _policy(args), _solver(args)
    grid = t_grid(args.t0, args.k)
    rep = run_convergence(agent, proc, args.fn, grid, policy, cfg, args.seed_value, args.workers)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "raw", "scaled", "target"])
            w.writerows(rep.csv_rows())
    echo = {"agent": agent.to_json(), "process": proc.to_json(), "fn": args.fn,
            "t0": args.t0, "k": args.k, "policy": policy.to_json(), "solver": cfg.to_json()}
    results = rep.to_json()
    results["header"] = {"tolerance": rep.tolerance,
                         "tolerance_basis": "1% for exact marginals, 3% for Euler samples; doubled on last-point fallback"}
    return echo, results, rep.passed, rep.provenance


def cmd_jump_demo(args):
    policy, cfg = _policy(args), _solver(args)
    cp1, cp2, a1, a2 = presets.jump_pair()
    rep = run_jump_reversal(cp1, cp2, a1, a2, None, policy, cfg)
    echo = {"cp1": cp1.to_json(), "cp2": cp2.to_json(), "agent1": a1.to_json(),
            "agent2": a2.to_json(), "policy": policy.to_json()}
    return echo, rep.to_json(), rep.reversal_holds, {"method": "exact_sum"}


def cmd_suite(args):
    if args.aggregate:
        reports = [load_json(p) for p in args.aggregate]
        tags = {r.get("schema") for r in reports}
        if tags != {SCHEMA}:
            raise ConfigError(f"refusing to aggregate reports with schema tags {sorted(map(str, tags))}")
        agg = {p: {"command": r.get("command"), "config_hash": r.get("config_hash"),
                   "passed": r.get("passed")} for p, r in zip(args.aggregate, reports)}
        ok = all(r.get("passed") is not False for r in reports)
        return {"aggregate": list(args.aggregate)}, {"reports": agg}, ok, {}
    if not args.name:
        raise ConfigError("suite needs --name or --aggregate")
    policy, cfg = _policy(args), _solver(args)
    res = SUITES[args.name](policy=policy, cfg=cfg, seed=args.seed_value, workers=args.workers)
    res.pop("elapsed_s", None)  # timings live outside the deterministic payload
    echo = {"name": args.name, "policy": policy.to_json(), "solver": cfg.to_json()}
    return echo, res, bool(res["passed"]), {}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskdex", description="Decision functions and risk indices lab.")
    p.add_argument("--version", action="version", version=f"riskdex {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (RISKDEX_SEED overrides)")
    common.add_argument("--policy", help="integration policy JSON file")
    common.add_argument("--solver", help="solver config JSON file")
    common.add_argument("--workers", type=int, default=None, help="worker processes for grid cells")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate one decision function")
    e.add_argument("--agent", required=True)
    e.add_argument("--gamble", required=True)
    e.add_argument("--fn", required=True, choices=["ar", "ca", "ce", "rp", "sce"])
    e.add_argument("--multiplicative", action="store_true")
    e.add_argument("--rf", type=float, default=0.0)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("closed-form", parents=[common], help="CARA-normal closed forms")
    c.add_argument("--rho", type=float, required=True)
    c.add_argument("--mu", type=float, required=True)
    c.add_argument("--sigma", type=float, required=True)
    c.add_argument("--wealth", type=float, default=1.0)
    c.add_argument("--rf", type=float, default=None)
    c.set_defaults(func=cmd_closed_form)

    i = sub.add_parser("index", parents=[common], help="static or local risk index")
    i.add_argument("--kind", required=True, choices=["vm", "is", "sd"])
    src = i.add_mutually_exclusive_group(required=True)
    src.add_argument("--gamble")
    src.add_argument("--process")
    i.add_argument("--rf", type=float, default=None, help="risk-free rate (per-dollar variants)")
    i.set_defaults(func=cmd_index)

    k = sub.add_parser("consistency", parents=[common], help="ranking agreement across agents")
    k.add_argument("--fn", required=True, choices=["ar", "ca", "ce", "rp", "sce"])
    k.add_argument("--agents", required=True)
    k.add_argument("--gambles", required=True)
    k.add_argument("--index", choices=["vm", "is", "sd"], default=None)
    k.set_defaults(func=cmd_consistency)

    v = sub.add_parser("converge", parents=[common], help="short-horizon limit study")
    v.add_argument("--agent", required=True)
    v.add_argument("--process", required=True)
    v.add_argument("--fn", required=True, choices=["rp", "ca", "ce"])
    v.add_argument("--t0", type=float, default=0.1)
    v.add_argument("--k", type=int, default=14)
    v.add_argument("--csv", help="write t, raw, scaled, target rows here")
    v.set_defaults(func=cmd_converge)

    j = sub.add_parser("jump-demo", parents=[common], help="compound-Poisson ranking reversal")
    j.set_defaults(func=cmd_jump_demo)

    s = sub.add_parser("suite", parents=[common], help="run a named suite or aggregate reports")
    s.add_argument("--name", choices=sorted(SUITES))
    s.add_argument("--aggregate", nargs="+", metavar="REPORT")
    s.set_defaults(func=cmd_suite)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        args.seed_value = resolve_seed(args.seed)
        echo, results, passed, prov = args.func(args)
    except ConfigError as exc:
        print(f"riskdex: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (RiskdexError, ValueError, ArithmeticError) as exc:
        print(f"riskdex: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = make_report(args.command, echo, args.seed_value, results, passed, prov)
    report["wall_clock_s"] = time.perf_counter() - start
    text = _dump(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_FAIL if passed is False else EXIT_OK


def main() -> None:
    sys.exit(run())


def deterministic_payload(report: dict[str, Any]) -> dict[str, Any]:
    """Report minus the wall-clock field, for reproducibility comparisons."""
    return {k: v for k, v in report.items() if k != "wall_clock_s"}


__all__ = ["run", "main", "build_parser", "SCHEMA", "deterministic_payload", "make_report"]

"""Command line entry point: ``rgvroute <command> [flags]``.

Exit codes: 0 success, 1 infeasible instance, 2 usage error, 3 internal or
numerical failure. Relative output paths resolve against ``$RGVROUTE_OUTDIR``
when it is set.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import instance as inst_io
from .kinematics import RgvParams

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
OUTDIR_ENV = "RGVROUTE_OUTDIR"
CUT_CHOICES = ("none", "g1", "g2", "g3", "g23", "g123")


class UsageError(Exception):
    pass


def out_path(name: str | os.PathLike) -> Path:
    p = Path(name)
    base = os.environ.get(OUTDIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def load_config(path) -> dict:
    """INI file with an ``[rgv]`` section (``RgvParams`` fields) and an optional ``[instance]``
    section (``service_time``, ``unit_length``)."""
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    out = {}
    if cp.has_section("rgv"):
        try:
            out["rgv"] = RgvParams.from_dict({k: float(v) for k, v in cp.items("rgv")})
        except ValueError as exc:
            raise UsageError(f"bad [rgv] section: {exc}") from exc
    if cp.has_section("instance"):
        for key in ("service_time", "unit_length"):
            if cp.has_option("instance", key):
                out[key] = cp.getfloat("instance", key)
    return out


def _apply_config(inst, cfg: dict):
    return replace(inst, **cfg) if cfg else inst


def _read_instance(path, cfg):
    try:
        return _apply_config(inst_io.load(path), cfg)
    except FileNotFoundError as exc:
        raise UsageError(f"instance file not found: {path}") from exc
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed instance file {path}: {exc}") from exc


# -- solution files -----------------------------------------------------------

def solution_dict(inst, ev, *, backend, objective, status, extra=None) -> dict:
    d = {
        "backend": backend,
        "objective": objective,
        "status": status,
        "route": list(ev.route),
        "energy": ev.energy,
        "distance": ev.distance,
        "completion_time": ev.completion_time,
        "feasible": ev.feasible,
        "b": {str(k): v for k, v in sorted(ev.b.items())},
        "w": {str(k): v for k, v in sorted(ev.w.items())},
    }
    if extra:
        d.update(extra)
    return d


def write_solution(path, sol: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sol, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_solution(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def check_solution(inst, sol: dict, tol: float = 1e-9) -> list[str]:
    """Problems found when re-evaluating a stored solution; empty if it round-trips."""
    from .deck import evaluate_route

    ev = evaluate_route(inst, sol["route"], stop_at_violation=False)
    errs = []
    if ev.feasible != sol["feasible"]:
        errs.append(f"feasibility {ev.feasible} != stored {sol['feasible']}")
    for key in ("energy", "distance"):
        if abs(getattr(ev, key) - sol[key]) > tol * max(1.0, abs(sol[key])):
            errs.append(f"{key} {getattr(ev, key)!r} != stored {sol[key]!r}")
    for k, v in sol["b"].items():
        if abs(ev.b.get(int(k), float("nan")) - v) > tol * max(1.0, abs(v)):
            errs.append(f"b[{k}] differs")
    return errs


# -- commands -------------------------------------------------------------------

def cmd_gen(args, cfg) -> int:
    from .simulator import GenConfig, gen_dynamic, gen_static, random_instance

    rgv = cfg.get("rgv", RgvParams())
    extra = {k: cfg[k] for k in ("service_time", "unit_length") if k in cfg}
    if args.kind == "random":
        inst = random_instance(args.seed, args.n, args.m, args.Q, rgv=rgv)
        inst = _apply_config(inst, extra)
    else:
        gc = GenConfig(seed=args.seed, m=args.m, n=args.n, a=args.a, arrival_mean=args.arrival_mean,
                       arrival_reading=args.arrival_reading, tw_mode=args.tw, Q=args.Q, rgv=rgv, **extra)
        inst = gen_static(gc) if args.kind == "static" else gen_dynamic(gc)
    path = out_path(args.output or f"{args.kind}-s{args.seed}.json")
    inst_io.save(inst, path)
    print(f"wrote {path} ({inst.n} requests, {inst.m} stations, Q={inst.Q})")
    return EXIT_OK


def _summary(inst, sol) -> str:
    lines = [
        f"backend {sol['backend']}  objective {sol['objective']}  status {sol['status']}",
        f"route   {' '.join(map(str, sol['route']))}",
        f"energy  {sol['energy']:.6f}",
        f"distance {sol['distance']:.6f}  completion {sol['completion_time']:.6f}",
    ]
    if "gap" in sol:
        lines.append(f"nodes {sol.get('nodes')}  gap {sol['gap']:.3g}")
    if not sol["feasible"]:
        lines.append("route misses at least one deadline")
    return "\n".join(lines)


def cmd_solve(args, cfg) -> int:
    from .deck import evaluate_route
    from .seqsolver import Infeasible, Status, solve_exact

    inst = _read_instance(args.instance, cfg)
    if args.backend == "seq":
        try:
            res = solve_exact(inst, args.objective, node_limit=args.node_limit)
        except Infeasible as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        if res.evaluation is None:
            print("search limit reached without a feasible route", file=sys.stderr)
            return EXIT_INTERNAL
        sol = solution_dict(inst, res.evaluation, backend="seq", objective=args.objective,
                            status=res.status.value, extra={"nodes": res.nodes})
        code = EXIT_OK if res.status is Status.OPTIMAL else EXIT_INTERNAL
    elif args.backend == "rule":
        from .heuristic import rule_route

        ev = rule_route(inst, args.rule)
        sol = solution_dict(inst, ev, backend="rule", objective=args.objective, status="heuristic")
        code = EXIT_OK
    else:
        from .heuristic import rule_sequence
        from .milp.model import build_model
        from .milpsolver import MilpStatus, solve_milp

        if args.objective != "energy":
            raise UsageError("the milp backend minimises energy; use --backend seq for distance")
        model = build_model(inst, cuts=args.cuts, floor=not args.no_floor)
        incumbent = None if args.cold else rule_sequence(inst) + [inst.end]
        res = solve_milp(model, time_limit=args.time_limit, incumbent=incumbent)
        if res.status is MilpStatus.INFEASIBLE:
            print("infeasible: " + ", ".join(res.certificate[:10]), file=sys.stderr)
            return EXIT_INFEASIBLE
        if res.values is None:
            print(f"milp stopped ({res.status.value}) without a feasible route", file=sys.stderr)
            return EXIT_INTERNAL
        ev = evaluate_route(inst, res.route, stop_at_violation=False)
        sol = solution_dict(inst, ev, backend="milp", objective="energy", status=res.status.value,
                            extra={"nodes": res.nodes, "gap": res.gap, "root_bound": res.root_bound,
                                   "cuts": args.cuts})
        code = EXIT_INTERNAL if res.status is MilpStatus.NUMERICAL_FAILURE else EXIT_OK
    if args.output:
        write_solution(out_path(args.output), sol)
    print(_summary(inst, sol))
    return code


def cmd_export_lp(args, cfg) -> int:
    from .milp.lpformat import export_lp
    from .milp.model import build_model, write_stats_csv

    inst = _read_instance(args.instance, cfg)
    model = build_model(inst, cuts=args.cuts, floor=args.floor)
    path = out_path(args.output or Path(args.instance).with_suffix(".lp").name)
    export_lp(model, path)
    print(f"wrote {path} ({model.num_cols} columns, {model.num_rows} rows, {model.nnz} nonzeros)")
    if args.stats:
        spath = out_path(args.stats)
        write_stats_csv([(Path(args.instance).stem, model)], spath)
        print(f"wrote {spath}")
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    from .simulator import GenConfig, gen_dynamic, make_controller, run_experiment, summary_table, \
        write_results_csv

    rgv = cfg.get("rgv", RgvParams())
    extra = {k: cfg[k] for k in ("service_time", "unit_length") if k in cfg}
    controllers = ["rule", "rolling"] if args.controller == "both" else [args.controller]
    rows = []
    streams = []
    if args.instance:
        streams.append(("file", _read_instance(args.instance, cfg)))
    else:
        for seed in range(args.seed, args.seed + args.count):
            gc = GenConfig(seed=seed, m=args.m, n=args.n, arrival_mean=args.arrival_mean,
                           arrival_reading=args.arrival_reading, tw_mode=args.tw, Q=args.Q, rgv=rgv, **extra)
            streams.append((f"dyn-s{seed}-Q{args.Q}-{args.tw}", gen_dynamic(gc)))
    for name, stream in streams:
        if args.instance:
            stream = replace(stream, Q=args.Q) if args.Q_given else stream
        for kind in controllers:
            kw = {}
            if kind == "rolling":
                kw = dict(h=args.horizon, backend=args.backend, cuts=args.cuts, time_limit=args.time_limit,
                          latency=args.latency)
            metrics, trace = run_experiment(stream, make_controller(kind, stream, **kw))
            row = {"instance": name, "controller": kind, "Q": stream.Q, "tw": args.tw, "n": stream.n}
            row.update(metrics.row())
            rows.append(row)
            if args.trace:
                trace.write_jsonl(out_path(f"{args.trace}-{name}-{kind}.jsonl"))
            if args.events:
                trace.write_event_csv(out_path(f"{args.events}-{name}-{kind}.csv"))
    path = out_path(args.output)
    write_results_csv(rows, path, timings=args.timings)
    print(summary_table(rows), end="")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_bench(args, cfg) -> int:
    from .milpsolver import BENCH_FIELDS, bench_suite

    sizes = _int_list(args.sizes)
    caps = _int_list(args.Q)
    cuts = [c.strip() for c in args.cuts.split(",") if c.strip()]
    for c in cuts:
        if c not in CUT_CHOICES:
            raise UsageError(f"unknown cut configuration {c!r}")
    rows = bench_suite(sizes, caps, cuts, seeds=range(args.seed, args.seed + args.count), m=args.m,
                       time_limit=args.time_limit, workers=args.workers, rgv=cfg.get("rgv"))
    path = out_path(args.output)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    for r in rows:
        print(f"{r['instance']:<16} cuts={r['cuts']:<5} nodes={r['nodes']:>7} time={r['seconds']:>8.2f}s "
              f"root_gap={r['root_gap']:.4f} status={r['status']}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args, cfg) -> int:
    from .validate import run_validation

    if args.solution:
        if not args.instance:
            raise UsageError("--solution needs --instance")
        inst = _read_instance(args.instance, cfg)
        errs = check_solution(inst, read_solution(args.solution))
        for e in errs:
            print(f"solution: {e}")
        print("solution round trip " + ("FAILED" if errs else "ok"))
        return EXIT_INTERNAL if errs else EXIT_OK
    report = run_validation(count=args.count, max_n=args.max_n, seed=args.seed, milp=not args.no_milp)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_INTERNAL


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma separated integer list, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rgvroute", description="Energy-aware routing for a two-sided rail-guided vehicle.")
    p.add_argument("--config", help="INI file overriding RGV parameters")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--kind", choices=("random", "static", "dynamic"), default="random")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=7)
    g.add_argument("--m", type=int, default=10)
    g.add_argument("--a", type=int, default=1, help="static queue-size bound")
    g.add_argument("--Q", type=int, default=2)
    g.add_argument("--tw", choices=("none", "mixed", "completion"), default="none")
    g.add_argument("--arrival-mean", type=float, default=0.5)
    g.add_argument("--arrival-reading", choices=("interarrival", "rate"), default="interarrival")
    g.add_argument("-o", "--output")

    s = sub.add_parser("solve", help="solve a static instance")
    s.add_argument("instance")
    s.add_argument("--backend", choices=("seq", "milp", "rule"), default="seq")
    s.add_argument("--objective", choices=("energy", "distance"), default="energy")
    s.add_argument("--cuts", choices=CUT_CHOICES, default="g123")
    s.add_argument("--rule", choices=("eaf", "edf"))
    s.add_argument("--time-limit", type=float, default=120.0)
    s.add_argument("--node-limit", type=int, default=200_000_000)
    s.add_argument("--no-floor", action="store_true", help="omit the energy floor rows (plain model)")
    s.add_argument("--cold", action="store_true", help="no rule-based incumbent for the milp backend")
    s.add_argument("-o", "--output")

    e = sub.add_parser("export-lp", help="write the MILP in LP format")
    e.add_argument("instance")
    e.add_argument("--cuts", choices=CUT_CHOICES, default="none")
    e.add_argument("--floor", action="store_true", help="include the energy floor rows")
    e.add_argument("--stats", help="also write rows/cols/nonzeros as CSV")
    e.add_argument("-o", "--output")

    m = sub.add_parser("simulate", help="run the dynamic experiment")
    m.add_argument("--controller", choices=("rolling", "rule", "both"), default="both")
    m.add_argument("--horizon", type=int, default=8)
    m.add_argument("--Q", type=int, default=None)
    m.add_argument("--backend", choices=("seq", "milp"), default="seq")
    m.add_argument("--cuts", choices=CUT_CHOICES, default="g123")
    m.add_argument("--time-limit", type=float, default=60.0)
    m.add_argument("--latency", type=float, default=0.0)
    m.add_argument("--instance", help="arrival stream file instead of generated streams")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--count", type=int, default=1)
    m.add_argument("--n", type=int, default=50)
    m.add_argument("--m", type=int, default=20)
    m.add_argument("--tw", choices=("none", "mixed"), default="none")
    m.add_argument("--arrival-mean", type=float, default=0.5)
    m.add_argument("--arrival-reading", choices=("interarrival", "rate"), default="interarrival")
    m.add_argument("--trace", help="prefix for JSONL traces")
    m.add_argument("--timings", action="store_true", help="add wall-clock solver seconds to the CSV")
    m.add_argument("--events", help="prefix for event-log CSV files")
    m.add_argument("-o", "--output", default="metrics.csv")

    b = sub.add_parser("bench", help="cut-benefit benchmark of the MILP solver")
    b.add_argument("--sizes", default="7,8")
    b.add_argument("--Q", default="2,4")
    b.add_argument("--cuts", default="none,g23")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--count", type=int, default=1)
    b.add_argument("--m", type=int, default=10)
    b.add_argument("--time-limit", type=float, default=120.0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("-o", "--output", default="bench.csv")

    v = sub.add_parser("validate", help="oracle equivalence checks on small instances")
    v.add_argument("--count", type=int, default=20)
    v.add_argument("--max-n", type=int, default=4)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--no-milp", action="store_true")
    v.add_argument("--instance")
    v.add_argument("--solution")
    return p


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "export-lp": cmd_export_lp,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("missing command; choose one of " + ", ".join(COMMANDS))
        cfg = load_config(args.config) if args.config else {}
        if args.command == "simulate":
            args.Q_given = args.Q is not None
            if args.Q is None:
                args.Q = 2
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"rgvroute: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - the exit code is the contract
        print(f"rgvroute: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Seeded instance generators and the discrete-event experiment loop."""
from __future__ import annotations

import csv
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import HORIZON_MAX, TIME_TOL
from .deck import Blocked, DeckState, deck_apply, evaluate_route
from .instance import Instance, Request, RequestType, Side
from .kinematics import RgvParams, arc_energy, travel_time

_TYPE_SIDES = {
    RequestType.T1: (Side.NORTH, Side.NORTH),
    RequestType.T2: (Side.SOUTH, Side.SOUTH),
    RequestType.T3: (Side.NORTH, Side.SOUTH),
    RequestType.T4: (Side.SOUTH, Side.NORTH),
}


def random_instance(seed: int, n: int, m: int, Q: int, *, q_max: int = 1, all_types: bool = True,
                    deadline_slack: tuple[float, float] | None = None, rgv: RgvParams | None = None,
                    service_time: float = 0.5) -> Instance:
    """A small random instance for cross-validation.

    Pickup stations are drawn from ``m`` stations, so short tracks produce
    FIFO queues. With ``all_types`` and ``n >= 4`` every request type occurs.
    ``deadline_slack=(lo, hi)`` attaches deadlines ``U[lo, hi]`` times a crude
    per-request completion estimate.
    """
    rng = random.Random(seed)
    types = [rng.choice(list(RequestType)) for _ in range(n)]
    if all_types and n >= 4:
        types[:4] = list(RequestType)
        rng.shuffle(types)
    start = rng.randint(1, m)
    reqs = []
    for k, t in enumerate(types):
        o = rng.randint(1, m)
        d = rng.randint(1, m)
        while m > 1 and d == o:
            d = rng.randint(1, m)
        os_, ds = _TYPE_SIDES[t]
        q = rng.randint(1, min(q_max, Q))
        arrival = float(rng.randint(0, 3))
        l = HORIZON_MAX
        if deadline_slack is not None:
            est = (abs(start - o) + abs(o - d) + 2 * k + 4) * 1.5
            l = round(est * rng.uniform(*deadline_slack), 3)
        reqs.append(Request(k + 1, o, os_, d, ds, q, arrival, 0.0, l))
    return Instance(tuple(reqs), m=m, Q=Q, start_pos=start, rgv=rgv or RgvParams(), service_time=service_time)


# -- experiment generators --------------------------------------------------

@dataclass(frozen=True)
class GenConfig:
    """Generator settings shared by the static and dynamic experiments.

    ``arrival_reading`` chooses how ``arrival_mean`` is read: ``"interarrival"``
    makes it the mean gap between arrivals, ``"rate"`` the mean number of
    arrivals per time unit.
    """

    seed: int = 0
    m: int = 20
    n: int = 50
    a: int = 1
    arrival_mean: float = 0.5
    arrival_reading: str = "interarrival"
    tw_mode: str = "none"  # none | mixed | completion
    tight: tuple = (50.0, 80.0)
    loose: tuple = (150.0, 200.0)
    tight_fraction: float = 1.0 / 3.0
    Q: int = 2
    rgv: RgvParams = field(default_factory=RgvParams)
    service_time: float = 0.5
    unit_length: float = 1.0
    start_pos: int | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 0 or self.a < 0 or self.Q < 1:
            raise ValueError("GenConfig needs m >= 1, n >= 0, a >= 0 and Q >= 1")
        if self.tw_mode not in ("none", "mixed", "completion"):
            raise ValueError(f"unknown tw_mode {self.tw_mode!r}")
        if self.arrival_reading not in ("interarrival", "rate"):
            raise ValueError(f"unknown arrival_reading {self.arrival_reading!r}")
        if not self.arrival_mean > 0:
            raise ValueError("arrival_mean must be > 0")

    @property
    def mean_gap(self) -> float:
        return self.arrival_mean if self.arrival_reading == "interarrival" else 1.0 / self.arrival_mean


def _destination(rng: random.Random, m: int, o: int, os_: Side) -> tuple[int, Side]:
    while True:
        d = rng.randint(1, m)
        ds = Side(rng.randint(0, 1))
        if m == 1 or (d, ds) != (o, os_):
            return d, ds


def _deadline(rng: random.Random, cfg: GenConfig, base: float) -> float:
    lo, hi = cfg.tight if rng.random() < cfg.tight_fraction else cfg.loose
    return round(base + rng.uniform(lo, hi), 6)


def _sort_queue_deadlines(reqs: list[Request]) -> list[Request]:
    """Reassign deadlines so each pickup queue is ordered head to rear."""
    queues: dict = {}
    for r in sorted(reqs, key=lambda r: (r.arrival, r.id)):
        queues.setdefault((r.origin_pos, int(r.origin_side)), []).append(r)
    new_l = {}
    for chain in queues.values():
        for r, l in zip(chain, sorted(r.l for r in chain)):
            new_l[r.id] = l
    return [replace(r, l=new_l[r.id]) for r in reqs]


def _make(cfg: GenConfig, reqs, start) -> Instance:
    return Instance(tuple(reqs), m=cfg.m, Q=cfg.Q, start_pos=start, rgv=cfg.rgv, service_time=cfg.service_time,
                    unit_length=cfg.unit_length)


def gen_static(cfg: GenConfig) -> Instance:
    """Queues of ``U{0..a}`` requests at every station side, all present at time 0.

    ``tw_mode="completion"`` solves the instance without windows and draws
    each deadline from ``U[T_i - 15, T_i]`` around its completion time
    ``T_i``; ``"mixed"`` draws tight and loose deadlines.
    """
    rng = random.Random(cfg.seed)
    start = cfg.start_pos if cfg.start_pos is not None else rng.randint(1, cfg.m)
    reqs = []
    for station in range(1, cfg.m + 1):
        for side in (Side.NORTH, Side.SOUTH):
            for _ in range(rng.randint(0, cfg.a)):
                d, ds = _destination(rng, cfg.m, station, side)
                reqs.append(Request(len(reqs) + 1, station, side, d, ds))
    inst = _make(cfg, reqs, start)
    if cfg.tw_mode == "none" or not reqs:
        return inst
    if cfg.tw_mode == "mixed":
        reqs = [replace(r, l=_deadline(rng, cfg, 0.0)) for r in reqs]
    else:
        from .seqsolver import solve_exact

        ev = solve_exact(inst).evaluation
        n = inst.n
        done = {r.id: ev.b[r.id + n] + inst.service(r.id + n) for r in reqs}
        reqs = [replace(r, l=round(max(0.0, rng.uniform(done[r.id] - 15.0, done[r.id])), 6)) for r in reqs]
    return _make(cfg, _sort_queue_deadlines(reqs), start)


def gen_dynamic(cfg: GenConfig) -> Instance:
    """``n`` requests with exponential inter-arrival gaps and uniform endpoints.

    Deadlines (``tw_mode="mixed"``) are measured from the arrival time and
    then sorted within each pickup queue.
    """
    rng = random.Random(cfg.seed)
    start = cfg.start_pos if cfg.start_pos is not None else rng.randint(1, cfg.m)
    t = 0.0
    reqs = []
    for k in range(cfg.n):
        t += rng.expovariate(1.0 / cfg.mean_gap)
        o = rng.randint(1, cfg.m)
        os_ = Side(rng.randint(0, 1))
        d, ds = _destination(rng, cfg.m, o, os_)
        arrival = round(t, 6)
        l = _deadline(rng, cfg, arrival) if cfg.tw_mode != "none" else HORIZON_MAX
        reqs.append(Request(k + 1, o, os_, d, ds, 1, arrival, 0.0, l))
    if cfg.tw_mode != "none":
        reqs = _sort_queue_deadlines(reqs)
    return _make(cfg, reqs, start)


# -- discrete-event loop ----------------------------------------------------

@dataclass
class Metrics:
    energy: float = 0.0
    distance: float = 0.0
    completion_time: float = 0.0
    tw_violations: int = 0
    late: list = field(default_factory=list)
    decisions: int = 0
    solver_seconds: float = 0.0
    relaxed_decisions: int = 0
    replay_energy: float = 0.0
    decision_stats: list = field(default_factory=list)

    def row(self) -> dict:
        return {
            "energy": self.energy,
            "distance": self.distance,
            "completion_time": self.completion_time,
            "tw_violations": self.tw_violations,
            "decisions": self.decisions,
            "relaxed_decisions": self.relaxed_decisions,
            "solver_seconds": self.solver_seconds,
        }


@dataclass
class SimulationTrace:
    route: list = field(default_factory=list)
    tasks: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.tasks:
                fh.write(json.dumps({"type": "task", **rec}, sort_keys=True) + "\n")
            for rec in self.events:
                fh.write(json.dumps({"type": "event", **rec}, sort_keys=True) + "\n")

    def write_event_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "event", "decision_hash", "energy_to_date"])
            for e in self.events:
                w.writerow([f"{e['time']:.6f}", e["kind"], e.get("hash", ""), f"{e['energy']:.9f}"])


class ControllerStalled(RuntimeError):
    """The controller left requests unserved with nothing scheduled."""


def _apply_plan_check(stream: Instance, deck: DeckState, backlog: set, plan) -> bool:
    n = stream.n
    try:
        for kind, g in plan:
            if kind == "P":
                if g not in backlog:
                    return False
                deck = deck_apply(deck, g, stream)
            else:
                deck = deck_apply(deck, g + n, stream)
    except (Blocked, ValueError):
        return False
    return not deck.containers


def run_experiment(stream: Instance, controller) -> tuple[Metrics, SimulationTrace]:
    """Drive ``controller`` over the arrival stream until every request is delivered.

    The vehicle executes one task at a time: travel to the station, then
    service. The controller is consulted only between tasks. A decision
    computed at time ``t`` with ``controller.latency = L`` is adopted at the
    first task boundary at or after ``t + L``.
    """
    from .rolling import ControllerState

    p = stream.rgv
    n = stream.n
    s = stream.service_time
    arrivals = sorted(stream.requests, key=lambda r: (r.arrival, r.id))
    queues = stream.queues
    state = ControllerState(0.0, float(stream.start_pos), DeckState(), {}, [], [],
                            getattr(controller, "h", None) or n)
    metrics = Metrics()
    trace = SimulationTrace(route=[0])
    latency = float(getattr(controller, "latency", 0.0) or 0.0)
    picked: set = set()
    idx = 0
    pending = None  # (decision, ready_time)

    def admit(t) -> int:
        nonlocal idx
        k = 0
        while idx < n and arrivals[idx].arrival <= t + TIME_TOL:
            r = arrivals[idx]
            state.requests[r.id] = r
            state.backlog.append(r.id)
            trace.events.append({"time": r.arrival, "kind": "arrival", "request": r.id, "energy": metrics.energy})
            idx += 1
            k += 1
        return k

    def adopt(dec) -> bool:
        done = set(trace.route)
        plan = [t for t in dec.plan if (t[1] if t[0] == "P" else t[1] + n) not in done]
        if not _apply_plan_check(stream, state.deck, set(state.backlog), plan):
            trace.events.append({"time": state.clock, "kind": "decision_discarded", "hash": dec.digest,
                                 "energy": metrics.energy})
            return False
        state.plan = plan
        trace.events.append({"time": state.clock, "kind": "decision_adopted", "hash": dec.digest,
                             "energy": metrics.energy})
        return True

    new = admit(0.0)
    while True:
        if pending is not None and pending[1] <= state.clock + TIME_TOL:
            dec, _ = pending
            pending = None
            if not adopt(dec):
                new += 1
        if pending is None and controller.wants_decision(state, new):
            dec = controller.decide(state)
            metrics.decisions += 1
            metrics.solver_seconds += dec.seconds
            metrics.relaxed_decisions += dec.status == "relaxed"
            metrics.decision_stats.append(dec.stats())
            trace.events.append({"time": state.clock, "kind": f"decision_{dec.status}", "hash": dec.digest,
                                 "energy": metrics.energy})
            if latency > 0:
                pending = (dec, state.clock + latency)
            else:
                state.plan = list(dec.plan)
        new = 0
        if not state.plan:
            nxt = arrivals[idx].arrival if idx < n else np.inf
            if pending is not None:
                nxt = min(nxt, pending[1])
            if np.isfinite(nxt):
                state.clock = max(state.clock, nxt)
                new = admit(state.clock)
                continue
            if state.backlog or state.deck.containers:
                raise ControllerStalled(f"{len(state.backlog)} requests waiting with an empty plan")
            break
        kind, g = state.plan.pop(0)
        r = state.requests[g]
        if kind == "P":
            if any(k not in picked for k in queues.predecessors(g)):
                raise ControllerStalled(f"pickup {g} ahead of its queue")
            station, vertex = r.origin_pos, g
        else:
            station, vertex = r.dest_pos, g + n
        dist = abs(state.position - station) * stream.unit_length
        depart = state.clock
        metrics.energy += arc_energy(p, dist, state.deck.load)
        metrics.distance += dist
        begin = state.clock + travel_time(p, dist)
        if kind == "D":
            begin = max(begin, r.e - s)
        state.deck = deck_apply(state.deck, vertex, stream)
        state.clock = begin + s
        state.position = float(station)
        if kind == "P":
            picked.add(g)
            state.backlog.remove(g)
        elif state.clock > r.l + TIME_TOL * max(1.0, abs(r.l)):
            metrics.late.append(g)
        trace.route.append(vertex)
        trace.tasks.append({"task": kind, "request": g, "depart": depart, "start": begin, "end": state.clock, "pos": station,
                            "load": state.deck.load, "energy": metrics.energy})
        if kind == "D":
            metrics.completion_time = state.clock
        new = admit(state.clock)

    trace.route.append(stream.end)
    metrics.tw_violations = len(metrics.late)
    if n:
        ev = evaluate_route(stream, trace.route, stop_at_violation=False, check_time_windows=False)
        if not ev.feasible:
            raise RuntimeError(f"executed route fails the deck replay: {ev.message}")
        metrics.replay_energy = ev.energy
    return metrics, trace


def make_controller(kind: str, template: Instance, **kw):
    from .rolling import RollingController, RuleController

    if kind == "rolling":
        return RollingController(template, **kw)
    if kind == "rule":
        return RuleController(template, rule=kw.get("rule"))
    raise ValueError(f"unknown controller {kind!r}")


# -- suites and reports -------------------------------------------------------

RESULT_FIELDS = ("instance", "controller", "Q", "tw", "n", "energy", "distance", "completion_time",
                 "tw_violations", "decisions", "relaxed_decisions", "solver_seconds")


def _suite_job(args):
    cfg, kind, kw = args
    stream = gen_dynamic(cfg)
    metrics, _ = run_experiment(stream, make_controller(kind, stream, **kw))
    row = {"instance": f"dyn-s{cfg.seed}-Q{cfg.Q}-{cfg.tw_mode}", "controller": kind, "Q": cfg.Q,
           "tw": cfg.tw_mode, "n": cfg.n}
    row.update(metrics.row())
    return row


def run_suite(configs, controllers=(("rule", {}), ("rolling", {})), workers: int = 1) -> list[dict]:
    """One row per configuration and controller, in input order."""
    jobs = [(cfg, kind, dict(kw)) for cfg in configs for kind, kw in controllers]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_suite_job, jobs))
    return [_suite_job(j) for j in jobs]


def write_results_csv(rows, path, *, timings: bool = False) -> None:
    """Results table; wall-clock solver time only with ``timings`` so default output is reproducible."""
    fields = RESULT_FIELDS if timings else tuple(f for f in RESULT_FIELDS if f != "solver_seconds")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in r.items()})


def summary_table(rows) -> str:
    """Mean energy per controller for every (Q, windows) cell and the saving of rolling over rule."""
    cells: dict = {}
    for r in rows:
        cells.setdefault((r["tw"], r["Q"]), {}).setdefault(r["controller"], []).append(r["energy"])
    lines = [f"{'windows':<11}{'Q':>3}{'rule':>12}{'rolling':>12}{'saving %':>10}"]
    for (tw, Q) in sorted(cells):
        c = cells[(tw, Q)]
        rule = float(np.mean(c["rule"])) if c.get("rule") else float("nan")
        roll = float(np.mean(c["rolling"])) if c.get("rolling") else float("nan")
        saving = 100.0 * (rule - roll) / rule if rule else float("nan")
        lines.append(f"{tw:<11}{Q:>3}{rule:>12.3f}{roll:>12.3f}{saving:>10.2f}")
    return "\n".join(lines) + "\n"

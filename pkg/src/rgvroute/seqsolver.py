"""Exact solver over visit sequences.

A depth-first branch and bound that only ever extends deck-feasible
partial routes. It is the reference optimum for everything else in the
package and the default backend of the command line tool.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _seqkernels as K
from ._jit import int_map
from .deck import RouteEvaluation, evaluate_route
from .instance import Instance


class Objective(Enum):
    ENERGY = "energy"
    DISTANCE = "distance"

    @classmethod
    def parse(cls, value) -> "Objective":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    LIMIT = "limit"


_REASON_NAMES = {
    K.QUEUE: "queue order",
    K.CAPACITY: "capacity",
    K.BLOCKED: "deck blocked",
    K.DEADLINE: "deadline missed",
    K.NOT_ABOARD: "delivery before pickup",
    K.REACH: "deadline unreachable",
}


class Infeasible(Exception):
    """No route satisfies the deck, queue and deadline rules."""

    def __init__(self, message: str, reasons: dict):
        super().__init__(message)
        self.reasons = reasons


@dataclass
class SeqResult:
    evaluation: RouteEvaluation | None
    objective: Objective
    cost: float
    status: Status
    nodes: int
    seconds: float
    reasons: dict

    @property
    def route(self):
        return self.evaluation.route if self.evaluation else None

    @property
    def energy(self) -> float:
        return self.evaluation.energy

    @property
    def distance(self) -> float:
        return self.evaluation.distance

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def kernel_inputs(inst: Instance):
    n = inst.n
    N = 2 * n
    qpred = np.zeros(n + 1, dtype=np.int64)
    qr = inst.queues
    for r in inst.requests:
        if r.id in qr.queue_of:
            p = qr.pred(r.id)
            qpred[r.id] = p if p is not None else 0
    oside = np.zeros(n + 1, dtype=np.int64)
    dside = np.zeros(n + 1, dtype=np.int64)
    ready = np.zeros(N + 1)
    due = np.full(N + 1, np.inf)
    s = inst.services[: N + 1].copy()
    for r in inst.requests:
        oside[r.id] = int(r.origin_side)
        dside[r.id] = int(r.dest_side)
        ready[r.id + n] = r.e - s[r.id + n]
        if r.has_deadline:
            due[r.id + n] = r.l
    xpos = inst.positions[: N + 1] * inst.unit_length
    return dict(
        n=n,
        Q=int(inst.Q),
        xpos=np.ascontiguousarray(xpos),
        qv=np.ascontiguousarray(inst.loads[: N + 1]),
        serv=s,
        ready=ready,
        due=due,
        oside=oside,
        dside=dside,
        qpred=qpred,
        D=np.ascontiguousarray(inst.distance_matrix[: N + 1, : N + 1]),
        T=np.ascontiguousarray(inst.travel_time_matrix[: N + 1, : N + 1]),
        C=np.ascontiguousarray(inst.energy_coef_matrix[: N + 1, : N + 1]),
    )


def _run(inst: Instance, objective: Objective, prefix, inc_cost, inc_route, node_limit, memo_cap):
    a = kernel_inputs(inst)
    p = inst.rgv
    route, cost, nodes, status, reasons = K.search(
        a["n"], a["Q"], a["xpos"], a["qv"], a["serv"], a["ready"], a["due"], a["oside"], a["dside"],
        a["qpred"], a["D"], a["T"], a["C"], float(p.w_rgv), 0 if objective is Objective.ENERGY else 1,
        float(p.accel), float(p.cruise_speed), float(p.friction), np.asarray(prefix, dtype=np.int64),
        float(inc_cost), np.asarray(inc_route, dtype=np.int64), int(node_limit), int(memo_cap), int_map(),
    )
    return route, float(cost), int(nodes), int(status), reasons


def _worker(args):
    return _run(*args)


def solve_exact(inst: Instance, objective="energy", *, incumbent=None, node_limit: int = 200_000_000,
                memo_cap: int = 1 << 20, workers: int = 1) -> SeqResult:
    """Provably optimal route under ``objective`` (``"energy"`` or ``"distance"``).

    ``incumbent`` is an optional feasible visit order used as the first
    upper bound. Among routes of equal cost the lexicographically smallest
    one found is kept. ``workers > 1`` splits the first free choice over
    processes; the answer does not depend on the split. Raises
    ``Infeasible`` when no route exists.
    """
    objective = Objective.parse(objective)
    t0 = time.perf_counter()
    n = inst.n
    N = 2 * n
    inc_cost, inc_route = np.inf, np.zeros(N + 1, dtype=np.int64)
    if incumbent is not None:
        ev = evaluate_route(inst, incumbent)
        if ev.feasible:
            inc_cost = ev.energy if objective is Objective.ENERGY else ev.distance
            inc_route = np.asarray(ev.route[: N + 1], dtype=np.int64)
    prefix = inst.fixed_prefix or (0,)

    if workers > 1 and N > len(prefix):
        firsts = [v for v in range(1, N + 1) if v not in prefix]
        jobs = [(inst, objective, tuple(prefix) + (v,), inc_cost, inc_route, node_limit, memo_cap) for v in firsts]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_worker, jobs))
        parts.append((inc_route, inc_cost, 0, K.OPTIMAL if np.isfinite(inc_cost) else K.INFEASIBLE,
                      np.zeros(K.N_REASONS, dtype=np.int64)))
        found = [p for p in parts if np.isfinite(p[1])]
        nodes = sum(p[2] for p in parts)
        reasons = sum(p[4] for p in parts)
        limited = any(p[3] in (K.LIMIT_WITH_INCUMBENT, K.LIMIT_NO_INCUMBENT) for p in parts)
        if found:
            best_cost = min(p[1] for p in found)
            tol = 1e-9 * max(1.0, abs(best_cost))
            route, cost = min(((tuple(p[0]), p[1]) for p in found if p[1] <= best_cost + tol), key=lambda rc: rc[0])
            status = K.LIMIT_WITH_INCUMBENT if limited else K.OPTIMAL
        else:
            route, cost = None, np.inf
            status = K.LIMIT_NO_INCUMBENT if limited else K.INFEASIBLE
    else:
        route, cost, nodes, status, reasons = _run(inst, objective, prefix, inc_cost, inc_route, node_limit, memo_cap)
    reason_map = {_REASON_NAMES[k]: int(reasons[k]) for k in _REASON_NAMES if reasons[k]}
    seconds = time.perf_counter() - t0
    if status == K.INFEASIBLE:
        top = max(reason_map, key=reason_map.get) if reason_map else "no task can start"
        raise Infeasible(f"no feasible route; most frequent dead end: {top}", reason_map)
    if status == K.LIMIT_NO_INCUMBENT:
        return SeqResult(None, objective, float("inf"), Status.LIMIT, nodes, seconds, reason_map)
    full = tuple(int(v) for v in route) + (inst.end,)
    ev = evaluate_route(inst, full)
    if not ev.feasible:
        raise RuntimeError(f"search returned an infeasible route {full}: {ev.message}")
    st = Status.OPTIMAL if status == K.OPTIMAL else Status.LIMIT
    return SeqResult(ev, objective, float(cost), st, nodes, seconds, reason_map)


@dataclass
class Enumeration:
    routes: list
    truncated: bool

    def __len__(self):
        return len(self.routes)

    def __iter__(self):
        return iter(self.routes)


def enumerate_feasible(inst: Instance, limit: int = 1_000_000, *, max_n: int = 6) -> Enumeration:
    """Every feasible complete route (deck, queues, capacity, deadlines)."""
    if inst.n > max_n:
        raise ValueError(f"enumeration is guarded to n <= {max_n}; got n = {inst.n}")
    a = kernel_inputs(inst)
    prefix = np.asarray(inst.fixed_prefix or (0,), dtype=np.int64)
    routes, count, truncated = K.enumerate_routes(
        a["n"], a["Q"], a["qv"], a["serv"], a["ready"], a["due"], a["oside"], a["dside"], a["qpred"], a["T"],
        prefix, int(limit),
    )
    end = inst.end
    out = [tuple(int(v) for v in r) + (end,) for r in routes[:count]]
    return Enumeration(out, bool(truncated))

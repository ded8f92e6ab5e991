"""Rolling-horizon control for requests that arrive over time.

At a decision point the controller takes the containers on the deck and
up to ``h`` waiting requests, builds a static instance in which the deck
is rebuilt by virtual pickups, and solves it. Decisions are only taken
between tasks, so the task in progress is never preempted.

Tasks are ``("P", gid)`` or ``("D", gid)`` with ``gid`` the request id in
the global stream.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .constants import DEFAULT_HORIZON, HORIZON_MAX
from .deck import DeckState
from .heuristic import DispatchRule, first_batch
from .instance import Instance, Request
from .milp.augment import augment_initial_load, virtual_order
from .seqsolver import Infeasible, Objective, solve_exact

Task = tuple  # ("P" | "D", gid)


@dataclass
class ControllerState:
    """What the controller sees at a decision point."""

    clock: float
    position: float
    deck: DeckState
    requests: dict  # gid -> Request, every request that has arrived
    backlog: list  # gids waiting at their pickup station, arrival order
    plan: list = field(default_factory=list)  # committed, not yet started
    h: int = DEFAULT_HORIZON

    @property
    def onboard(self) -> list[Request]:
        """Deck containers, north end first."""
        return [self.requests[g] for g in self.deck.containers]

    def unsequenced(self) -> list[int]:
        planned = {g for kind, g in self.plan if kind == "P"}
        return [g for g in self.backlog if g not in planned]


@dataclass
class Decision:
    plan: list
    status: str  # "optimal", "limit", "relaxed", "kept", "idle", "rule"
    clock: float
    n_local: int = 0
    seconds: float = 0.0
    nodes: int = 0
    objective: float = 0.0

    @property
    def digest(self) -> str:
        text = ";".join(f"{k}{g}" for k, g in self.plan)
        return hashlib.sha1(text.encode()).hexdigest()[:12]

    def stats(self) -> dict:
        return {
            "clock": self.clock,
            "status": self.status,
            "n": self.n_local,
            "nodes": self.nodes,
            "seconds": self.seconds,
            "objective": self.objective,
            "hash": self.digest,
        }


def _queue_key(r: Request):
    return (r.origin_pos, int(r.origin_side))


def select_horizon(backlog: Sequence[Request], h: int) -> list[Request]:
    """Up to ``h`` requests, earliest deadline first, closed under queue predecessors."""
    if h < 0:
        raise ValueError("horizon must be >= 0")
    queues: dict = {}
    for r in sorted(backlog, key=lambda r: (r.arrival, r.id)):
        queues.setdefault(_queue_key(r), []).append(r)
    chosen: dict = {}
    for r in sorted(backlog, key=lambda r: (r.l, r.arrival, r.id)):
        if len(chosen) >= h:
            break
        if r.id in chosen:
            continue
        chain = queues[_queue_key(r)]
        need = [p for p in chain[: chain.index(r) + 1] if p.id not in chosen]
        if len(chosen) + len(need) <= h:
            for p in need:
                chosen[p.id] = p
    return sorted(chosen.values(), key=lambda r: (r.arrival, r.id))


def _shift(r: Request, rid: int, clock: float) -> Request:
    l = r.l - clock if r.l < HORIZON_MAX else HORIZON_MAX
    return replace(r, id=rid, e=max(0.0, r.e - clock), l=max(l, 0.0) if l < HORIZON_MAX else l)


def subproblem(state: ControllerState, selected: Sequence[Request], template: Instance) -> tuple[Instance, dict]:
    """Augmented static instance and the map from its task vertices to global tasks.

    Times are shifted so the decision instant is time zero. A deadline that
    has already passed is clamped to zero, which makes the instance
    infeasible rather than silently dropping the window.
    """
    onboard = [_shift(r, k + 1, state.clock) for k, r in enumerate(state.onboard)]
    gid_of_onboard = {k + 1: r.id for k, r in enumerate(state.onboard)}
    waiting = [_shift(r, k + 1, state.clock) for k, r in enumerate(selected)]
    base = replace(template, requests=tuple(waiting), fixed_prefix=())
    aug, _ = augment_initial_load(base, onboard, state.position)
    n0 = len(onboard)
    n = aug.n
    order = virtual_order(onboard)
    vmap = {}
    for h, r in enumerate(order, start=1):
        vmap[h + n] = ("D", gid_of_onboard[r.id])
    for k, r in enumerate(selected, start=1):
        vmap[n0 + k] = ("P", r.id)
        vmap[n0 + k + n] = ("D", r.id)
    return aug, vmap


def _local_tasks(aug: Instance, route, vmap) -> list:
    skip = set(aug.fixed_prefix) | {0, aug.end}
    return [vmap[v] for v in route if v not in skip]


def _solve_milp(aug: Instance, objective: Objective, cuts, time_limit):
    from .heuristic import rule_sequence
    from .milp.model import build_model
    from .milpsolver import solve_milp

    if objective is not Objective.ENERGY:
        raise ValueError("the MILP backend minimises energy only")
    model = build_model(aug, cuts=cuts, floor=True)
    inc = rule_sequence(aug) + [aug.end]
    res = solve_milp(model, time_limit=time_limit, incumbent=inc)
    if res.values is None:
        return None, res
    return res.route, res


def replan(state: ControllerState, template: Instance, *, backend: str = "seq", cuts="g123",
           objective="energy", time_limit: float | None = 60.0) -> Decision:
    """Solve the horizon problem seen from ``state``.

    If no route meets every deadline, the previous plan is kept when it
    still covers the deck; otherwise the horizon is solved with deadlines
    dropped and the decision is flagged ``relaxed``.
    """
    objective = Objective.parse(objective)
    t0 = time.perf_counter()
    backlog = [state.requests[g] for g in state.backlog]
    if not backlog and not state.deck.containers:
        return Decision([], "idle", state.clock)
    selected = select_horizon(backlog, state.h)
    aug, vmap = subproblem(state, selected, template)

    def run(inst):
        if backend == "seq":
            res = solve_exact(inst, objective)
            return res.route, res.status.value, res.nodes, res.cost
        if backend == "milp":
            route, res = _solve_milp(inst, objective, cuts, time_limit)
            if route is None:
                raise Infeasible("MILP found no route", {})
            return route, "optimal" if res.optimal else "limit", res.nodes, res.objective
        if backend == "rule":
            from .heuristic import rule_route

            ev = rule_route(inst)
            return ev.route, "rule", 0, ev.energy
        raise ValueError(f"unknown backend {backend!r}")

    try:
        route, status, nodes, cost = run(aug)
    except Infeasible:
        if state.plan and _plan_covers_deck(state):
            return Decision(list(state.plan), "kept", state.clock, aug.n, time.perf_counter() - t0)
        relaxed = aug.without_deadlines()
        route, _, nodes, cost = run(relaxed)
        status = "relaxed"
    plan = _local_tasks(aug, route, vmap)
    return Decision(plan, status, state.clock, aug.n, time.perf_counter() - t0, nodes, cost)


def _plan_covers_deck(state: ControllerState) -> bool:
    drops = {g for kind, g in state.plan if kind == "D"}
    return all(g in drops for g in state.deck.containers)


class RollingController:
    """Replans on every arrival and after every task while requests are unsequenced."""

    name = "rolling"

    def __init__(self, template: Instance, h: int = DEFAULT_HORIZON, backend: str = "seq", cuts="g123",
                 objective="energy", time_limit: float | None = 60.0, latency: float = 0.0):
        if latency < 0:
            raise ValueError("latency must be >= 0")
        self.template = template
        self.h = h
        self.backend = backend
        self.cuts = cuts
        self.objective = objective
        self.time_limit = time_limit
        self.latency = latency

    def wants_decision(self, state: ControllerState, new_arrivals: int) -> bool:
        if new_arrivals:
            return True
        if state.unsequenced():
            return True
        return not state.plan and bool(state.deck.containers)

    def decide(self, state: ControllerState) -> Decision:
        return replan(state, self.template, backend=self.backend, cuts=self.cuts, objective=self.objective,
                      time_limit=self.time_limit)


class RuleController:
    """Rule-based batches: load in rule order, then empty the deck."""

    name = "rule"
    latency = 0.0
    h = None

    def __init__(self, template: Instance, rule: DispatchRule | str | None = None):
        self.template = template
        self.rule = rule

    def wants_decision(self, state: ControllerState, new_arrivals: int) -> bool:
        return not state.plan and bool(state.backlog or state.deck.containers)

    def decide(self, state: ControllerState) -> Decision:
        t0 = time.perf_counter()
        backlog = [state.requests[g] for g in state.backlog]
        selected = sorted(backlog, key=lambda r: (r.arrival, r.id))
        aug, vmap = subproblem(state, selected, self.template)
        route = first_batch(aug, self.rule)
        plan = _local_tasks(aug, route, vmap)
        return Decision(plan, "rule", state.clock, aug.n, time.perf_counter() - t0)

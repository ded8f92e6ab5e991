"""Deck model: the physical feasibility oracle.

The deck is a deque ordered north to south. A pickup from a north-side
station pushes its container onto the north end, a south-side pickup onto
the south end. A delivery can only roll off the container sitting at the end
that faces the destination side. No other physics is modelled, and the six
pairwise service cases follow from this alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from typing import Sequence

from .constants import TIME_TOL
from .instance import Instance, RequestType, Side
from .kinematics import arc_energy, travel_time


class Violation(Enum):
    DECK_BLOCKED = "DeckBlocked"
    CAPACITY_EXCEEDED = "CapacityExceeded"
    QUEUE_ORDER_VIOLATED = "QueueOrderViolated"
    PRECEDENCE_VIOLATED = "PrecedenceViolated"
    TIME_WINDOW_MISSED = "TimeWindowMissed"


class Case(Enum):
    LIFO = "LIFO"
    FIFO = "FIFO"
    CFI = "CFI"  # crossing request first in
    CLO = "CLO"  # crossing request last out
    DEADLOCK = "DEADLOCK"
    FREE = "FREE"


class Blocked(Exception):
    """A physically impossible deck operation (not a malformed input)."""

    def __init__(self, violation: Violation, message: str):
        super().__init__(message)
        self.violation = violation


@dataclass(frozen=True)
class DeckState:
    containers: tuple[int, ...] = ()
    load: int = 0

    def __contains__(self, rid: int) -> bool:
        return rid in self.containers


def deck_apply(state: DeckState, task: int, inst: Instance) -> DeckState:
    """Apply one pickup or delivery; raises ``Blocked`` or ``ValueError``."""
    if not (inst.is_pickup(task) or inst.is_delivery(task)):
        raise ValueError(f"vertex {task} is not a task vertex")
    req = inst.request(task)
    rid = req.id
    if inst.is_pickup(task):
        if rid in state.containers:
            raise ValueError(f"container {rid} is already aboard")
        if state.load + req.q > inst.Q:
            raise Blocked(Violation.CAPACITY_EXCEEDED, f"pickup {task} exceeds capacity {inst.Q}")
        if req.origin_side is Side.NORTH:
            deck = (rid,) + state.containers
        else:
            deck = state.containers + (rid,)
        return DeckState(deck, state.load + req.q)
    if rid not in state.containers:
        raise ValueError(f"container {rid} is not aboard")
    if req.dest_side is Side.NORTH:
        if state.containers[0] != rid:
            raise Blocked(Violation.DECK_BLOCKED, f"delivery {task}: north end holds {state.containers[0]}")
        deck = state.containers[1:]
    else:
        if state.containers[-1] != rid:
            raise Blocked(Violation.DECK_BLOCKED, f"delivery {task}: south end holds {state.containers[-1]}")
        deck = state.containers[:-1]
    return DeckState(deck, state.load - req.q)


def can_unload_all(containers: Sequence[int], dest_sides: dict) -> bool:
    """True if every container can roll off by repeatedly popping a matching end."""
    deck = list(containers)
    lo, hi = 0, len(deck) - 1
    # Popping whichever end is currently free never hurts: each pop only
    # frees its own end, so a greedy sweep decides feasibility exactly.
    while lo <= hi:
        if dest_sides[deck[lo]] == Side.NORTH:
            lo += 1
        elif dest_sides[deck[hi]] == Side.SOUTH:
            hi -= 1
        else:
            return False
    return True


@dataclass
class RouteEvaluation:
    feasible: bool
    route: tuple[int, ...]
    b: dict = field(default_factory=dict)
    w: dict = field(default_factory=dict)
    energy: float = 0.0
    distance: float = 0.0
    completion_time: float = 0.0
    violation: Violation | None = None
    message: str = ""
    waited: bool = False

    @property
    def tw_violations(self) -> int:
        return int(self.violation is Violation.TIME_WINDOW_MISSED)


def check_route_shape(inst: Instance, order: Sequence[int]) -> tuple[int, ...]:
    order = tuple(int(v) for v in order)
    n = inst.n
    if len(order) != 2 * n + 2 or order[0] != 0 or order[-1] != 2 * n + 1:
        raise ValueError("a route must start at 0, end at 2n+1 and visit every task once")
    if sorted(order[1:-1]) != list(range(1, 2 * n + 1)):
        raise ValueError("a route must visit every task vertex exactly once")
    return order


def evaluate_route(inst: Instance, visit_order: Sequence[int], *, stop_at_violation: bool = True,
                   check_time_windows: bool = True) -> RouteEvaluation:
    """Simulate ``visit_order`` on the deck and compute its schedule and cost.

    Start times chain without idling, ``b_j = b_i + s_i + t_ij``, except that
    a delivery waits for an early window to open. With
    ``stop_at_violation=False`` a deadline miss is recorded but the schedule
    is still completed, which is how the simulator counts late deliveries.
    """
    order = check_route_shape(inst, visit_order)
    n = inst.n
    p = inst.rgv
    queues = inst.queues
    ev = RouteEvaluation(True, order)
    prefix = inst.fixed_prefix
    if prefix and order[: len(prefix)] != prefix:
        ev.feasible = False
        ev.violation = Violation.PRECEDENCE_VIOLATED
        ev.message = "route does not start with the fixed prefix"
        return ev

    state = DeckState()
    picked = set()
    t = 0.0
    ev.b[0] = 0.0
    ev.w[0] = 0
    prev = 0
    last_delivery_time = 0.0
    for v in order[1:]:
        r = inst.distance_matrix[prev, v]
        ev.energy += arc_energy(p, r, state.load) if v != inst.end else 0.0
        if v != inst.end:
            ev.distance += r
        t = t + inst.service(prev) + (travel_time(p, r) if v != inst.end else 0.0)
        if v == inst.end:
            ev.b[v] = t
            ev.w[v] = state.load
            break
        req = inst.request(v)
        if inst.is_pickup(v):
            pred = queues.pred(v) if v in queues.queue_of else None
            if pred is not None and pred not in picked:
                ev.violation = Violation.QUEUE_ORDER_VIOLATED
                ev.message = f"pickup {v} before its queue predecessor {pred}"
                ev.feasible = False
                return ev
            picked.add(v)
        else:
            if req.id not in picked:
                ev.violation = Violation.PRECEDENCE_VIOLATED
                ev.message = f"delivery {v} before pickup {req.id}"
                ev.feasible = False
                return ev
            ready = req.e - inst.service(v)
            if t < ready:
                t = ready
                ev.waited = True
        try:
            state = deck_apply(state, v, inst)
        except Blocked as exc:
            ev.violation = exc.violation
            ev.message = str(exc)
            ev.feasible = False
            return ev
        ev.b[v] = t
        ev.w[v] = state.load
        if inst.is_delivery(v):
            last_delivery_time = t + inst.service(v)
            if check_time_windows and last_delivery_time > req.l + TIME_TOL * max(1.0, abs(req.l)):
                if ev.violation is None:
                    ev.violation = Violation.TIME_WINDOW_MISSED
                    ev.message = f"request {req.id} completes at {last_delivery_time:.6g} > deadline {req.l:.6g}"
                ev.feasible = False
                if stop_at_violation:
                    return ev
        prev = v
    ev.completion_time = ev.b.get(inst.end, last_delivery_time)
    return ev


def late_requests(inst: Instance, ev: RouteEvaluation) -> list[int]:
    """Requests whose delivery completes after the deadline in ``ev``."""
    n = inst.n
    out = []
    for r in inst.requests:
        b = ev.b.get(r.id + n)
        if b is not None and b + inst.service(r.id + n) > r.l + TIME_TOL * max(1.0, abs(r.l)):
            out.append(r.id)
    return out


# -- pairwise cases ---------------------------------------------------------

_CASES = {
    frozenset([RequestType.T1]): Case.LIFO,
    frozenset([RequestType.T2]): Case.LIFO,
    frozenset([RequestType.T3]): Case.FIFO,
    frozenset([RequestType.T4]): Case.FIFO,
    frozenset([RequestType.T1, RequestType.T3]): Case.CFI,
    frozenset([RequestType.T2, RequestType.T4]): Case.CFI,
    frozenset([RequestType.T1, RequestType.T4]): Case.CLO,
    frozenset([RequestType.T2, RequestType.T3]): Case.CLO,
    frozenset([RequestType.T3, RequestType.T4]): Case.DEADLOCK,
    frozenset([RequestType.T1, RequestType.T2]): Case.FREE,
}

#: The crossing (side-changing) member of each mixed case.
_CROSSING = {RequestType.T3, RequestType.T4}


def pairwise_case(t1: RequestType, t2: RequestType) -> Case:
    return _CASES[frozenset([t1, t2])]


def case_allows(t_first: RequestType, t_second: RequestType, nested: bool) -> bool:
    """Whether two overlapping services are allowed by the case rules.

    ``t_first`` is picked up first. The second pickup happens while the first
    container is aboard; ``nested`` means the second container also leaves
    first, otherwise the first-in is first-out.
    """
    case = pairwise_case(t_first, t_second)
    if case is Case.FREE:
        return True
    if case is Case.DEADLOCK:
        return False
    if case is Case.LIFO:
        return nested
    if case is Case.FIFO:
        return not nested
    if case is Case.CFI:
        return t_first in _CROSSING
    # CLO: the crossing request must be the last one out.
    last_out = t_first if nested else t_second
    return last_out in _CROSSING


def deck_feasible_orders(types: Sequence[RequestType]) -> set:
    """All feasible visit orders (tasks only) of requests with the given types.

    Requests sit at distinct stations, so only the deck decides. Used as an
    exhaustive reference in tests and by the rule heuristic for tiny decks.
    """
    from .instance import make_instance

    sides = {
        RequestType.T1: ("N", "N"),
        RequestType.T2: ("S", "S"),
        RequestType.T3: ("N", "S"),
        RequestType.T4: ("S", "N"),
    }
    k = len(types)
    specs = [(2 * i + 1, sides[t][0], 2 * i + 2, sides[t][1]) for i, t in enumerate(types)]
    inst = make_instance(specs, m=2 * k + 2, Q=k)
    ok = set()
    for perm in permutations(range(1, 2 * k + 1)):
        ev = evaluate_route(inst, (0,) + perm + (2 * k + 1,))
        if ev.feasible:
            ok.add(perm)
    return ok

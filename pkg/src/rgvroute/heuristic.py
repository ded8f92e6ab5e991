"""Rule-based baseline dispatcher.

The vehicle works in batches. It loads containers in rule order for as long
as capacity allows and the deck stays unloadable, then delivers everything
before it touches another pickup.
"""
from __future__ import annotations

from enum import Enum

from .deck import DeckState, RouteEvaluation, can_unload_all, deck_apply, evaluate_route
from .instance import Instance, Side


class DispatchRule(Enum):
    EARLIEST_ARRIVAL_FIRST = "eaf"
    EARLIEST_DUE_FIRST = "edf"

    @classmethod
    def parse(cls, value) -> "DispatchRule":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for r in cls:
            if key in (r.value, r.name.lower()):
                return r
        raise ValueError(f"unknown dispatch rule {value!r}")


def default_rule(inst: Instance) -> DispatchRule:
    if any(r.has_deadline for r in inst.requests):
        return DispatchRule.EARLIEST_DUE_FIRST
    return DispatchRule.EARLIEST_ARRIVAL_FIRST


def _key(inst: Instance, rule: DispatchRule):
    """Sort key of pickup ``i`` seen from position ``pos``; equal rule keys go nearest station first."""
    if rule is DispatchRule.EARLIEST_DUE_FIRST:
        return lambda i, pos: (inst.request(i).l, abs(inst.pos(i) - pos), inst.request(i).arrival, i)
    return lambda i, pos: (inst.request(i).arrival, abs(inst.pos(i) - pos), i)


def _eligible(inst: Instance, i: int, picked: set) -> bool:
    return all(p in picked for p in inst.queues.predecessors(i))


def _fits(inst: Instance, state: DeckState, i: int) -> DeckState | None:
    if state.load + inst.request(i).q > inst.Q:
        return None
    nxt = deck_apply(state, i, inst)
    sides = {rid: inst.requests[rid - 1].dest_side for rid in nxt.containers}
    return nxt if can_unload_all(nxt.containers, sides) else None


def _unload_order(inst: Instance, state: DeckState, pos: float) -> list[int]:
    """Delivery vertices emptying ``state``; both ends free means nearest first."""
    n = inst.n
    deck = list(state.containers)
    out = []
    while deck:
        north, south = deck[0], deck[-1]
        opts = []
        if inst.requests[north - 1].dest_side is Side.NORTH:
            opts.append(north)
        if inst.requests[south - 1].dest_side is Side.SOUTH and south not in opts:
            opts.append(south)
        if not opts:
            raise RuntimeError("deck cannot be emptied; loading check was bypassed")
        rid = min(opts, key=lambda k: (abs(inst.requests[k - 1].dest_pos - pos), k))
        deck.remove(rid)
        out.append(rid + n)
        pos = inst.requests[rid - 1].dest_pos
    return out


def _load_phase(inst: Instance, state: DeckState, picked: set, key, pos: float) -> tuple[list[int], DeckState]:
    loaded = []
    while True:
        cands = sorted((i for i in range(1, inst.n + 1) if i not in picked and _eligible(inst, i, picked)),
                       key=lambda i: key(i, pos))
        for i in cands:
            nxt = _fits(inst, state, i)
            if nxt is not None:
                state = nxt
                picked.add(i)
                loaded.append(i)
                pos = inst.pos(i)
                break
        else:
            return loaded, state


def _prefix_state(inst: Instance) -> tuple[list[int], DeckState, set]:
    route = list(inst.fixed_prefix) or [0]
    state = DeckState()
    picked = set()
    for v in route[1:]:
        state = deck_apply(state, v, inst)
        if inst.is_pickup(v):
            picked.add(v)
    return route, state, picked


def rule_sequence(inst: Instance, rule: DispatchRule | str | None = None, *, batches: int | None = None) -> list[int]:
    """Visit order produced by the rule, without the end vertex.

    ``batches`` stops after that many load/deliver cycles; the dynamic
    controller uses ``batches=1``.
    """
    rule = default_rule(inst) if rule is None else DispatchRule.parse(rule)
    key = _key(inst, rule)
    route, state, picked = _prefix_state(inst)
    done = 0
    while True:
        pos = inst.pos(route[-1])
        if state.containers:
            # empty the deck before the next pickup, prefix containers included
            drops = _unload_order(inst, state, pos)
            route += drops
            state = DeckState()
            continue
        if len(picked) == inst.n or (batches is not None and done >= batches):
            return route
        loaded, state = _load_phase(inst, state, picked, key, pos)
        route += loaded
        done += 1


def rule_route(inst: Instance, rule: DispatchRule | str | None = None) -> RouteEvaluation:
    """Full rule-based route with its evaluation (deadline misses are reported, not fatal)."""
    order = rule_sequence(inst, rule) + [inst.end]
    return evaluate_route(inst, order, stop_at_violation=False)


def first_batch(inst: Instance, rule: DispatchRule | str | None = None) -> list[int]:
    """Task vertices of the next load/deliver cycle, start vertex excluded."""
    return rule_sequence(inst, rule, batches=1)[1:]


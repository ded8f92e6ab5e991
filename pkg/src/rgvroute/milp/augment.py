"""Containers already on the deck, encoded as virtual pickups.

Each onboard container becomes a virtual request whose pickup sits at the
RGV's current position and costs nothing to visit. North-destined
containers become ``T1`` requests and south-destined ones ``T2``. Visiting
the virtual pickups ``1, 2, ..., n0`` in order rebuilds the current deck,
so a route of the augmented instance is a route of the original one with
that prefix in front.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Sequence

from ..deck import can_unload_all
from ..instance import Instance, Request, Side
from .arcs import complete_arcs


def split_deck(onboard: Sequence[Request]) -> tuple[list[Request], list[Request]]:
    """North-destined block (north end first) and south-destined block.

    A deck that still unloads is always a north-destined block followed by
    a south-destined one; anything else is rejected.
    """
    sides = {k: r.dest_side for k, r in enumerate(onboard)}
    if not can_unload_all(list(range(len(onboard))), sides):
        raise ValueError("onboard containers cannot all be unloaded from this deck order")
    north = [r for r in onboard if r.dest_side is Side.NORTH]
    south = [r for r in onboard if r.dest_side is Side.SOUTH]
    return north, south


def virtual_order(onboard: Sequence[Request]) -> list[Request]:
    """Onboard requests in the order their virtual pickups are visited.

    North-side pushes go to the north end, so the innermost north-destined
    container is loaded first. The south block mirrors this.
    """
    north, south = split_deck(onboard)
    return list(reversed(north)) + south


def augment_initial_load(inst: Instance, onboard: Sequence[Request], rgv_pos) -> tuple[Instance, frozenset]:
    """Augmented instance and its fixed arcs out of ``{0} ∪ P0``.

    ``inst`` holds the requests still waiting at stations; its request
    ``k`` becomes request ``n0 + k``. ``onboard`` lists the deck from the
    north end; the virtual request ``h`` stands for ``virtual_order(onboard)[h - 1]``.
    Times are taken as given, so callers shift them to the replanning instant.
    """
    order = virtual_order(onboard)
    n0 = len(order)
    if n0 == 0:
        aug = replace(inst, start_pos=rgv_pos)
        return aug, frozenset()
    reqs = []
    for h, r in enumerate(order, start=1):
        side = r.dest_side
        reqs.append(Request(h, rgv_pos, side, r.dest_pos, side, q=r.q, arrival=0.0, e=r.e, l=r.l, virtual=True))
    for r in inst.requests:
        reqs.append(replace(r, id=r.id + n0))
    if sum(r.q for r in order) > inst.Q:
        raise ValueError("onboard load exceeds capacity")
    aug = replace(inst, requests=tuple(reqs), start_pos=rgv_pos, fixed_prefix=tuple(range(0, n0 + 1)))
    return aug, prefix_arcs(aug)


def prefix_arcs(aug: Instance) -> frozenset:
    """The arcs of the complete set that leave ``0`` or a virtual pickup."""
    n0 = len(aug.fixed_prefix) - 1
    if n0 <= 0:
        return frozenset()
    return frozenset(a for a in complete_arcs(aug).arcs if a[0] <= n0)

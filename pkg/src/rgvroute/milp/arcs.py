"""Arc sets of the routing graph.

``reduce_arcs`` drops arcs that no physically executable route can use:
start arcs to non-head pickups, queue-order violations, arcs that force two
incompatible containers to share the deck, and capacity-counting exclusions
along long queues of crossing requests.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..instance import Instance

T1, T2, T3, T4 = 1, 2, 3, 4


class ArcMode(Enum):
    COMPLETE = "complete"
    REDUCED = "reduced"


@dataclass(frozen=True)
class ArcSet:
    arcs: frozenset
    mode: ArcMode
    n: int

    def __contains__(self, arc) -> bool:
        return arc in self.arcs

    def __len__(self) -> int:
        return len(self.arcs)

    def __iter__(self):
        return iter(sorted(self.arcs))

    def out_of(self, i: int) -> list[int]:
        return sorted(j for (a, j) in self.arcs if a == i)

    def into(self, j: int) -> list[int]:
        return sorted(i for (i, b) in self.arcs if b == j)

    def inner(self) -> list[tuple[int, int]]:
        """Arcs between task vertices (both ends in pickups or deliveries)."""
        end = 2 * self.n + 1
        return [a for a in sorted(self.arcs) if a[0] != 0 and a[1] != end]


def _virtual_split(inst: Instance):
    """Numbers of north- and south-destined containers encoded as virtual pickups."""
    virt = [r for r in inst.requests if r.virtual]
    n01 = sum(1 for r in virt if int(r.dest_side) == 0)
    return len(virt), n01, len(virt) - n01


def _apply_fixed_prefix(inst: Instance, arcs: set, allowed_after_prefix) -> set:
    n0, n01, n02 = _virtual_split(inst)
    if n0 == 0:
        return arcs
    chain = set(range(0, n0 + 1))
    kept = {(i, j) for (i, j) in arcs if i not in chain and j not in chain}
    kept |= {(k, k + 1) for k in range(n0)}
    kept |= {(n0, j) for j in allowed_after_prefix}
    return kept


def _prefix_successors(inst: Instance, heads_only: bool) -> set:
    """Vertices that may follow the last virtual pickup."""
    n = inst.n
    n0, n01, n02 = _virtual_split(inst)
    types = inst.type_codes
    qr = inst.queues
    out = set()
    for r in inst.requests:
        if r.virtual or (heads_only and not qr.is_head(r.id)):
            continue
        t = types[r.id]
        if t in (T1, T2) or (t == T3 and n01 == 0) or (t == T4 and n02 == 0):
            out.add(r.id)
    # outermost north-destined and outermost south-destined containers
    if n01 > 0:
        out.add(n01 + n)
    if n02 > 0:
        out.add(n0 + n)
    return out


def complete_arcs(inst: Instance) -> ArcSet:
    n = inst.n
    end = 2 * n + 1
    arcs = set()
    for i in range(0, 2 * n + 1):
        for j in range(1, end + 1):
            if i == j or (i > n and i - n == j):
                continue
            arcs.add((i, j))
    arcs = _apply_fixed_prefix(inst, arcs, _prefix_successors(inst, heads_only=False))
    return ArcSet(frozenset(arcs), ArcMode.COMPLETE, n)


def reduce_arcs(inst: Instance, *, literal_end_rule: bool = False) -> ArcSet:
    """Reduced arc set.

    With ``literal_end_rule`` a delivery may close the route only when its
    pickup is a queue tail. That rule cuts off optimal routes in which a
    later request of the same queue is served entirely inside this one, so
    by default an end arc is dropped only when some request queued behind
    cannot be nested.
    """
    n = inst.n
    end = 2 * n + 1
    Q = inst.Q
    qr = inst.queues
    ty = inst.type_codes
    q = inst.loads
    P = [r.id for r in inst.requests]
    real = [r.id for r in inst.requests if not r.virtual]
    north_origin = {i for i in P if ty[i] in (T1, T3)}

    def behind(j, i):  # j ▷ i
        return qr.ahead(i, j)

    def between(a, b, t):
        """Requests of type ``t`` queued strictly between ``a`` and ``b``."""
        if not qr.ahead(a, b):
            return 0
        lo, hi = qr.rank[a], qr.rank[b]
        chain = qr.chains[qr.queue_of[a]]
        return sum(1 for k in chain[lo + 1 : hi] if ty[k] == t)

    arcs = set()
    # start arcs: queue heads only
    for j in real:
        if qr.is_head(j):
            arcs.add((0, j))

    # end arcs
    for r in P:
        succ = qr.successors(r)
        if literal_end_rule:
            ok = not succ
        else:
            blocking = T3 if r in north_origin else T4
            ok = not any(ty[k] == blocking or q[r] + q[k] > Q for k in succ)
        if ok:
            arcs.add((r + n, end))

    # pickup -> task
    for i in P:
        s = qr.succ(i)
        for j in P:
            if j == i:
                continue
            if qr.ahead(j, i):  # S_P1
                continue
            if s is not None and behind(j, s):  # S_P2
                continue
            if ty[i] in (T1, T4) and ty[j] == T3:  # S_P3
                continue
            if ty[i] in (T2, T3) and ty[j] == T4:  # S_P4
                continue
            arcs.add((i, j))
        for jr in P:
            j = jr + n
            if behind(jr, i):  # S_D1
                continue
            if ty[i] in (T1, T3) and ty[jr] in (T1, T4) and jr != i:  # S_D2
                continue
            if ty[i] in (T2, T4) and ty[jr] in (T2, T3) and jr != i:  # S_D3
                continue
            arcs.add((i, j))

    # delivery -> task
    for r in P:
        i = r + n
        for j in P:
            if j == r:
                continue
            if qr.ahead(j, r):  # S_P5
                continue
            if ty[r] == T1 and between(r, j, T3) > 0:  # S_P6
                continue
            if ty[r] == T2 and between(r, j, T4) > 0:  # S_P7
                continue
            if ty[r] == T3 and between(r, j, T3) >= Q:  # S_P8
                continue
            if ty[r] == T4 and between(r, j, T4) >= Q:  # S_P9
                continue
            arcs.add((i, j))
        for jr in P:
            if jr == r:
                continue
            j = jr + n
            if ty[r] in (T1, T2) and behind(jr, r):  # S_D4
                continue
            if ty[r] in (T3, T4) and qr.ahead(jr, r):  # S_D5
                continue
            if (ty[r] == T3 and between(r, jr, T3) >= Q) or (ty[r] == T4 and between(r, jr, T4) >= Q):  # S_D6
                continue
            if ty[r] == T3 and ty[jr] in (T2, T4):  # S_D7
                continue
            if ty[r] == T4 and ty[jr] in (T1, T3):  # S_D8
                continue
            arcs.add((i, j))

    arcs = _apply_fixed_prefix(inst, arcs, _prefix_successors(inst, heads_only=True))
    return ArcSet(frozenset(arcs), ArcMode.REDUCED, n)


def arc_stats(inst: Instance, arcs: ArcSet) -> dict:
    n = inst.n
    return {
        "arcs": len(arcs),
        "complete_2n+1_squared": (2 * n + 1) ** 2,
        "complete_2n+2_squared": (2 * n + 2) ** 2,
        "complete_simple": len(complete_arcs(inst)),
    }

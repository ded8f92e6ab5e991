from itertools import permutations, product

import pytest
from hypothesis import given, settings, strategies as st

from rgvroute.deck import (
    Blocked,
    Case,
    DeckState,
    Violation,
    can_unload_all,
    case_allows,
    deck_apply,
    evaluate_route,
    pairwise_case,
)
from rgvroute.instance import RequestType, Side, make_instance
from rgvroute.kinematics import arc_energy

T1, T2, T3, T4 = RequestType.T1, RequestType.T2, RequestType.T3, RequestType.T4
SIDES = {T1: ("N", "N"), T2: ("S", "S"), T3: ("N", "S"), T4: ("S", "N")}


def two_request_instance(ta, tb, Q=2):
    return make_instance(
        [(1, SIDES[ta][0], 3, SIDES[ta][1]), (2, SIDES[tb][0], 4, SIDES[tb][1])], m=4, Q=Q
    )


def test_pairwise_case_table():
    assert pairwise_case(T1, T2) is Case.FREE
    assert pairwise_case(T3, T4) is Case.DEADLOCK
    assert pairwise_case(T1, T1) is Case.LIFO
    assert pairwise_case(T2, T2) is Case.LIFO
    assert pairwise_case(T3, T3) is Case.FIFO
    assert pairwise_case(T4, T4) is Case.FIFO
    assert pairwise_case(T1, T3) is pairwise_case(T3, T1) is Case.CFI
    assert pairwise_case(T2, T4) is Case.CFI
    assert pairwise_case(T1, T4) is pairwise_case(T2, T3) is Case.CLO


def interleavings():
    for perm in permutations([1, 2, 3, 4]):
        if perm.index(1) < perm.index(3) and perm.index(2) < perm.index(4):
            yield perm


def case_verdict(ta, tb, order):
    types = {1: ta, 2: tb}
    first = order[0]
    second = 2 if first == 1 else 1
    if order.index(first + 2) < order.index(second):
        return True  # services do not overlap
    nested = order.index(second + 2) < order.index(first + 2)
    return case_allows(types[first], types[second], nested)


@pytest.mark.parametrize("ta,tb", list(product(RequestType, repeat=2)))
def test_deque_matches_case_rules(ta, tb):
    inst = two_request_instance(ta, tb)
    for order in interleavings():
        ev = evaluate_route(inst, (0,) + order + (5,))
        assert ev.feasible == case_verdict(ta, tb, order), (ta, tb, order, ev.message)
        if not ev.feasible:
            assert ev.violation is Violation.DECK_BLOCKED


def test_cfi_deadlock_example():
    # k in T1 aboard, then j in T3 picked: no continuation works
    inst = two_request_instance(T1, T3)
    s = deck_apply(deck_apply(DeckState(), 1, inst), 2, inst)
    for first in (3, 4):
        with pytest.raises(Blocked):
            deck_apply(s, first, inst)


def test_t3_t4_cannot_share():
    inst = two_request_instance(T3, T4)
    for a, b in ((1, 2), (2, 1)):
        s = deck_apply(deck_apply(DeckState(), a, inst), b, inst)
        for d in (3, 4):
            with pytest.raises(Blocked):
                deck_apply(s, d, inst)


def test_round_trip_and_structural_errors():
    inst = two_request_instance(T1, T2)
    s = deck_apply(DeckState(), 1, inst)
    assert s == DeckState((1,), 1)
    assert deck_apply(s, 3, inst) == DeckState()
    with pytest.raises(ValueError):
        deck_apply(s, 1, inst)
    with pytest.raises(ValueError):
        deck_apply(s, 4, inst)
    with pytest.raises(ValueError):
        deck_apply(s, 0, inst)


def test_capacity():
    inst = two_request_instance(T1, T2, Q=1)
    s = deck_apply(DeckState(), 1, inst)
    with pytest.raises(Blocked) as err:
        deck_apply(s, 2, inst)
    assert err.value.violation is Violation.CAPACITY_EXCEEDED


def test_single_request_energy():
    inst = make_instance([(2, "N", 6, "N")], m=6, Q=1, start_pos=2)
    ev = evaluate_route(inst, [0, 1, 2, 3])
    assert ev.feasible
    assert ev.distance == 4
    assert ev.energy == pytest.approx(arc_energy(inst.rgv, 4, 1))
    assert ev.b[2] == pytest.approx(0.5 + 5.0)
    assert ev.completion_time == pytest.approx(ev.b[2] + 0.5)
    assert ev.w == {0: 0, 1: 1, 2: 0, 3: 0}


def test_queue_order_violation():
    inst = make_instance([(2, "N", 5, "N", 1, 0.0), (2, "N", 6, "S", 1, 1.0)], m=6, Q=2)
    ev = evaluate_route(inst, [0, 2, 4, 1, 3, 5])
    assert not ev.feasible and ev.violation is Violation.QUEUE_ORDER_VIOLATED


def test_lifo_violation():
    inst = two_request_instance(T1, T1)
    ev = evaluate_route(inst, [0, 1, 2, 3, 4, 5])
    assert not ev.feasible and ev.violation is Violation.DECK_BLOCKED


def test_precedence_violation_and_malformed():
    inst = two_request_instance(T1, T2)
    ev = evaluate_route(inst, [0, 3, 1, 2, 4, 5])
    assert ev.violation is Violation.PRECEDENCE_VIOLATED
    with pytest.raises(ValueError):
        evaluate_route(inst, [0, 1, 3, 2, 5])
    with pytest.raises(ValueError):
        evaluate_route(inst, [1, 0, 3, 2, 4, 5])


def test_deadline_and_waiting():
    inst = make_instance([(1, "N", 4, "N", 1, 0.0, 3.0)], m=4, Q=1, start_pos=1)
    ev = evaluate_route(inst, [0, 1, 2, 3])
    assert not ev.feasible and ev.violation is Violation.TIME_WINDOW_MISSED
    from dataclasses import replace
    early = inst.with_requests([replace(inst.requests[0], e=20.0, l=1e6)])
    ev = evaluate_route(early, [0, 1, 2, 3])
    assert ev.feasible and ev.waited
    assert ev.b[2] + 0.5 == pytest.approx(20.0)


def test_greedy_unload_check():
    dest = {1: Side.NORTH, 2: Side.SOUTH, 3: Side.NORTH}
    assert can_unload_all([1, 2], dest)
    assert not can_unload_all([2, 1], dest)
    assert not can_unload_all([1, 2, 3], dest)
    assert can_unload_all([3, 1, 2], dest)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 6), st.sampled_from("NS"), st.integers(1, 6), st.sampled_from("NS"),
                          st.integers(1, 2)), min_size=1, max_size=4),
       st.randoms(use_true_random=False))
def test_random_route_invariants(specs, rnd):
    inst = make_instance(specs, m=6, Q=3, start_pos=3)
    n = inst.n
    order = list(range(1, 2 * n + 1))
    rnd.shuffle(order)
    ev = evaluate_route(inst, [0] + order + [2 * n + 1])
    if ev.feasible:
        assert ev.w[2 * n + 1] == 0
        assert all(0 <= w <= inst.Q for w in ev.w.values())
        p = inst.rgv
        assert ev.energy >= p.friction * ev.distance * p.w_rgv - 1e-9
        for r in inst.requests:
            assert ev.b[r.id + n] >= ev.b[r.id] + inst.service(r.id) - 1e-12

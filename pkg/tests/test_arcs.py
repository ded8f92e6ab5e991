import pytest

from rgvroute.instance import make_instance
from rgvroute.milp.arcs import ArcMode, complete_arcs, reduce_arcs
from rgvroute.simulator import random_instance
from oracles import brute_force_routes


def route_arcs(route):
    return set(zip(route, route[1:]))


def test_single_request_chain():
    inst = make_instance([(2, "N", 4, "S")], m=4, Q=1)
    assert set(reduce_arcs(inst).arcs) == {(0, 1), (1, 2), (2, 3)}


def test_t3_t4_pickups_not_adjacent():
    inst = make_instance([(1, "N", 3, "S"), (2, "S", 4, "N")], m=4, Q=2)
    arcs = reduce_arcs(inst)
    assert (1, 2) not in arcs and (2, 1) not in arcs
    # and no feasible route uses them
    for r in brute_force_routes(inst):
        assert not ({(1, 2), (2, 1)} & route_arcs(r))


def test_reduced_is_subset_of_complete():
    for seed in range(20):
        inst = random_instance(seed, 5, 3, 2)
        red, comp = reduce_arcs(inst), complete_arcs(inst)
        assert red.mode is ArcMode.REDUCED and comp.mode is ArcMode.COMPLETE
        assert red.arcs <= comp.arcs
        n = inst.n
        for (i, j) in comp.arcs:
            assert i != j and not (i > n and i - n == j) and j != 0 and i != 2 * n + 1


@pytest.mark.parametrize("seed", range(40))
def test_reduction_keeps_every_feasible_arc(seed):
    n = 2 + seed % 3
    inst = random_instance(seed, n, 3, 1 + seed % 3, q_max=2)
    arcs = reduce_arcs(inst)
    for r in brute_force_routes(inst):
        assert route_arcs(r) <= arcs.arcs, r


def test_literal_end_rule_loses_a_feasible_optimum():
    # two north-side requests in one queue: serving the second one nested in
    # the first ends the route at the first request's delivery
    inst = make_instance([(1, "N", 5, "N", 1, 0.0), (1, "N", 3, "N", 1, 1.0)], m=5, Q=2, start_pos=1)
    literal = reduce_arcs(inst, literal_end_rule=True)
    assert (3, 5) not in literal
    routes = brute_force_routes(inst)
    assert (0, 1, 2, 4, 3, 5) in routes
    assert (3, 5) in reduce_arcs(inst)

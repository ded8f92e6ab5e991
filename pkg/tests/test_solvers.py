from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from oracles import brute_force_routes

from rgvroute.deck import evaluate_route
from rgvroute.instance import make_instance
from rgvroute.kinematics import arc_energy
from rgvroute.milp.assignment import evaluate_assignment
from rgvroute.milp.model import build_model
from rgvroute.milpsolver import LpStatus, MilpStatus, solve_lp, solve_milp
from rgvroute.seqsolver import Infeasible, Objective, enumerate_feasible, solve_exact
from rgvroute.simulator import random_instance


def test_single_request_forced_route():
    inst = make_instance([(3, "S", 7, "N")], m=8, Q=1, start_pos=1)
    res = solve_exact(inst)
    assert res.route == (0, 1, 2, 3)
    p = inst.rgv
    assert res.energy == pytest.approx(arc_energy(p, 2.0, 0.0) + arc_energy(p, 4.0, 1.0))
    assert len(enumerate_feasible(inst)) == 1


def test_free_pair_has_all_six_interleavings():
    inst = make_instance([(2, "N", 5, "N"), (3, "S", 6, "S")], m=8, Q=2, start_pos=1)
    assert len(enumerate_feasible(inst)) == 6


def test_crossing_pair_never_interleaves():
    inst = make_instance([(2, "N", 5, "S"), (3, "S", 6, "N")], m=8, Q=2, start_pos=1)
    for route in enumerate_feasible(inst):
        body = route[1:-1]
        assert body in ((1, 3, 2, 4), (2, 4, 1, 3))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 3), Q=st.integers(1, 3), tw=st.booleans())
def test_exact_matches_brute_force(seed, n, Q, tw):
    inst = random_instance(seed, n=n, m=6, Q=Q, deadline_slack=(1.2, 3.0) if tw else None)
    routes = brute_force_routes(inst)
    assert sorted(routes) == sorted(tuple(r) for r in enumerate_feasible(inst).routes)
    if not routes:
        with pytest.raises(Infeasible):
            solve_exact(inst)
        return
    best = min(evaluate_route(inst, r).energy for r in routes)
    assert solve_exact(inst).energy == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_objective_dominance(seed):
    inst = random_instance(seed, n=5, m=9, Q=2)
    e = solve_exact(inst, "energy")
    d = solve_exact(inst, Objective.DISTANCE)
    assert e.energy <= d.energy + 1e-9
    assert d.distance <= e.distance + 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_capacity_monotone(seed):
    base = random_instance(seed, n=5, m=9, Q=1)
    energies = [solve_exact(replace(base, Q=Q)).energy for Q in (1, 2, 3)]
    assert energies[0] >= energies[1] - 1e-9 >= energies[2] - 2e-9


def test_enumeration_truncates():
    inst = random_instance(2, n=4, m=6, Q=3)
    full = enumerate_feasible(inst)
    part = enumerate_feasible(inst, limit=3)
    assert len(full) > 3 and not full.truncated
    assert len(part) == 3 and part.truncated
    with pytest.raises(ValueError):
        enumerate_feasible(random_instance(0, n=7, m=9, Q=2))


def test_parallel_split_gives_same_answer():
    inst = random_instance(11, n=6, m=9, Q=2)
    a = solve_exact(inst)
    b = solve_exact(inst, workers=2)
    assert a.energy == pytest.approx(b.energy, abs=1e-9)


def test_infeasible_deadline_is_reported():
    inst = make_instance([(2, "N", 8, "N", 1, 0.0, 2.0)], m=8, Q=1, start_pos=1)
    with pytest.raises(Infeasible) as exc:
        solve_exact(inst)
    assert exc.value.reasons


# -- LP / MILP ----------------------------------------------------------------

def test_lp_forced_route_is_integral():
    inst = make_instance([(3, "S", 7, "N")], m=8, Q=1, start_pos=1)
    lp = solve_lp(build_model(inst, floor=True))
    assert lp.optimal
    assert lp.objective == pytest.approx(solve_exact(inst).energy, abs=1e-7)


def test_lp_infeasible_deadline():
    inst = make_instance([(2, "N", 8, "N", 1, 0.0, 2.0)], m=8, Q=1, start_pos=1)
    model = build_model(inst)
    assert solve_lp(model).status is LpStatus.INFEASIBLE
    res = solve_milp(model)
    assert res.status is MilpStatus.INFEASIBLE
    assert res.values is None


def test_lp_solution_is_primal_feasible():
    model = build_model(random_instance(4, n=4, m=6, Q=2), cuts="g123", floor=True)
    lp = solve_lp(model)
    assert lp.optimal
    act = model.A @ lp.x
    assert np.all(act >= model.row_lo - 1e-7) and np.all(act <= model.row_hi + 1e-7)
    assert np.all(lp.x >= model.lb - 1e-7) and np.all(lp.x <= model.ub + 1e-7)
    assert lp.objective == pytest.approx(model.obj @ lp.x, abs=1e-7)


@pytest.mark.parametrize("seed", range(10))
def test_milp_agrees_with_sequence_search(seed):
    n = 1 + seed % 4
    inst = random_instance(300 + seed, n=n, m=6, Q=1 + seed % 3,
                           deadline_slack=(1.5, 3.0) if seed % 3 == 0 else None)
    try:
        ref = solve_exact(inst).energy
    except Infeasible:
        ref = None
    for floor in (False, True):
        res = solve_milp(build_model(inst, cuts="g123", floor=floor))
        if ref is None:
            assert res.status is MilpStatus.INFEASIBLE
            continue
        assert res.optimal
        assert res.objective == pytest.approx(ref, abs=1e-6)
        assert evaluate_assignment(res.model, res.values).feasible
        assert evaluate_route(inst, res.route).feasible


def test_bound_and_incumbent_traces_are_monotone():
    res = solve_milp(build_model(random_instance(21, n=5, m=8, Q=2), floor=True))
    assert res.optimal
    bounds = list(res.bound_trace)
    incs = [v for _, v in res.incumbent_trace]
    assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(bounds, bounds[1:]))
    assert all(v2 <= v1 + 1e-9 for v1, v2 in zip(incs, incs[1:]))


def test_warm_start_available_at_root():
    from rgvroute.heuristic import rule_sequence

    inst = random_instance(22, n=5, m=8, Q=2)
    model = build_model(inst, floor=True)
    inc = rule_sequence(inst) + [inst.end]
    warm = solve_milp(model, incumbent=inc)
    cold = solve_milp(model)
    assert warm.first_incumbent_node == 0
    assert warm.objective == pytest.approx(cold.objective, abs=1e-6)


def test_time_limit_reports_gap():
    model = build_model(random_instance(1, n=7, m=10, Q=2), cuts="g123", floor=True)
    res = solve_milp(model, time_limit=0.5)
    assert res.status in (MilpStatus.TIME_LIMIT, MilpStatus.OPTIMAL)
    if res.status is MilpStatus.TIME_LIMIT and res.values is not None:
        assert res.gap >= 0

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rgvroute.deck import evaluate_route
from rgvroute.instance import make_instance
from rgvroute.kinematics import arc_energy
from rgvroute.milp.arcs import complete_arcs, reduce_arcs
from rgvroute.milp.assignment import (
    assignment_to_route,
    evaluate_assignment,
    evaluate_route_in_model,
    route_to_assignment,
    routes_in_model,
)
from rgvroute.milp.model import big_m, build_model, expected_row_counts, latest_completion, model_stats
from rgvroute.milpsolver import solve_milp
from rgvroute.seqsolver import Infeasible, enumerate_feasible, solve_exact
from rgvroute.simulator import random_instance
from rgvroute.validate import candidate_orders


def single():
    return make_instance([(2, "N", 6, "S")], m=8, Q=2, start_pos=1)


def test_closed_form_row_counts():
    for seed in range(12):
        inst = random_instance(seed, n=1 + seed % 5, m=6, Q=2)
        arcs = reduce_arcs(inst)
        model = build_model(inst, arcs)
        got = model.family_counts()
        want = expected_row_counts(inst, arcs)
        for fam in ("degree_out", "degree_in", "pairing", "queue", "time_link", "load_link", "flow", "link",
                    "energy"):
            assert got.get(fam, 0) == want[fam], fam
        assert got.get("conflict", 0) <= want["conflict_max"]


def test_big_m_substitution():
    # unit acceleration and cruise speed: a leg of r >= 1 takes r + 1
    inst = make_instance([(1, "N", 2, "N", 1, 0.0, 100.0), (3, "N", 5, "N")], m=6, Q=2, start_pos=1)
    t = inst.travel_time_matrix
    assert t[1, 3] == pytest.approx(2.0)
    assert t[1, 2] == pytest.approx(3.0)
    L = latest_completion(inst, clip=False)
    eta, rho = big_m(inst, 1, 2, L)
    assert eta == pytest.approx(100.5)
    assert rho == inst.Q


def test_single_request_model():
    inst = single()
    model = build_model(inst)
    assert sorted(model.x_col) == [(0, 1), (1, 2), (2, 3)]
    assert set(model.y_col) <= {(1, 1, 2)}
    res = solve_milp(model)
    assert res.optimal
    assert res.route == (0, 1, 2, 3)
    p = inst.rgv
    chain = arc_energy(p, 1.0, 0.0) + arc_energy(p, 4.0, 1.0) + arc_energy(p, 0.0, 0.0)
    assert res.objective == pytest.approx(chain, abs=1e-6)


def test_all_zero_assignment_breaks_start_degree():
    model = build_model(single())
    rep = evaluate_assignment(model, np.zeros(model.num_cols))
    assert not rep.feasible
    assert "out_0" in {v.name for v in rep.violations}


def test_dimension_mismatch():
    model = build_model(single())
    with pytest.raises(ValueError):
        evaluate_assignment(model, np.zeros(model.num_cols + 1))


@pytest.mark.parametrize("seed", range(6))
def test_route_assignment_round_trip_and_mutation(seed):
    inst = random_instance(seed, n=4, m=6, Q=2)
    model = build_model(inst)
    res = solve_exact(inst)
    val = route_to_assignment(model, res.route)
    rep = evaluate_assignment(model, val)
    assert rep.feasible, rep.violations[:3]
    assert rep.objective == pytest.approx(res.energy, abs=1e-6)
    assert assignment_to_route(model, val) == tuple(res.route)
    # flipping one arc variable must be caught
    a = (res.route[1], res.route[2])
    bad = val.copy()
    bad[model.x_col[a]] = 0.0
    assert not evaluate_assignment(model, bad).feasible


def test_floor_rows_tight_on_routes():
    for seed in range(5):
        inst = random_instance(seed, n=3, m=5, Q=2)
        model = build_model(inst, floor=True)
        for route in enumerate_feasible(inst).routes[:20]:
            val = route_to_assignment(model, route)
            rows = [r for r, f in enumerate(model.row_family) if f == "floor"]
            act = model.A[rows] @ val
            assert np.allclose(act, 0.0, atol=1e-7)


def test_reduced_arcs_keep_every_feasible_route():
    for seed in range(15):
        inst = random_instance(seed, n=1 + seed % 5, m=5, Q=1 + seed % 3)
        arcs = reduce_arcs(inst).arcs
        for route in enumerate_feasible(inst).routes:
            assert all((a, b) in arcs for a, b in zip(route, route[1:]))


@pytest.mark.parametrize("seed", range(4))
def test_reduced_and_complete_optima_agree(seed):
    inst = random_instance(100 + seed, n=3, m=5, Q=2)
    a = solve_milp(build_model(inst, reduce_arcs(inst), floor=True))
    b = solve_milp(build_model(inst, complete_arcs(inst), floor=True))
    assert a.optimal and b.optimal
    assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_stats_report_both_complete_conventions():
    inst = random_instance(0, n=7, m=9, Q=2)
    st_ = model_stats(build_model(inst))
    assert st_["complete_2n+1_squared"] == 225
    assert st_["complete_2n+2_squared"] == 256
    assert st_["arcs"] < 225


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 3), Q=st.integers(1, 3))
def test_model_feasible_set_matches_deck(seed, n, Q):
    inst = random_instance(seed, n=n, m=5, Q=Q)
    deck = {tuple(r) for r in enumerate_feasible(inst).routes}
    orders = candidate_orders(n)
    ok = routes_in_model(build_model(inst), orders)
    assert {tuple(int(v) for v in o) for o in orders[ok]} == deck


def test_batch_checker_agrees_with_single_route_check():
    inst = random_instance(7, n=3, m=5, Q=2)
    model = build_model(inst)
    orders = candidate_orders(3)
    ok = routes_in_model(model, orders)
    for o, flag in zip(orders[::7], ok[::7]):
        assert bool(evaluate_route_in_model(model, o).feasible) == bool(flag)


def test_infeasible_deadline_instance_has_no_model_route():
    inst = make_instance([(2, "N", 8, "N", 1, 0.0, 1.0)], m=8, Q=1, start_pos=1)
    with pytest.raises(Infeasible):
        solve_exact(inst)
    assert not evaluate_route_in_model(build_model(inst), (0, 1, 2, 3)).feasible
    assert not evaluate_route(inst, (0, 1, 2, 3)).feasible

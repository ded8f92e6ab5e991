import itertools

import numpy as np
import pytest

from rgvroute.deck import evaluate_route
from rgvroute.instance import RequestType, make_instance
from rgvroute.milp.arcs import complete_arcs
from rgvroute.milp.assignment import evaluate_route_in_model, routes_in_model
from rgvroute.milp.cuts import add_valid_inequalities
from rgvroute.milp.model import CUT_PRESETS, build_model
from rgvroute.milpsolver import solve_lp, solve_milp
from rgvroute.seqsolver import enumerate_feasible, solve_exact
from rgvroute.simulator import random_instance
from rgvroute.validate import candidate_orders

SIDES = {RequestType.T1: ("N", "N"), RequestType.T2: ("S", "S"), RequestType.T3: ("N", "S"), RequestType.T4: ("S", "N")}


def typed_instance(types, Q=None):
    specs = [(2 + 2 * k, SIDES[t][0], 3 + 2 * k, SIDES[t][1]) for k, t in enumerate(types)]
    return make_instance(specs, m=2 * len(types) + 3, Q=Q or len(types), start_pos=1)


@pytest.mark.parametrize("seed", range(12))
def test_every_deck_route_satisfies_all_cuts(seed):
    n = 3 + seed % 3
    inst = random_instance(500 + seed, n=n, m=6, Q=1 + seed % 3)
    routes = enumerate_feasible(inst).routes
    model = build_model(inst, cuts="g123")
    ok = routes_in_model(model, np.array(routes, dtype=np.int64))
    assert ok.all(), routes[int(np.argmin(ok))]


def test_narrow_reading_cuts_a_feasible_route():
    inst = make_instance([(2, "N", 9, "N"), (3, "N", 8, "S"), (4, "S", 6, "S"), (5, "S", 7, "N")], m=10, Q=3,
                         start_pos=1)
    route = (0, 2, 1, 6, 3, 7, 4, 5, 8, 9)
    assert evaluate_route(inst, route).feasible
    base = build_model(inst, complete_arcs(inst))
    assert evaluate_route_in_model(add_valid_inequalities(base, "g123"), route).feasible
    narrow = add_valid_inequalities(base, "g123", literal=True)
    assert not evaluate_route_in_model(narrow, route).feasible


def test_empty_arrival_row_for_crossing_pair():
    # i crosses south to north, j stays north: the deck must be empty when i is served next to j
    inst = typed_instance([RequestType.T4, RequestType.T1])
    n = 2
    i, j = 1, 2
    model = build_model(inst, complete_arcs(inst), cuts="g2")
    want = {model.x_col[a] for a in ((i, j), (j, i), (i, i + n), (i + n, j + n))}
    found = False
    for r, fam in enumerate(model.row_family):
        row = model.A.getrow(r)
        if set(row.indices) == want and np.allclose(row.data, 1.0) and model.row_hi[r] == 1.0:
            found = True
    assert found


def test_empty_groups_leave_model_unchanged():
    inst = random_instance(3, n=4, m=6, Q=2)
    base = build_model(inst)
    assert build_model(inst, cuts="none").digest() == base.digest()
    assert add_valid_inequalities(base, ()).digest() == base.digest()


@pytest.mark.parametrize("seed", range(3))
def test_cut_presets_keep_the_optimum(seed):
    inst = random_instance(40 + seed, n=4, m=6, Q=2)
    ref = solve_exact(inst).energy
    rows = set()
    for preset in CUT_PRESETS:
        model = build_model(inst, cuts=preset, floor=True)
        res = solve_milp(model)
        assert res.optimal
        assert res.objective == pytest.approx(ref, abs=1e-6), preset
        rows.add(model.num_rows)
    assert len(rows) > 1


@pytest.mark.parametrize("seed", range(4))
def test_root_bound_does_not_drop_with_cuts(seed):
    inst = random_instance(70 + seed, n=4, m=6, Q=2)
    lo = solve_lp(build_model(inst, cuts="none", floor=True)).objective
    hi = solve_lp(build_model(inst, cuts="g23", floor=True)).objective
    assert hi >= lo - 1e-6


def _inequality_form_mismatches(n):
    bad = []
    for combo in itertools.product(list(RequestType), repeat=n):
        inst = typed_instance(combo)
        orders = candidate_orders(n)
        a = routes_in_model(build_model(inst, conflict_form="zero"), orders)
        b = routes_in_model(build_model(inst, conflict_form="inequality"), orders)
        if (a != b).any():
            bad.append((combo, orders[a != b][0]))
    return bad


def test_inequality_conflict_form_admits_nested_crossing():
    # the crossing request fully nested inside the straight one slips through the inequality form
    inst = typed_instance([RequestType.T1, RequestType.T3])
    route = (0, 1, 2, 4, 3, 5)
    assert not evaluate_route(inst, route).feasible
    arcs = complete_arcs(inst)
    assert not evaluate_route_in_model(build_model(inst, arcs, conflict_form="zero"), route).feasible
    assert evaluate_route_in_model(build_model(inst, arcs, conflict_form="inequality"), route).feasible


def test_inequality_form_only_differs_on_crossing_pairs():
    crossing = {(RequestType.T1, RequestType.T3), (RequestType.T2, RequestType.T4),
                (RequestType.T1, RequestType.T4), (RequestType.T2, RequestType.T3)}
    for combo, _ in _inequality_form_mismatches(2):
        assert any((a, b) in crossing or (b, a) in crossing for a, b in itertools.combinations(combo, 2))

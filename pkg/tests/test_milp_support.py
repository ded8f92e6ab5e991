"""Big-M constants, initial-load augmentation and the LP text format."""
import numpy as np
import pytest
from oracles import big_m_slack
from scipy.optimize import Bounds, LinearConstraint, milp

from rgvroute.deck import DeckState, deck_apply, evaluate_route
from rgvroute.instance import Request, Side, make_instance
from rgvroute.milp.arcs import reduce_arcs
from rgvroute.milp.assignment import route_to_assignment
from rgvroute.milp.augment import augment_initial_load, virtual_order
from rgvroute.milp.lpformat import export_lp, lp_text, read_lp
from rgvroute.milp.model import build_model
from rgvroute.seqsolver import enumerate_feasible, solve_exact
from rgvroute.simulator import random_instance


@pytest.mark.parametrize("seed", range(8))
def test_big_m_never_cuts_a_feasible_route(seed):
    rng = np.random.default_rng(seed)
    dl = (1.5, 3.0) if seed % 2 else None
    inst = random_instance(900 + seed, n=3 + seed % 3, m=6, Q=1 + seed % 3, deadline_slack=dl)
    routes = enumerate_feasible(inst).routes
    if not routes:
        pytest.skip("no feasible route")
    model = build_model(inst)
    for k in rng.choice(len(routes), size=min(40, len(routes)), replace=False):
        tw, ww = big_m_slack(model, routes[k])
        assert tw <= 1e-7
        assert ww <= 1e-9


def _deck(inst, pickups):
    st = DeckState()
    for v in pickups:
        st = deck_apply(st, v, inst)
    return [inst.request(g) for g in st.containers]


def test_augmentation_without_onboard_is_identity():
    inst = random_instance(1, n=3, m=6, Q=2)
    aug, fixed = augment_initial_load(inst, [], 4)
    assert fixed == frozenset()
    assert aug.requests == inst.requests
    assert aug.start_pos == 4


def test_mixed_deck_augmentation():
    onboard = [Request(1, 2, Side.NORTH, 7, Side.NORTH), Request(2, 3, Side.SOUTH, 9, Side.SOUTH)]
    waiting = make_instance([(4, "N", 8, "S"), (5, "S", 1, "N"), (6, "N", 2, "N")], m=10, Q=3)
    aug, fixed = augment_initial_load(waiting, onboard, 5)
    assert aug.fixed_prefix == (0, 1, 2)
    assert [r.dest_side for r in aug.requests[:2]] == [Side.NORTH, Side.SOUTH]
    n = aug.n
    # virtual pickups sit at the vehicle, their deliveries at the old destinations
    assert aug.pos(1) == aug.pos(2) == 5
    assert aug.pos(1 + n) == 7 and aug.pos(2 + n) == 9
    arcs = reduce_arcs(aug).arcs
    assert (0, 1) in arcs and (1, 2) in arcs
    crossing = {3, 4}
    assert not any(a == 2 and b in crossing for a, b in arcs)
    assert not any(b in (0, 1, 2) and a not in (0, 1) for a, b in arcs)
    # replaying the prefix rebuilds the same deck
    assert [r.dest_pos for r in _deck(aug, [1, 2])] == [7, 9]


def test_augmented_optimum_extends_the_prefix():
    onboard = [Request(1, 2, Side.NORTH, 6, Side.NORTH), Request(2, 3, Side.SOUTH, 9, Side.SOUTH)]
    waiting = make_instance([(4, "N", 8, "N"), (7, "S", 1, "S")], m=10, Q=3)
    aug, _ = augment_initial_load(waiting, onboard, 3)
    res = solve_exact(aug)
    assert res.route[:3] == (0, 1, 2)
    assert evaluate_route(aug, res.route).feasible


def test_unloadable_deck_rejected():
    # the north end holds a south-bound container and vice versa
    onboard = [Request(1, 2, Side.NORTH, 7, Side.SOUTH), Request(2, 3, Side.SOUTH, 9, Side.NORTH)]
    with pytest.raises(ValueError):
        virtual_order(onboard)


def test_lp_text_is_deterministic(tmp_path):
    inst = random_instance(5, n=4, m=6, Q=2)
    a = export_lp(build_model(inst, cuts="g123"), tmp_path / "a.lp").read_bytes()
    b = export_lp(build_model(inst, cuts="g123"), tmp_path / "b.lp").read_bytes()
    assert a == b


def test_lp_names_and_sections():
    text = lp_text(build_model(random_instance(2, n=2, m=5, Q=2)))
    assert "Minimize" in text and "Subject To" in text and "Binaries" in text and text.rstrip().endswith("End")
    for prefix in ("x_0_", "y_1_", "b_1", "w_1", "z_0"):
        assert prefix in text


@pytest.mark.parametrize("seed,n", [(0, 1), (3, 2), (8, 3)])
def test_lp_round_trip_through_external_solver(seed, n):
    inst = random_instance(seed, n=n, m=6, Q=2)
    model = build_model(inst, cuts="g123")
    d = read_lp(lp_text(model))
    order = [d["names"].index(nm) for nm in model.names]
    A = d["A"][:, order]
    lo, hi = d["row_lo"], d["row_hi"]
    # an exact route assignment satisfies the parsed rows
    val = route_to_assignment(model, solve_exact(inst).route)
    act = A @ val
    assert np.all(act >= lo - 1e-7) and np.all(act <= hi + 1e-7)
    res = milp(d["obj"][order], constraints=LinearConstraint(A, lo, hi),
               bounds=Bounds(d["lb"][order], d["ub"][order]), integrality=d["binary"][order].astype(int))
    assert res.status == 0
    assert res.fun == pytest.approx(solve_exact(inst).energy, abs=1e-6)

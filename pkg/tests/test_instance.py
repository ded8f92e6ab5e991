import json

import pytest
from hypothesis import given, settings, strategies as st

from rgvroute.instance import (
    Instance,
    Request,
    RequestType,
    Side,
    classify,
    dumps,
    loads,
    make_instance,
    queue_relations,
    vertex_distance,
)
from rgvroute.kinematics import RgvParams


def test_classify_all_types():
    mk = lambda o, d: Request(1, 1, o, 2, d)
    assert classify(mk(Side.NORTH, Side.NORTH)) is RequestType.T1
    assert classify(mk(Side.SOUTH, Side.SOUTH)) is RequestType.T2
    assert classify(mk(Side.NORTH, Side.SOUTH)) is RequestType.T3
    assert classify(mk(Side.SOUTH, Side.NORTH)) is RequestType.T4


def toy_layout():
    # Best-effort reconstruction of the seven-request illustration; only the
    # request types and the two queues are known, the coordinates are guesses.
    specs = [
        (2, "N", 5, "N", 1, 0.0),
        (2, "N", 8, "S", 1, 1.0),
        (3, "S", 1, "S", 1, 0.0),
        (6, "S", 4, "N", 1, 0.0),
        (6, "S", 9, "S", 1, 1.0),
        (7, "N", 3, "S", 1, 0.0),
        (9, "S", 2, "N", 1, 0.0),
    ]
    return make_instance(specs, m=9, Q=2)


def test_toy_partition_and_queues():
    inst = toy_layout()
    assert inst.types_of(RequestType.T1) == [1]
    assert inst.types_of(RequestType.T2) == [3, 5]
    assert inst.types_of(RequestType.T3) == [2, 6]
    assert inst.types_of(RequestType.T4) == [4, 7]
    qr = queue_relations(inst)
    assert qr.succ(1) == 2
    assert qr.succ(4) == 5
    assert qr.succ(2) is None
    assert qr.pred(2) == 1


def test_singleton_queues():
    inst = make_instance([(1, "N", 2, "N"), (3, "S", 4, "N"), (5, "N", 1, "S")], m=5, Q=1)
    qr = inst.queues
    assert all(qr.succ(i) is None for i in range(1, 4))
    assert set(qr.heads) == set(qr.tails) == {1, 2, 3}


def test_fifo_chain_by_arrival_and_id():
    inst = make_instance(
        [(4, "N", 1, "N", 1, 3.0), (4, "N", 2, "S", 1, 1.0), (4, "N", 3, "N", 1, 2.0), (4, "S", 3, "N", 1, 0.0),
         (4, "N", 5, "S", 1, 2.0)],
        m=5, Q=2,
    )
    qr = inst.queues
    assert qr.successors(2) == (3, 5, 1)
    assert qr.ahead(2, 1) and qr.ahead(3, 5) and not qr.ahead(1, 2)
    # south queue at the same station is independent
    assert not qr.ahead(4, 1) and not qr.ahead(2, 4)
    assert qr.is_head(4) and qr.is_tail(4)


def test_vertex_distance():
    inst = make_instance([(3, "N", 7, "S")], m=8, Q=1, start_pos=3)
    assert vertex_distance(inst, 1, 2) == 4
    assert vertex_distance(inst, 1, 1) == 0
    assert vertex_distance(inst, 2, 3) == 0
    scaled = make_instance([(3, "N", 7, "S")], m=8, Q=1, unit_length=2.5)
    assert vertex_distance(scaled, 1, 2) == 10.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 9), st.sampled_from("NS"), st.integers(1, 9), st.sampled_from("NS"),
                          st.integers(1, 2), st.floats(0, 5)), min_size=1, max_size=8),
       st.integers(1, 9))
def test_structural_invariants(specs, start):
    inst = make_instance(specs, m=9, Q=2, start_pos=start)
    counts = sum(len(inst.types_of(t)) for t in RequestType)
    assert counts == inst.n
    qr = inst.queues
    seen = [i for c in qr.chains for i in c]
    assert sorted(seen) == list(range(1, inst.n + 1))
    for i in range(1, inst.n + 1):
        assert not qr.ahead(i, i)
        for j in range(1, inst.n + 1):
            if qr.ahead(i, j):
                assert not qr.ahead(j, i)
                ri, rj = inst.request(i), inst.request(j)
                assert (ri.origin_pos, ri.origin_side) == (rj.origin_pos, rj.origin_side)
                for k in range(1, inst.n + 1):
                    if qr.ahead(j, k):
                        assert qr.ahead(i, k)
    V = range(inst.num_vertices - 1)
    for i in V:
        for j in V:
            assert vertex_distance(inst, i, j) == vertex_distance(inst, j, i)
            for k in V:
                pi, pj, pk = inst.pos(i), inst.pos(j), inst.pos(k)
                if pi <= pk <= pj:
                    assert vertex_distance(inst, i, j) == pytest.approx(
                        vertex_distance(inst, i, k) + vertex_distance(inst, k, j))


def test_json_round_trip():
    inst = Instance(
        (Request(1, 2, Side.NORTH, 5, Side.SOUTH, 2, 0.5, 0.0, 90.0),
         Request(2, 4, Side.SOUTH, 1, Side.SOUTH, 1, 1.25, 3.0, 1e6, virtual=True)),
        m=6, Q=3, start_pos=4, rgv=RgvParams(w_rgv=2.5, accel=0.7), service_time=0.25,
        unit_length=1.5, fixed_prefix=(0, 2),
    )
    text = dumps(inst)
    doc = json.loads(text)
    assert doc["requests"][0]["origin"]["side"] == "N"
    assert doc["requests"][1]["dest"]["side"] == "S"
    back = loads(text)
    assert back == inst
    assert dumps(back) == text


def test_invalid_instances_rejected():
    with pytest.raises(ValueError):
        Request(1, 1, Side.NORTH, 2, Side.NORTH, q=0)
    with pytest.raises(ValueError):
        Request(1, 1, Side.NORTH, 2, Side.NORTH, e=5, l=1)
    with pytest.raises(ValueError):
        make_instance([(1, "N", 2, "N", 3)], m=2, Q=2)
    with pytest.raises(ValueError):
        Instance((Request(2, 1, Side.NORTH, 2, Side.NORTH),), m=2, Q=1)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rgvroute.kinematics import (
    RgvParams,
    arc_energy,
    energy_coef_array,
    energy_coefficient,
    travel_time,
    travel_time_array,
)
from oracles import oracle_energy, oracle_travel_time, rel_err

P = RgvParams()


def test_zero_distance():
    assert travel_time(P, 0.0) == 0.0
    assert arc_energy(P, 0.0, 3) == 0.0


def test_travel_time_examples():
    assert travel_time(P, 1.0) == pytest.approx(2.0, rel=1e-12)
    assert travel_time(P, 3.0) == pytest.approx(4.0, rel=1e-12)
    assert rel_err(travel_time(P, 1.0), oracle_travel_time(1.0, 1.0, 1.0)) < 1e-9
    assert rel_err(travel_time(P, 3.0), oracle_travel_time(3.0, 1.0, 1.0)) < 1e-9


def test_energy_examples():
    slow = RgvParams(accel=0.4)
    assert arc_energy(slow, 10, 1) == pytest.approx(14.7, rel=1e-12)
    assert arc_energy(P, 0.8, 1) == pytest.approx(2.4, rel=1e-12)
    assert rel_err(arc_energy(slow, 10, 1), oracle_energy(10, 0.4, 1.0, 0.05, 9.8, 3)) < 1e-9
    assert rel_err(arc_energy(P, 0.8, 1), oracle_energy(0.8, 1.0, 1.0, 0.05, 9.8, 3)) < 1e-9


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        travel_time(P, -1.0)
    with pytest.raises(ValueError):
        arc_energy(P, 1.0, -1)
    with pytest.raises(ValueError):
        RgvParams(accel=0.0)


def test_branch_continuity():
    for p in (P, RgvParams(accel=2.0, cruise_speed=1.5)):
        r = 2 * p.r1
        eps = 1e-9
        assert travel_time(p, r - eps) == pytest.approx(travel_time(p, r + eps), abs=1e-7)
        assert energy_coefficient(p, r - eps) == pytest.approx(energy_coefficient(p, r + eps), abs=1e-7)
        assert p.accel * r == pytest.approx(2 * (p.accel - p.friction) * p.r1 + p.friction * r)


def test_array_versions_match_scalar():
    rs = np.linspace(0, 12, 97)
    for p in (P, RgvParams(accel=0.3)):
        tt = travel_time_array(p, rs)
        cc = energy_coef_array(p, rs)
        for r, t, c in zip(rs, tt, cc):
            assert t == pytest.approx(travel_time(p, r), rel=1e-14, abs=1e-15)
            assert c == pytest.approx(energy_coefficient(p, r), rel=1e-14, abs=1e-15)


params = st.builds(
    RgvParams,
    w_rgv=st.floats(0.5, 5),
    accel=st.floats(0.05, 3),
    cruise_speed=st.floats(0.2, 3),
    mu=st.floats(0.01, 0.2),
    g=st.just(9.8),
)


@settings(max_examples=200, deadline=None)
@given(params, st.floats(0, 50), st.floats(0, 50))
def test_travel_time_monotone(p, r1, r2):
    lo, hi = sorted((r1, r2))
    assert travel_time(p, lo) <= travel_time(p, hi) + 1e-12


@settings(max_examples=200, deadline=None)
@given(params, st.floats(0, 50), st.floats(0, 50), st.integers(0, 6), st.integers(0, 6))
def test_energy_monotone_in_distance_and_load(p, r1, r2, w1, w2):
    lo, hi = sorted((r1, r2))
    wl, wh = sorted((w1, w2))
    assert arc_energy(p, lo, wl) <= arc_energy(p, hi, wl) + 1e-12
    assert arc_energy(p, lo, wl) <= arc_energy(p, lo, wh) + 1e-12


@settings(max_examples=100, deadline=None)
@given(params, st.floats(0.01, 50), st.floats(0, 6))
def test_energy_linear_in_weight(p, r, w):
    h = 1e-3
    fd = (arc_energy(p, r, w + h) - arc_energy(p, r, w)) / h
    assert fd == pytest.approx(energy_coefficient(p, r), rel=1e-9)


def test_slope_tends_to_inverse_cruise_speed():
    p = RgvParams(cruise_speed=1.7)
    slope = (travel_time(p, 1e6 + 1) - travel_time(p, 1e6)) 
    assert slope == pytest.approx(1 / 1.7, rel=1e-9)

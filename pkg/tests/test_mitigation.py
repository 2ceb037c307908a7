"""Load-shed sizing and placement by boundary weight magnitudes."""
import math

import numpy as np
import pytest

from aam.area import AreaDefinition, BoundaryWeights, weights_for
from aam.errors import AreaError
from aam.fixtures import parallel_pair, two_sender_y
from aam.mitigation import (MitigationPlan, allocate_load_shed, plan_to_dict,
                            simulate_mitigation)

# receiving-side weight magnitudes of a 14-bus benchmark case
RECV_W = [0.1269, 0.0958, 0.0017, 0.1615, 0.2979, 0.2766, 0.0395]
RECV_BUSES = [f"B{i}" for i in range(8, 15)]


def _recv_fixture():
    boundary = tuple(["S1"] + RECV_BUSES)
    weights = BoundaryWeights(
        boundary=boundary,
        weights=np.asarray([1.0] + [-w for w in RECV_W]),
        b_mod=2.0)
    area = AreaDefinition(boundary=boundary, sending=frozenset({"S1"}),
                          receiving=frozenset(RECV_BUSES), interior=frozenset(),
                          internal_branches=frozenset({"dummy"}))
    return weights, area


def test_allocation_is_proportional_and_exact():
    weights, area = _recv_fixture()
    plan = allocate_load_shed(weights, area, 1000.0)
    assert sum(mw for _, mw in plan.shed_mw) == pytest.approx(1000.0, abs=1e-9)
    expect = [126.9, 95.8, 1.7, 161.5, 297.9, 276.6, 39.5]
    got = dict(plan.shed_mw)
    for bus, mw in zip(RECV_BUSES, expect):
        assert got[bus] == pytest.approx(mw, abs=0.05)
    # ordering follows the boundary order
    assert [b for b, _ in plan.shed_mw] == RECV_BUSES


def test_allocation_scales_linearly():
    weights, area = _recv_fixture()
    p1 = allocate_load_shed(weights, area, 100.0)
    p5 = allocate_load_shed(weights, area, 500.0)
    for (b1, m1), (b5, m5) in zip(p1.shed_mw, p5.shed_mw):
        assert b1 == b5
        assert m5 == pytest.approx(5.0 * m1, rel=1e-12)


def test_predicted_delta_follows_bulk_susceptance():
    weights, area = _recv_fixture()
    plan = allocate_load_shed(weights, area, 250.0, mva_base=100.0)
    assert plan.predicted_delta_deg == pytest.approx(
        -math.degrees((250.0 / 100.0) / 2.0))
    assert plan.predicted_delta_deg < 0


def test_simulated_shed_halves_the_angle():
    # 1 p.u. through a unit corridor pair; shedding half the transfer at the
    # receiving bus halves the area angle
    model, area, pattern = parallel_pair(b=1.0, limit=10.0)
    weights = weights_for(model, area)
    inj = pattern.direction * 1.0
    plan = allocate_load_shed(weights, area, 50.0, mva_base=model.mva_base)
    before, after, _ = simulate_mitigation(model, area, weights, inj, plan, pattern)
    assert before == pytest.approx(math.degrees(0.5), abs=1e-9)
    assert after == pytest.approx(math.degrees(0.25), abs=1e-9)
    # linear system: prediction is exact here
    assert after - before == pytest.approx(plan.predicted_delta_deg, abs=1e-9)


def test_simulation_rejects_foreign_plan():
    model, area, pattern = parallel_pair()
    weights = weights_for(model, area)
    bad = MitigationPlan(total_mw=10.0, shed_mw=(("A", 10.0),),
                         predicted_delta_deg=0.0)  # A is a sending bus
    with pytest.raises(AreaError):
        simulate_mitigation(model, area, weights, pattern.direction, bad, pattern)


def test_multi_receiver_split_follows_weights():
    model, area, _ = two_sender_y()
    w = weights_for(model, area)
    area_flip = AreaDefinition(boundary=area.boundary,
                               sending=area.receiving, receiving=area.sending,
                               interior=area.interior,
                               internal_branches=area.internal_branches)
    # S1/S2 each carry |w| = 0.5: an even split
    plan = allocate_load_shed(w, area_flip, 90.0)
    assert dict(plan.shed_mw) == {"S1": pytest.approx(45.0),
                                  "S2": pytest.approx(45.0)}


def test_plan_validation():
    with pytest.raises(ValueError):
        MitigationPlan(total_mw=-1.0, shed_mw=(), predicted_delta_deg=0.0)
    with pytest.raises(ValueError):
        MitigationPlan(total_mw=10.0, shed_mw=(("a", 3.0),), predicted_delta_deg=0.0)
    weights, area = _recv_fixture()
    with pytest.raises(ValueError):
        allocate_load_shed(weights, area, -5.0)


def test_plan_serialization():
    weights, area = _recv_fixture()
    plan = allocate_load_shed(weights, area, 10.0)
    d = plan_to_dict(plan)
    assert d["total_mw"] == 10.0
    assert sum(e["mw"] for e in d["shed_mw"]) == pytest.approx(10.0)
    assert {e["bus"] for e in d["shed_mw"]} == set(RECV_BUSES)

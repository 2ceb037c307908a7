"""Network model and DC solve against a dense reference implementation."""
import math

import numpy as np
import pytest

from aam.errors import IslandedNetwork, ModelError, UnknownBranch, UnknownBus
from aam.fixtures import parallel_pair, random_area_model, triangle_model
from aam.netmodel import (Branch, Bus, NetworkModel, build_susceptance,
                          connected_components, is_islanding, line_flows,
                          model_from_dict, model_to_dict, solve_dc)


def _dense_reference(model, injections, exclude=frozenset()):
    # independent oracle: dense Laplacian assembled from scratch, numpy solve
    n = model.n_buses
    B = np.zeros((n, n))
    for br in model.branches:
        if br.id in exclude:
            continue
        i, j = model.bus_index[br.from_bus], model.bus_index[br.to_bus]
        B[i, i] += br.b
        B[j, j] += br.b
        B[i, j] -= br.b
        B[j, i] -= br.b
    s = model.bus_index[model.slack]
    keep = [k for k in range(n) if k != s]
    theta = np.zeros(n)
    theta[keep] = np.linalg.solve(B[np.ix_(keep, keep)], np.asarray(injections)[keep])
    return theta


def test_susceptance_is_laplacian():
    model = triangle_model()
    B = build_susceptance(model).toarray()
    assert np.allclose(B, B.T)
    assert np.allclose(B.sum(axis=1), 0.0)
    # off-diagonals are minus the branch susceptances
    assert B[0, 1] == pytest.approx(-1.0)


def test_solve_matches_dense_reference():
    rng = np.random.default_rng(42)
    for _ in range(10):
        model, _ = random_area_model(rng, n_buses=int(rng.integers(8, 40)))
        p = rng.normal(size=model.n_buses)
        p[model.bus_index[model.slack]] = 0.0
        theta = solve_dc(model, p)
        ref = _dense_reference(model, p)
        assert np.allclose(theta, ref, atol=1e-9)
        assert theta[model.bus_index[model.slack]] == 0.0


def test_solve_is_linear():
    rng = np.random.default_rng(1)
    model, _ = random_area_model(rng, n_buses=15)
    p1 = rng.normal(size=model.n_buses)
    p2 = rng.normal(size=model.n_buses)
    lhs = solve_dc(model, 2.0 * p1 - 0.5 * p2)
    rhs = 2.0 * solve_dc(model, p1) - 0.5 * solve_dc(model, p2)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_flows_satisfy_kcl():
    rng = np.random.default_rng(7)
    model, _ = random_area_model(rng, n_buses=24)
    p = rng.normal(size=model.n_buses)
    p[model.bus_index[model.slack]] -= p.sum()  # balanced set
    theta = solve_dc(model, p)
    flows = line_flows(model, theta)
    net = np.zeros(model.n_buses)
    for br in model.branches:
        f = flows[br.id]
        net[model.bus_index[br.from_bus]] -= f
        net[model.bus_index[br.to_bus]] += f
    assert np.allclose(net + p, 0.0, atol=1e-8)


def test_outage_of_one_of_two_identical_circuits_doubles_angle():
    model, _, _ = parallel_pair(b=1.0, limit=5.0)
    p = model.injection_vector({"A": 1.0, "B": -1.0})
    base = solve_dc(model, p)
    out = solve_dc(model, p, exclude=frozenset({"P1"}))
    i, j = model.bus_index["A"], model.bus_index["B"]
    d0 = base[i] - base[j]
    d1 = out[i] - out[j]
    assert d1 == pytest.approx(2.0 * d0, rel=1e-12)


def test_islanding_detection():
    buses = [Bus(id=b) for b in "ABCD"]
    branches = [
        Branch(id="ab", from_bus="A", to_bus="B", b=1.0),
        Branch(id="bc", from_bus="B", to_bus="C", b=1.0),  # bridge
        Branch(id="cd", from_bus="C", to_bus="D", b=1.0),
    ]
    model = NetworkModel(buses=tuple(buses), branches=tuple(branches), slack="A")
    assert not is_islanding(model)[0]
    flag, comps = is_islanding(model, exclude=frozenset({"bc"}))
    assert flag and len(comps) == 2
    assert frozenset("AB") in comps and frozenset("CD") in comps
    assert len(connected_components(model)) == 1


def test_solve_raises_on_islanded_network():
    buses = [Bus(id=b) for b in "ABC"]
    branches = [Branch(id="ab", from_bus="A", to_bus="B", b=1.0)]
    model = NetworkModel(buses=tuple(buses), branches=tuple(branches), slack="A")
    with pytest.raises(IslandedNetwork):
        solve_dc(model, np.zeros(3))


def test_model_validation_errors():
    with pytest.raises(ModelError):
        NetworkModel(buses=(), branches=(), slack="A")
    b = (Bus(id="A"), Bus(id="B"))
    with pytest.raises(ModelError):  # duplicate bus
        NetworkModel(buses=(Bus(id="A"), Bus(id="A")), branches=(), slack="A")
    with pytest.raises(ModelError):  # unknown endpoint
        NetworkModel(buses=b, branches=(Branch(id="x", from_bus="A", to_bus="Z", b=1.0),), slack="A")
    with pytest.raises(ModelError):  # self loop
        NetworkModel(buses=b, branches=(Branch(id="x", from_bus="A", to_bus="A", b=1.0),), slack="A")
    with pytest.raises(ModelError):  # non-positive susceptance
        NetworkModel(buses=b, branches=(Branch(id="x", from_bus="A", to_bus="B", b=0.0),), slack="A")
    with pytest.raises(ModelError):  # bad slack
        NetworkModel(buses=b, branches=(Branch(id="x", from_bus="A", to_bus="B", b=1.0),), slack="Z")


def test_unknown_ids_raise():
    model = triangle_model()
    with pytest.raises(UnknownBranch):
        model.without_branches(["nope"])
    with pytest.raises(UnknownBus):
        model.injection_vector({"nope": 1.0})


def test_without_branches_is_permanent_copy():
    model = triangle_model()
    nb = len(model.branches)
    smaller = model.without_branches([model.branches[0].id])
    assert len(smaller.branches) == nb - 1
    assert len(model.branches) == nb  # original untouched


def test_model_json_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    model, _ = random_area_model(rng, n_buses=12)
    d = model_to_dict(model)
    back = model_from_dict(d)
    assert back == model
    # unlimited branches survive the trip as infinity
    assert all(math.isinf(br.limit) for br in back.branches)

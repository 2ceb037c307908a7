"""Synthetic grids for tests, demos, and benchmarks.

Every generator is deterministic for a given seed and returns ready-to-use
(model, area, pattern) tuples.  `ladder_area` is the workhorse: a meshed
multi-row cutset area between an external source and sink, optionally with a
multi-circuit corridor in the middle that sets the transfer capability.
"""
from __future__ import annotations

import math

import numpy as np

from .area import AreaDefinition, derive_internal_branches
from .netmodel import Branch, Bus, NetworkModel
from .study import TransferPattern


def _mk(buses, branches, slack, mva_base=100.0) -> NetworkModel:
    return NetworkModel(
        buses=tuple(Bus(id=b) for b in buses),
        branches=tuple(branches),
        slack=slack,
        mva_base=mva_base,
    )


def _area(model, boundary, sending, receiving, interior=()) -> AreaDefinition:
    area = AreaDefinition(
        boundary=tuple(boundary),
        sending=frozenset(sending),
        receiving=frozenset(receiving),
        interior=frozenset(interior),
        internal_branches=derive_internal_branches(model, boundary, interior),
    )
    area.validate_against(model)
    return area


def _pattern(model, direction: dict, base: dict | None = None) -> TransferPattern:
    p = TransferPattern(
        base=model.injection_vector(base or {}),
        direction=model.injection_vector(direction),
    )
    p.validate()
    return p


def parallel_area(bs=(1.0, 1.0), limits=None):
    """Two boundary buses joined by parallel circuits; the simplest cutset."""
    if limits is None:
        limits = [math.inf] * len(bs)
    branches = [Branch(id=f"P{i + 1}", from_bus="A", to_bus="B", b=float(b),
                       limit=float(lim))
                for i, (b, lim) in enumerate(zip(bs, limits))]
    model = _mk(["A", "B"], branches, slack="B")
    area = _area(model, ["A", "B"], {"A"}, {"B"})
    pattern = _pattern(model, {"A": 1.0, "B": -1.0})
    return model, area, pattern


def parallel_pair(b=1.0, limit=1.0):
    return parallel_area((b, b), (limit, limit))


def single_corridor(b=1.0, limit=math.inf):
    return parallel_area((b,), (limit,))


def triangle_model() -> NetworkModel:
    branches = [
        Branch(id="L12", from_bus="B1", to_bus="B2", b=1.0),
        Branch(id="L13", from_bus="B1", to_bus="B3", b=1.0),
        Branch(id="L23", from_bus="B2", to_bus="B3", b=1.0),
    ]
    return _mk(["B1", "B2", "B3"], branches, slack="B3")


def chain_area():
    """A - M - B with interior M; series reduction halves the susceptance."""
    branches = [
        Branch(id="AM", from_bus="A", to_bus="M", b=1.0),
        Branch(id="MB", from_bus="M", to_bus="B", b=1.0),
    ]
    model = _mk(["A", "M", "B"], branches, slack="B")
    area = _area(model, ["A", "B"], {"A"}, {"B"}, interior={"M"})
    pattern = _pattern(model, {"A": 1.0, "B": -1.0})
    return model, area, pattern


def star_area():
    """Three boundary buses on a common interior hub."""
    branches = [
        Branch(id=f"S{i}", from_bus=f"B{i}", to_bus="X", b=1.0) for i in (1, 2, 3)
    ]
    model = _mk(["B1", "B2", "B3", "X"], branches, slack="B3")
    area = _area(model, ["B1", "B2", "B3"], {"B1"}, {"B2", "B3"}, interior={"X"})
    return model, area


def two_sender_y():
    """S1 and S2 each feed R directly; no interior buses.

    Removing b1 strands S1 from the through path, so its weight collapses to
    zero while S2 takes the whole sending side.
    """
    branches = [
        Branch(id="b1", from_bus="S1", to_bus="R", b=1.0),
        Branch(id="b2", from_bus="S2", to_bus="R", b=1.0),
        Branch(id="x1", from_bus="X", to_bus="S1", b=10.0),
        Branch(id="x2", from_bus="X", to_bus="S2", b=10.0),
    ]
    model = _mk(["S1", "S2", "R", "X"], branches, slack="X")
    area = _area(model, ["S1", "S2", "R"], {"S1", "S2"}, {"R"})
    pattern = _pattern(model, {"X": 1.0, "R": -1.0})
    return model, area, pattern


def random_area_model(rng: np.random.Generator, n_buses: int = 20):
    """Random connected model with a connected monitored area inside it.

    The area (sending + receiving + interior) is built on a random spanning
    tree plus extra chords; external buses hang off the boundary.  Susceptance
    values are uniform in [0.5, 5]; branches are unlimited unless the caller
    assigns limits afterwards.
    """
    n_send = int(rng.integers(1, max(2, n_buses // 6) + 1))
    n_recv = int(rng.integers(1, max(2, n_buses // 6) + 1))
    n_int = int(rng.integers(1, max(3, n_buses // 3) + 1))
    n_ext = max(1, n_buses - n_send - n_recv - n_int)

    sending = [f"S{i}" for i in range(n_send)]
    receiving = [f"R{i}" for i in range(n_recv)]
    interior = [f"I{i}" for i in range(n_int)]
    external = [f"X{i}" for i in range(n_ext)]
    area_buses = sending + receiving + interior

    branches = []
    nxt = 0

    def add(u, v, b=None):
        nonlocal nxt
        branches.append(Branch(
            id=f"L{nxt}", from_bus=u, to_bus=v,
            b=float(b if b is not None else rng.uniform(0.5, 5.0))))
        nxt += 1

    order = list(area_buses)
    rng.shuffle(order)
    for i in range(1, len(order)):
        add(order[i], order[int(rng.integers(0, i))])
    for _ in range(max(2, n_buses // 3)):  # chords make it meshed
        u, v = rng.choice(area_buses, size=2, replace=False)
        add(u, v)
    # interior buses must stay leak-free or entering power stops matching
    # b_mod * theta_area, so externals may only touch the boundary
    attach = sending + receiving
    for x in external:
        add(x, attach[int(rng.integers(0, len(attach)))])
        attach.append(x)

    model = _mk(area_buses + external, branches, slack=external[0])
    area = _area(model, sending + receiving, set(sending), set(receiving),
                 interior=set(interior))
    return model, area


def ladder_area(rows: int = 4, cols: int = 8, *, corridor: bool = True,
                corridor_circuits: int = 6, corridor_b: float = 2.5,
                corridor_limit: float = 1.0, chord_margin: float = 2.0,
                chord_b=(20.0, 60.0), diag_b=(10.0, 30.0),
                tie_b: float = 300.0, feeder_b: float = 500.0, seed: int = 7):
    """Meshed multi-row cutset area between an external source and sink.

    Buses N{c}_{r} form a rows x cols grid: column 0 is the sending boundary,
    the last column the receiving boundary, everything between is interior.
    Adjacent columns are coupled by per-row chords plus wrap-around diagonals;
    intra-column ties keep the rows stiffly linked.  With `corridor=True` the
    middle inter-column stage runs through two hub buses joined by
    `corridor_circuits` parallel limited circuits (flagged equivalenced, so
    they are rated cutset capacity but not N-1 candidates), and every chord
    gets a limit `chord_margin` times its loading at corridor capacity.
    """
    rng = np.random.default_rng(seed)
    ids = [[f"N{c}_{r}" for r in range(rows)] for c in range(cols)]
    buses = [b for col in ids for b in col]
    branches = []

    def add(bid, u, v, b, limit=math.inf, equivalenced=False):
        branches.append(Branch(id=bid, from_bus=u, to_bus=v, b=float(b),
                               limit=float(limit), equivalenced=equivalenced))

    cm = cols // 2 - 1  # corridor sits between columns cm and cm+1
    for c in range(cols - 1):
        if corridor and c == cm:
            continue
        for r in range(rows):
            add(f"C{c}_{r}", ids[c][r], ids[c + 1][r], rng.uniform(*chord_b))
            add(f"D{c}_{r}", ids[c][r], ids[c + 1][(r + 1) % rows],
                rng.uniform(*diag_b))
    for c in range(cols):
        for r in range(rows - 1):
            add(f"T{c}_{r}", ids[c][r], ids[c][r + 1], tie_b)

    if corridor:
        buses += ["H1", "H2"]
        for r in range(rows):
            add(f"F1_{r}", ids[cm][r], "H1", feeder_b)
            add(f"F2_{r}", "H2", ids[cm + 1][r], feeder_b)
        for k in range(corridor_circuits):
            add(f"K{k}", "H1", "H2", corridor_b, limit=corridor_limit,
                equivalenced=True)

    buses += ["SRC", "SNK"]
    for r in range(rows):
        add(f"ES_{r}", "SRC", ids[0][r], feeder_b)
        add(f"ER_{r}", ids[cols - 1][r], "SNK", feeder_b)

    model = _mk(buses, branches, slack="SNK")
    interior = {b for col in ids[1:cols - 1] for b in col}
    if corridor:
        interior |= {"H1", "H2"}
    area = _area(model, ids[0] + ids[cols - 1], set(ids[0]), set(ids[cols - 1]),
                 interior=interior)
    pattern = _pattern(model, {"SRC": 1.0, "SNK": -1.0})

    if corridor and math.isfinite(corridor_limit):
        # rate each chord at `chord_margin` times its loading when the
        # corridor is at capacity, so single outages shift flow without
        # moving the binding constraint off the corridor
        from .netmodel import line_flows, solve_dc

        cap = corridor_circuits * corridor_limit
        theta = solve_dc(model, cap * pattern.direction)
        flows = line_flows(model, theta)
        rated = []
        for br in model.branches:
            if br.id.startswith(("C", "D")):
                lim = max(abs(flows[br.id]) * chord_margin, 0.05)
                rated.append(Branch(id=br.id, from_bus=br.from_bus, to_bus=br.to_bus,
                                    b=br.b, limit=lim))
            else:
                rated.append(br)
        model = _mk(buses, rated, slack="SNK")
        area = _area(model, ids[0] + ids[cols - 1], set(ids[0]), set(ids[cols - 1]),
                     interior=interior)
        pattern = _pattern(model, {"SRC": 1.0, "SNK": -1.0})
    return model, area, pattern


def graded_chain(stages: int = 6, per_stage: int = 3, p0: float = 10.0,
                 grade: float = 0.08, b0: float = 40.0, seed: int = 11):
    """Series chain of parallel groups with graded headroom.

    Stage i sits between junction buses J{i} and J{i+1} and holds
    `per_stage` parallel circuits.  Ratings grade upward with i so that the
    outage of a stage-i circuit leaves post-outage capacity ~ p0*(1+grade*i):
    every candidate binds its own stage, capacities are all distinct, and
    tighter stages are also electrically weaker.  That makes the severity
    ranking strict: smaller post-outage capacity pairs with a larger area
    angle, which is the shape threshold selection relies on.
    """
    rng = np.random.default_rng(seed)
    junctions = [f"J{i}" for i in range(stages + 1)]
    branches = []
    for i in range(stages):
        cap_after = p0 * (1.0 + grade * i)
        b_i = b0 * (1.0 + grade * i) ** 2
        for k in range(per_stage):
            jitter = rng.uniform(0.98, 1.02)
            # per-circuit rating sized so losing one circuit leaves cap_after
            branches.append(Branch(
                id=f"G{i}_{k}", from_bus=junctions[i], to_bus=junctions[i + 1],
                b=b_i * jitter, limit=cap_after / (per_stage - 1)))
    branches.append(Branch(id="XS", from_bus="SRC", to_bus="J0", b=200.0))
    branches.append(Branch(id="XR", from_bus=junctions[-1], to_bus="SNK", b=200.0))
    model = _mk(junctions + ["SRC", "SNK"], branches, slack="SNK")
    area = _area(model, [junctions[0], junctions[-1]], {junctions[0]},
                 {junctions[-1]}, interior=set(junctions[1:-1]))
    pattern = _pattern(model, {"SRC": 1.0, "SNK": -1.0})
    return model, area, pattern

"""DC network model: buses, branches, susceptance matrix, DC power flow.

Angles are in radians and power in per unit throughout this module; callers
convert to degrees / MW at the presentation edge.  The susceptance matrix is
the weighted graph Laplacian of the series susceptances, so B is symmetric
with zero row sums and solving the slack-reduced system gives the DC angles.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import IslandedNetwork, ModelError, UnknownBranch, UnknownBus

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Bus:
    id: str
    name: str = ""
    kv: float = 0.0


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    b: float  # series susceptance magnitude, p.u.
    limit: float = math.inf  # |flow| limit, p.u.; inf = unlimited
    equivalenced: bool = False


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    slack: str
    mva_base: float = 100.0
    bus_index: dict = field(init=False, repr=False, compare=False)
    branch_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.buses:
            raise ModelError("model has no buses")
        bus_index = {}
        for i, bus in enumerate(self.buses):
            if bus.id in bus_index:
                raise ModelError(f"duplicate bus id {bus.id!r}")
            bus_index[bus.id] = i
        branch_index = {}
        for i, br in enumerate(self.branches):
            if br.id in branch_index:
                raise ModelError(f"duplicate branch id {br.id!r}")
            if br.from_bus not in bus_index or br.to_bus not in bus_index:
                raise ModelError(f"branch {br.id!r} references unknown bus")
            if br.from_bus == br.to_bus:
                raise ModelError(f"branch {br.id!r} is a self loop")
            if not br.b > 0.0:
                raise ModelError(f"branch {br.id!r} must have positive susceptance")
            if br.limit <= 0.0:
                raise ModelError(f"branch {br.id!r} must have positive flow limit")
            branch_index[br.id] = i
        if self.slack not in bus_index:
            raise ModelError(f"slack bus {self.slack!r} not in model")
        if self.mva_base <= 0.0:
            raise ModelError("mva_base must be positive")
        object.__setattr__(self, "bus_index", bus_index)
        object.__setattr__(self, "branch_index", branch_index)

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    def check_branches(self, branch_ids: Iterable[str]) -> frozenset:
        ids = frozenset(branch_ids)
        missing = ids - self.branch_index.keys()
        if missing:
            raise UnknownBranch(missing)
        return ids

    def without_branches(self, branch_ids: Iterable[str]) -> "NetworkModel":
        """Copy of the model with the given branches permanently removed."""
        ids = self.check_branches(branch_ids)
        kept = tuple(br for br in self.branches if br.id not in ids)
        return replace(self, branches=kept)

    def injection_vector(self, injections: Mapping[str, float]) -> np.ndarray:
        """Mapping bus id -> p.u. injection to a dense vector in bus order."""
        missing = injections.keys() - self.bus_index.keys()
        if missing:
            raise UnknownBus(missing)
        vec = np.zeros(self.n_buses)
        for bus, p in injections.items():
            vec[self.bus_index[bus]] = float(p)
        return vec


def build_susceptance(model: NetworkModel, exclude: frozenset = frozenset()) -> sp.csr_matrix:
    """Weighted Laplacian of series susceptances, excluded branches omitted."""
    exclude = model.check_branches(exclude)
    n = model.n_buses
    rows, cols, vals = [], [], []
    for br in model.branches:
        if br.id in exclude:
            continue
        i = model.bus_index[br.from_bus]
        j = model.bus_index[br.to_bus]
        rows += [i, j, i, j]
        cols += [i, j, j, i]
        vals += [br.b, br.b, -br.b, -br.b]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def connected_components(model: NetworkModel, exclude: frozenset = frozenset()) -> list[frozenset]:
    exclude = model.check_branches(exclude)
    adj: dict[str, list[str]] = {bus.id: [] for bus in model.buses}
    for br in model.branches:
        if br.id in exclude:
            continue
        adj[br.from_bus].append(br.to_bus)
        adj[br.to_bus].append(br.from_bus)
    seen: set[str] = set()
    comps = []
    for start in adj:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    seen.add(v)
                    queue.append(v)
        comps.append(frozenset(comp))
    return comps


def is_islanding(model: NetworkModel, exclude: frozenset = frozenset()):
    """True plus the component list when the exclusions split the network."""
    comps = connected_components(model, exclude)
    return len(comps) > 1, comps


class ReducedDcSystem:
    """Slack-reduced susceptance system factorized once, solved many times.

    The factorization is reused across every injection vector and every
    rank-1 outage update in the contingency sweep, which is what keeps the
    study fast.
    """

    def __init__(self, model: NetworkModel, exclude: frozenset = frozenset()):
        exclude = model.check_branches(exclude)
        comps = connected_components(model, exclude)
        if len(comps) > 1:
            raise IslandedNetwork(comps)
        self.model = model
        self.exclude = exclude
        n = model.n_buses
        slack = model.bus_index[model.slack]
        keep = [i for i in range(n) if i != slack]
        self._keep = np.asarray(keep, dtype=np.int64)
        # reduced position of each bus; slack maps to -1
        self.reduced_index = np.full(n, -1, dtype=np.int64)
        self.reduced_index[self._keep] = np.arange(n - 1)
        self._slack = slack
        if n > 1:
            b_full = build_susceptance(model, exclude).tocsc()
            b_red = b_full[keep, :][:, keep].tocsc()
            self._lu = splu(b_red)
        else:
            self._lu = None

    def solve(self, injections: np.ndarray) -> np.ndarray:
        """DC angles (radians, slack = 0) for one injection vector or a
        (n, k) stack of them."""
        inj = np.asarray(injections, dtype=float)
        single = inj.ndim == 1
        if single:
            inj = inj[:, None]
        if inj.shape[0] != self.model.n_buses:
            raise ModelError("injection vector length does not match bus count")
        theta = np.zeros_like(inj)
        if self._lu is not None:
            theta[self._keep, :] = self._lu.solve(inj[self._keep, :])
        return theta[:, 0] if single else theta

    def solve_reduced_columns(self, cols: np.ndarray) -> np.ndarray:
        """Solve for reduced-space right-hand sides, returning full-space
        columns with a zero slack row."""
        sol = self._lu.solve(cols) if self._lu is not None else np.zeros_like(cols)
        full = np.zeros((self.model.n_buses, cols.shape[1]))
        full[self._keep, :] = sol
        return full


def solve_dc(model: NetworkModel, injections, exclude: frozenset = frozenset()) -> np.ndarray:
    """One-shot DC power flow.  `injections` is a bus-id mapping or a vector
    in bus order (p.u.); returns angles in radians with the slack at zero."""
    if isinstance(injections, Mapping):
        injections = model.injection_vector(injections)
    return ReducedDcSystem(model, exclude).solve(injections)


def branch_arrays(model: NetworkModel, exclude: frozenset = frozenset()):
    """(ids, from_idx, to_idx, b, limit) over non-excluded branches."""
    exclude = model.check_branches(exclude)
    ids, fr, to, b, lim = [], [], [], [], []
    for br in model.branches:
        if br.id in exclude:
            continue
        ids.append(br.id)
        fr.append(model.bus_index[br.from_bus])
        to.append(model.bus_index[br.to_bus])
        b.append(br.b)
        lim.append(br.limit)
    return (ids, np.asarray(fr, dtype=np.int64), np.asarray(to, dtype=np.int64),
            np.asarray(b, dtype=float), np.asarray(lim, dtype=float))


def line_flows(model: NetworkModel, theta: np.ndarray, exclude: frozenset = frozenset()) -> dict:
    """Signed from->to p.u. flow per branch id; excluded branches absent."""
    exclude = model.check_branches(exclude)
    theta = np.asarray(theta, dtype=float)
    flows = {}
    for br in model.branches:
        if br.id in exclude:
            continue
        i = model.bus_index[br.from_bus]
        j = model.bus_index[br.to_bus]
        flows[br.id] = br.b * (theta[i] - theta[j])
    return flows


# ---------------------------------------------------------------------------
# file format


def model_from_dict(data: dict) -> NetworkModel:
    try:
        buses = tuple(
            Bus(id=str(b["id"]), name=str(b.get("name", "")), kv=float(b.get("kv", 0.0)))
            for b in data["buses"]
        )
        branches = []
        for br in data["branches"]:
            limit = br.get("limit")
            branches.append(Branch(
                id=str(br["id"]),
                from_bus=str(br["from"]),
                to_bus=str(br["to"]),
                b=float(br["b"]),
                limit=math.inf if limit in (None, "unlimited") else float(limit),
                equivalenced=bool(br.get("equivalenced", False)),
            ))
        slack = str(data["slack"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"bad model file: {exc}") from exc
    return NetworkModel(
        buses=buses,
        branches=tuple(branches),
        slack=slack,
        mva_base=float(data.get("mva_base", 100.0)),
    )


def model_to_dict(model: NetworkModel) -> dict:
    return {
        "mva_base": model.mva_base,
        "slack": model.slack,
        "buses": [{"id": b.id, "name": b.name, "kv": b.kv} for b in model.buses],
        "branches": [
            {
                "id": br.id,
                "from": br.from_bus,
                "to": br.to_bus,
                "b": br.b,
                "limit": None if math.isinf(br.limit) else br.limit,
                "equivalenced": br.equivalenced,
            }
            for br in model.branches
        ],
    }


def load_model(path) -> NetworkModel:
    with open(path) as fp:
        return model_from_dict(json.load(fp))


def save_model(model: NetworkModel, path) -> None:
    with open(path, "w") as fp:
        json.dump(model_to_dict(model), fp, indent=2)
        fp.write("\n")

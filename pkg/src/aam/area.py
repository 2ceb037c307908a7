"""Monitored area: boundary/interior split, Kron reduction, angle weights.

The area angle is a susceptance-weighted combination of boundary bus angles.
Interior buses are eliminated by Kron reduction of the area susceptance
matrix (built from internal branches only), and the weights come from the
sending-side selector applied to the boundary equivalent:

    b_mod = sigma B_eq sigma^T,   w = sigma B_eq / b_mod

so sending weights sum to +1, receiving weights to -1, and the weighted angle
is invariant to a uniform shift of all bus angles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import AreaError, DegenerateArea, SingularInterior, UnknownBus
from .netmodel import NetworkModel


@dataclass(frozen=True)
class AreaDefinition:
    boundary: tuple[str, ...]          # ordered; weight vectors follow this order
    sending: frozenset
    receiving: frozenset
    interior: frozenset
    internal_branches: frozenset

    def __post_init__(self):
        bset = set(self.boundary)
        if len(bset) != len(self.boundary):
            raise AreaError("duplicate boundary bus")
        if not self.sending or not self.receiving:
            raise AreaError("area needs at least one sending and one receiving bus")
        if self.sending & self.receiving:
            raise AreaError("a bus cannot be both sending and receiving")
        if (self.sending | self.receiving) != bset:
            raise AreaError("sending/receiving must partition the boundary")
        if bset & self.interior:
            raise AreaError("boundary and interior buses must be disjoint")

    @property
    def area_buses(self) -> frozenset:
        return frozenset(self.boundary) | self.interior

    def validate_against(self, model: NetworkModel) -> None:
        missing = self.area_buses - model.bus_index.keys()
        if missing:
            raise UnknownBus(missing)
        model.check_branches(self.internal_branches)
        for bid in self.internal_branches:
            br = model.branches[model.branch_index[bid]]
            if br.from_bus not in self.area_buses or br.to_bus not in self.area_buses:
                raise AreaError(f"internal branch {bid!r} leaves the area")

    def without_branches(self, branch_ids: Iterable[str]) -> "AreaDefinition":
        ids = frozenset(branch_ids)
        return replace(self, internal_branches=self.internal_branches - ids)


def derive_internal_branches(model: NetworkModel, boundary, interior) -> frozenset:
    """Branches with both endpoints inside the area (ties between boundary
    buses count: they carry part of the through flow)."""
    area_buses = set(boundary) | set(interior)
    return frozenset(
        br.id for br in model.branches
        if br.from_bus in area_buses and br.to_bus in area_buses
    )


def area_susceptance(model: NetworkModel, area: AreaDefinition,
                     exclude: frozenset = frozenset()):
    """Laplacian of the internal branches over [boundary..., interior...].

    Returns (matrix, bus order).  Excluded branch ids not internal to the
    area are ignored here; they matter to the full-network solve only.
    """
    order = list(area.boundary) + sorted(area.interior)
    pos = {bus: i for i, bus in enumerate(order)}
    n = len(order)
    rows, cols, vals = [], [], []
    for bid in area.internal_branches:
        if bid in exclude:
            continue
        br = model.branches[model.branch_index[bid]]
        i = pos[br.from_bus]
        j = pos[br.to_bus]
        rows += [i, j, i, j]
        cols += [i, j, j, i]
        vals += [br.b, br.b, -br.b, -br.b]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n)), order


def kron_reduce(b_area, n_boundary: int) -> np.ndarray:
    """Eliminate trailing interior rows/cols by the Schur complement
    B_bb - B_bi B_ii^-1 B_ib.  The first n_boundary rows/cols are boundary."""
    b_area = sp.csr_matrix(b_area)
    n = b_area.shape[0]
    if n_boundary < 0 or n_boundary > n:
        raise AreaError("boundary count out of range")
    if n_boundary == n:
        return b_area.toarray()
    bb = b_area[:n_boundary, :n_boundary].toarray()
    bi = b_area[:n_boundary, n_boundary:].toarray()
    ii = b_area[n_boundary:, n_boundary:].tocsc()
    diag = ii.diagonal()
    if np.any(diag <= 0.0):
        raise SingularInterior("interior bus with no internal branch")
    try:
        lu = splu(ii)
        x = lu.solve(bi.T)  # B_ii^-1 B_ib
    except RuntimeError as exc:
        raise SingularInterior(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularInterior("interior block is singular")
    return bb - bi @ x


def boundary_equivalent(model: NetworkModel, area: AreaDefinition,
                        exclude: frozenset = frozenset()) -> np.ndarray:
    b_area, _ = area_susceptance(model, area, exclude)
    return kron_reduce(b_area, len(area.boundary))


def sending_selector(area: AreaDefinition) -> np.ndarray:
    """sigma: 1 on sending boundary buses, 0 on receiving, in boundary order."""
    return np.asarray([1.0 if bus in area.sending else 0.0 for bus in area.boundary])


@dataclass(frozen=True)
class BoundaryWeights:
    boundary: tuple[str, ...]
    weights: np.ndarray  # aligned with `boundary`
    b_mod: float         # p.u. equivalent through-susceptance

    def as_mapping(self) -> dict:
        return {bus: float(w) for bus, w in zip(self.boundary, self.weights)}


def compute_weights(b_eq: np.ndarray, sigma: np.ndarray,
                    boundary: tuple = ()) -> BoundaryWeights:
    b_eq = np.asarray(b_eq, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if b_eq.shape != (sigma.size, sigma.size):
        raise AreaError("selector length does not match boundary equivalent")
    row = sigma @ b_eq
    b_mod = float(row @ sigma)
    if b_mod <= 1e-12:
        raise DegenerateArea(
            f"through-susceptance {b_mod:.3e} p.u.; sending and receiving sides"
            " are not coupled through the area")
    return BoundaryWeights(boundary=tuple(boundary), weights=row / b_mod, b_mod=b_mod)


def weights_for(model: NetworkModel, area: AreaDefinition,
                exclude: frozenset = frozenset()) -> BoundaryWeights:
    """Full pipeline: internal Laplacian -> Kron reduction -> weights."""
    b_eq = boundary_equivalent(model, area, exclude)
    return compute_weights(b_eq, sending_selector(area), area.boundary)


def area_angle(weights: BoundaryWeights, boundary_angles) -> float:
    """Weighted area angle; same unit as the input angles."""
    theta = np.asarray(boundary_angles, dtype=float)
    if theta.shape != weights.weights.shape:
        raise AreaError("boundary angle vector length does not match weights")
    return float(weights.weights @ theta)


# ---------------------------------------------------------------------------
# file format


def area_from_dict(data: dict, model: NetworkModel) -> AreaDefinition:
    try:
        boundary = tuple(str(b) for b in data["boundary"])
        sending = frozenset(str(b) for b in data["sending"])
        receiving = frozenset(str(b) for b in data["receiving"])
        interior = frozenset(str(b) for b in data.get("interior", []))
    except (KeyError, TypeError) as exc:
        raise AreaError(f"bad area file: {exc}") from exc
    area = AreaDefinition(
        boundary=boundary,
        sending=sending,
        receiving=receiving,
        interior=interior,
        internal_branches=derive_internal_branches(model, boundary, interior),
    )
    area.validate_against(model)
    return area


def area_to_dict(area: AreaDefinition) -> dict:
    return {
        "boundary": list(area.boundary),
        "sending": sorted(area.sending),
        "receiving": sorted(area.receiving),
        "interior": sorted(area.interior),
    }


def load_area(path, model: NetworkModel) -> AreaDefinition:
    with open(path) as fp:
        return area_from_dict(json.load(fp), model)


def save_area(area: AreaDefinition, path) -> None:
    with open(path, "w") as fp:
        json.dump(area_to_dict(area), fp, indent=2)
        fp.write("\n")

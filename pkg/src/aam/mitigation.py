"""Load-shed mitigation sized and placed by the area weights.

Shedding load at receiving boundary buses reduces the power drawn through
the area, so the area angle drops by delta_theta = -P_shed / b_mod (radians,
per unit).  The per-bus split follows the weight magnitudes: buses with more
leverage on the area angle shed proportionally more, normalized so the plan
totals exactly the requested amount.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .area import AreaDefinition, BoundaryWeights, area_angle
from .errors import AreaError
from .netmodel import NetworkModel, solve_dc
from .study import TransferPattern


@dataclass(frozen=True)
class MitigationPlan:
    total_mw: float
    shed_mw: tuple            # (bus, MW) per receiving bus, boundary order
    predicted_delta_deg: float

    def __post_init__(self):
        if self.total_mw < 0:
            raise ValueError("cannot shed a negative total")
        total = sum(mw for _, mw in self.shed_mw)
        if abs(total - self.total_mw) > 1e-6:
            raise ValueError("per-bus shed amounts do not add up to the total")


def allocate_load_shed(weights: BoundaryWeights, area: AreaDefinition,
                       total_mw: float, mva_base: float = 100.0) -> MitigationPlan:
    """Split total_mw over receiving boundary buses proportionally to |w|."""
    if total_mw < 0:
        raise ValueError("cannot shed a negative total")
    recv = [(i, bus) for i, bus in enumerate(weights.boundary) if bus in area.receiving]
    if not recv:
        raise AreaError("area has no receiving boundary buses")
    mags = np.asarray([abs(weights.weights[i]) for i, _ in recv])
    denom = float(mags.sum())
    if denom <= 0.0:
        raise AreaError("receiving weights are all zero; cannot place shed")
    shares = mags / denom
    shed = tuple((bus, float(total_mw * s)) for (_, bus), s in zip(recv, shares))
    delta = -math.degrees((total_mw / mva_base) / weights.b_mod)
    return MitigationPlan(total_mw=float(total_mw), shed_mw=shed,
                          predicted_delta_deg=delta)


def simulate_mitigation(model: NetworkModel, area: AreaDefinition,
                        weights: BoundaryWeights, injections: np.ndarray,
                        plan: MitigationPlan, pattern: TransferPattern):
    """Apply the plan to the injections and re-solve.

    Shed load appears as added injection at the receiving buses; the same
    total is backed off pro rata at the pattern's sending-side sources so the
    case stays balanced.  Returns (theta_before_deg, theta_after_deg,
    adjusted injections).
    """
    inj = np.asarray(injections, dtype=float).copy()
    bidx = [model.bus_index[b] for b in weights.boundary]

    theta0 = solve_dc(model, inj)
    before = area_angle(weights, np.degrees(theta0[bidx]))

    total_pu = plan.total_mw / model.mva_base
    for bus, mw in plan.shed_mw:
        if bus not in area.receiving:
            raise AreaError(f"plan sheds at non-receiving bus {bus!r}")
        inj[model.bus_index[bus]] += mw / model.mva_base
    src = np.clip(pattern.direction, 0.0, None)
    src_total = float(src.sum())
    if src_total <= 0.0:
        raise AreaError("transfer pattern has no sending-side sources")
    inj -= total_pu * (src / src_total)

    theta1 = solve_dc(model, inj)
    after = area_angle(weights, np.degrees(theta1[bidx]))
    return before, after, inj


def plan_to_dict(plan: MitigationPlan) -> dict:
    return {
        "total_mw": plan.total_mw,
        "shed_mw": [{"bus": bus, "mw": mw} for bus, mw in plan.shed_mw],
        "predicted_delta_deg": plan.predicted_delta_deg,
    }

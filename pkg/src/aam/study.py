"""Offline interarea-transfer study: max transfer, N-1 sweep, thresholds.

The study stresses a transfer pattern until the first limited branch inside
the area binds, once per outage candidate.  Candidates are ranked by their
maximum entering power P_mod; the emergency threshold is the area angle of
the most severe candidate evaluated at its own limiting transfer level, and
the warning threshold is placed where a rolling three-point spread of the
ranked P_mod values first exceeds tau (i.e. where losing the next-worse
branch starts to cost real capability).

Thresholds computed on the model are shifted onto the operational angle
scale by the compensation offset delta = theta_ope - theta_mod measured at
normal operation, so model bias cancels out of the alarm levels.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .area import AreaDefinition, BoundaryWeights, weights_for
from .errors import (AamError, EmptyCandidateSet, EmptyResults,
                     NoBindingConstraint, PatternError, TooFewContingencies)
from .netmodel import NetworkModel, ReducedDcSystem, branch_arrays, connected_components


@dataclass(frozen=True)
class TransferPattern:
    base: np.ndarray       # p.u. injection at every bus, study base point
    direction: np.ndarray  # p.u. injection shift per unit of transfer level

    def validate(self) -> None:
        if self.base.shape != self.direction.shape:
            raise PatternError("base and direction lengths differ")
        if abs(float(self.direction.sum())) > 1e-9:
            raise PatternError("direction injections must balance to zero")
        if not np.any(self.direction != 0.0):
            raise PatternError("direction is identically zero")


@dataclass(frozen=True)
class MaxTransferResult:
    lam: float            # transfer level at the first binding limit
    p_enter: float        # p.u. power entering the area at that level
    binding_branch: str | None
    unbounded: bool


@dataclass(frozen=True)
class ContingencyResult:
    contingency_id: str   # branch id, or "base" for the no-outage row
    p_mod: float          # p.u. max entering power under this outage
    theta_mod: float      # degrees, area angle at the limiting condition
    islanding: bool


def entering_signs(model: NetworkModel, area: AreaDefinition, branch_ids: Sequence[str]) -> np.ndarray:
    """Per-branch sign of its contribution to the power entering the area
    at sending boundary buses.  Internal branches only; a tie between two
    sending buses nets out to zero."""
    signs = np.zeros(len(branch_ids))
    for i, bid in enumerate(branch_ids):
        if bid not in area.internal_branches:
            continue
        br = model.branches[model.branch_index[bid]]
        s = 0.0
        if br.from_bus in area.sending:
            s += 1.0
        if br.to_bus in area.sending:
            s -= 1.0
        signs[i] = s
    return signs


def _scan_mask(area: AreaDefinition, ids: Sequence[str], limits: np.ndarray) -> np.ndarray:
    internal = np.asarray([bid in area.internal_branches for bid in ids])
    return internal & np.isfinite(limits)


def max_transfer(model: NetworkModel, area: AreaDefinition, pattern: TransferPattern,
                 exclude: frozenset = frozenset()) -> MaxTransferResult:
    """Grow the transfer until the first limited internal branch hits its
    rating; closed form per branch thanks to DC linearity."""
    pattern.validate()
    sys = ReducedDcSystem(model, exclude)
    theta_b = sys.solve(pattern.base)
    theta_d = sys.solve(pattern.direction)
    ids, fr, to, b, lim = branch_arrays(model, exclude)
    flow_b = b * (theta_b[fr] - theta_b[to])
    flow_d = b * (theta_d[fr] - theta_d[to])
    scan = _scan_mask(area, ids, lim)
    lam_raw, bidx = _kernels.max_lambda(flow_b, flow_d, lim, scan)
    if math.isinf(lam_raw):
        return MaxTransferResult(lam=math.inf, p_enter=math.inf,
                                 binding_branch=None, unbounded=True)
    lam = max(0.0, float(lam_raw))
    signs = entering_signs(model, area, ids)
    p = float(signs @ (flow_b + lam * flow_d))
    return MaxTransferResult(lam=lam, p_enter=p,
                             binding_branch=ids[bidx], unbounded=False)


def default_candidates(model: NetworkModel, area: AreaDefinition) -> list[str]:
    """Internal branches eligible for the N-1 sweep (equivalenced lines are
    aggregates of external detail, not physical outages)."""
    return sorted(
        bid for bid in area.internal_branches
        if not model.branches[model.branch_index[bid]].equivalenced
    )


def check_candidates(model: NetworkModel, area: AreaDefinition,
                     candidates: Iterable[str]) -> list[str]:
    cands = list(dict.fromkeys(candidates))
    if not cands:
        raise EmptyCandidateSet("no contingency candidates")
    model.check_branches(cands)
    outside = [c for c in cands if c not in area.internal_branches]
    if outside:
        raise AamError(f"candidates outside the area: {', '.join(sorted(outside))}")
    equiv = [c for c in cands if model.branches[model.branch_index[c]].equivalenced]
    if equiv:
        raise AamError(f"equivalenced branches cannot be outage candidates: {', '.join(sorted(equiv))}")
    return cands


def contingency_sweep(model: NetworkModel, area: AreaDefinition, pattern: TransferPattern,
                      candidates: Iterable[str]) -> list[ContingencyResult]:
    """Two-pass N-1 study.

    Pass 1 finds the max entering power P_mod per outage; the worst (smallest
    P_mod) candidate fixes the limiting injections.  Pass 2 re-evaluates every
    outage at those injections and records the area angle using the base-case
    weights, so all rows are comparable on one angle scale.  The no-outage row
    is included as "base"; threshold selection ignores it.
    """
    pattern.validate()
    cands = check_candidates(model, area, candidates)
    weights = weights_for(model, area)

    sys = ReducedDcSystem(model)
    theta_b = sys.solve(pattern.base)
    theta_d = sys.solve(pattern.direction)
    ids, fr, to, b, lim = branch_arrays(model)
    pos = {bid: i for i, bid in enumerate(ids)}
    scan = _scan_mask(area, ids, lim)
    signs = entering_signs(model, area, ids)

    islanded: list[str] = []
    live: list[str] = []
    for c in cands:
        if len(connected_components(model, frozenset({c}))) > 1:
            islanded.append(c)
        else:
            live.append(c)
    if not live:
        raise EmptyResults("every candidate islands the network")

    cand_pos = np.asarray([pos[c] for c in live], dtype=np.int64)
    cand_from = fr[cand_pos]
    cand_to = to[cand_pos]
    cand_b = b[cand_pos]

    n_red = model.n_buses - 1
    e_cols = np.zeros((n_red, len(live)))
    for k in range(len(live)):
        ri = sys.reduced_index[cand_from[k]]
        rj = sys.reduced_index[cand_to[k]]
        if ri >= 0:
            e_cols[ri, k] += 1.0
        if rj >= 0:
            e_cols[rj, k] -= 1.0
    s_cols = sys.solve_reduced_columns(e_cols)

    lam, p_mod, _denom, _binding = _kernels.sweep_max_transfer(
        theta_b, theta_d, s_cols, cand_pos, cand_from, cand_to, cand_b,
        fr, to, b, lim, scan, signs)

    # numerical bridge not caught by the connectivity prefilter
    for k in np.flatnonzero(np.isnan(lam)):
        islanded.append(live[k])
    keep = ~np.isnan(lam)

    finite = np.isfinite(p_mod) & keep
    if not finite.any():
        raise NoBindingConstraint("no outage candidate ever hits a branch limit")
    worst = int(np.flatnonzero(finite)[np.argmin(p_mod[finite])])
    theta_new = theta_b + float(lam[worst]) * theta_d

    bidx = np.asarray([model.bus_index[bus] for bus in area.boundary], dtype=np.int64)
    ang = _kernels.candidate_area_angles(
        theta_new, s_cols, cand_from, cand_to, cand_b, bidx, weights.weights)

    flow_b = b * (theta_b[fr] - theta_b[to])
    flow_d = b * (theta_d[fr] - theta_d[to])
    lam_base, _ = _kernels.max_lambda(flow_b, flow_d, lim, scan)
    if math.isinf(lam_base):
        p_base = math.inf
    else:
        p_base = float(signs @ (flow_b + max(0.0, lam_base) * flow_d))
    theta_base = math.degrees(float(weights.weights @ theta_new[bidx]))

    results = [ContingencyResult("base", p_base, theta_base, False)]
    for k, cid in enumerate(live):
        if not keep[k]:
            continue
        results.append(ContingencyResult(
            cid, float(p_mod[k]), math.degrees(float(ang[k])), False))
    results.sort(key=lambda r: (-r.p_mod if math.isfinite(r.p_mod) else -math.inf,
                                r.contingency_id))
    for cid in sorted(islanded):
        results.append(ContingencyResult(cid, math.nan, math.nan, True))
    return results


def _ranked(results: Sequence[ContingencyResult]) -> list[ContingencyResult]:
    usable = [r for r in results
              if not r.islanding and r.contingency_id != "base" and math.isfinite(r.p_mod)]
    usable.sort(key=lambda r: (-r.p_mod, r.contingency_id))
    return usable


def emergency_threshold(results: Sequence[ContingencyResult]) -> float:
    """Area angle of the most severe usable contingency, degrees."""
    usable = _ranked(results)
    if not usable:
        raise EmptyResults("no usable contingency results")
    return usable[-1].theta_mod


def warning_threshold(results: Sequence[ContingencyResult], tau: float) -> float:
    """First angle where the rolling three-point spread of ranked P_mod
    exceeds tau; falls back to the emergency angle when the spread never
    does (uniformly harmless candidate set)."""
    usable = _ranked(results)
    if len(usable) < 3:
        raise TooFewContingencies(
            f"variability scan needs at least 3 ranked contingencies, got {len(usable)}")
    p = np.asarray([r.p_mod for r in usable])
    for k in range(2, len(usable)):
        if float(np.std(p[k - 2:k + 1], ddof=1)) >= tau:
            return usable[k].theta_mod
    return usable[-1].theta_mod


@dataclass(frozen=True)
class ThresholdSet:
    warning_model: float
    emergency_model: float
    delta_com: float
    warning_ope: float
    emergency_ope: float

    def __post_init__(self):
        if self.warning_ope > self.emergency_ope + 1e-9:
            raise AamError("warning threshold exceeds emergency threshold")


def compensate_thresholds(model_thresholds: tuple, theta_mod_normal: float,
                          theta_ope_normal: float) -> ThresholdSet:
    """Shift model-derived thresholds by the measured-vs-model offset at
    normal operation.  All angles in degrees."""
    warning_model, emergency_model = model_thresholds
    delta = theta_ope_normal - theta_mod_normal
    return ThresholdSet(
        warning_model=warning_model,
        emergency_model=emergency_model,
        delta_com=delta,
        warning_ope=warning_model + delta,
        emergency_ope=emergency_model + delta,
    )


# ---------------------------------------------------------------------------
# file formats


def pattern_from_dict(data: dict, model: NetworkModel) -> TransferPattern:
    try:
        base = model.injection_vector({str(k): float(v) for k, v in data.get("base", {}).items()})
        direction = model.injection_vector({str(k): float(v) for k, v in data["direction"].items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise PatternError(f"bad pattern file: {exc}") from exc
    pattern = TransferPattern(base=base, direction=direction)
    pattern.validate()
    return pattern


def load_pattern(path, model: NetworkModel) -> TransferPattern:
    with open(path) as fp:
        return pattern_from_dict(json.load(fp), model)


def save_sweep_csv(results: Sequence[ContingencyResult], path) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["contingency_id", "p_mod", "theta_mod", "islanding"])
        for r in results:
            writer.writerow([
                r.contingency_id,
                "" if math.isnan(r.p_mod) else f"{r.p_mod:.9f}",
                "" if math.isnan(r.theta_mod) else f"{r.theta_mod:.9f}",
                "true" if r.islanding else "false",
            ])


def load_sweep_csv(path) -> list[ContingencyResult]:
    out = []
    with open(path, newline="") as fp:
        for row in csv.DictReader(fp):
            out.append(ContingencyResult(
                contingency_id=row["contingency_id"],
                p_mod=float(row["p_mod"]) if row["p_mod"] else math.nan,
                theta_mod=float(row["theta_mod"]) if row["theta_mod"] else math.nan,
                islanding=row["islanding"] == "true",
            ))
    return out


def thresholds_to_dict(t: ThresholdSet) -> dict:
    return {
        "warning_model": t.warning_model,
        "emergency_model": t.emergency_model,
        "delta_com": t.delta_com,
        "warning_ope": t.warning_ope,
        "emergency_ope": t.emergency_ope,
    }


def thresholds_from_dict(data: dict) -> ThresholdSet:
    return ThresholdSet(
        warning_model=float(data["warning_model"]),
        emergency_model=float(data["emergency_model"]),
        delta_com=float(data.get("delta_com", 0.0)),
        warning_ope=float(data["warning_ope"]),
        emergency_ope=float(data["emergency_ope"]),
    )


def save_thresholds(t: ThresholdSet, path) -> None:
    with open(path, "w") as fp:
        json.dump(thresholds_to_dict(t), fp, indent=2)
        fp.write("\n")


def load_thresholds(path) -> ThresholdSet:
    with open(path) as fp:
        return thresholds_from_dict(json.load(fp))

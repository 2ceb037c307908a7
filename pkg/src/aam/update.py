"""Threshold update after a topology change, fast and reference routes.

When lines drop out of service the study thresholds go stale.  The original
route simply re-runs the full N-1 sweep on the changed network (one max
transfer per candidate).  The fast route runs max transfer ONCE on the
changed network to get the post-change entering power P_mod, then converts
it to a candidate angle through each candidate's updated through-susceptance:

    theta_k = P_mod / b_mod_k

with emergency = max over candidates and warning = midpoint of max and min.
That trades the per-candidate re-solve for a per-candidate Kron reduction of
the area alone, which is why it is fast enough for online use.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

from . import study
from .area import AreaDefinition, BoundaryWeights, weights_for
from .errors import (AreaError, ConfigError, EmptyResults, IslandedNetwork,
                     NoBindingConstraint)
from .netmodel import NetworkModel, connected_components


@dataclass(frozen=True)
class TopologyChange:
    removed_branches: frozenset

    def __post_init__(self):
        if not self.removed_branches:
            raise ConfigError("topology change removes no branches")


def updated_weights(model: NetworkModel, area: AreaDefinition,
                    removed: Iterable[str]) -> BoundaryWeights:
    """Boundary weights with the given internal branches out of service."""
    return weights_for(model, area, exclude=frozenset(removed))


def fast_thresholds(model: NetworkModel, area: AreaDefinition,
                    pattern: study.TransferPattern, change: TopologyChange,
                    candidates: Iterable[str]) -> tuple[float, float]:
    """(warning, emergency) in degrees; exactly one max-transfer evaluation."""
    removed = model.check_branches(change.removed_branches)
    cands = study.check_candidates(model, area, candidates)
    cands = [c for c in cands if c not in removed]
    if not cands:
        raise EmptyResults("no candidates left after the topology change")

    comps = connected_components(model, removed)
    if len(comps) > 1:
        raise IslandedNetwork(comps)

    base = study.max_transfer(model, area, pattern, exclude=removed)
    if base.unbounded:
        raise NoBindingConstraint("changed network has no binding limit")
    p_mod = base.p_enter

    angles = []
    for cand in cands:
        out = removed | {cand}
        if len(connected_components(model, out)) > 1:
            continue
        try:
            w = weights_for(model, area, exclude=out)
        except AreaError:
            # candidate cuts the area subgraph apart even though the full
            # network stays connected; no through-susceptance to speak of
            continue
        angles.append(math.degrees(p_mod / w.b_mod))
    if not angles:
        raise EmptyResults("every candidate islands the changed network")
    emergency = max(angles)
    warning = 0.5 * (max(angles) + min(angles))
    return warning, emergency


def original_thresholds(model: NetworkModel, area: AreaDefinition,
                        pattern: study.TransferPattern, change: TopologyChange,
                        candidates: Iterable[str], tau: float) -> tuple[float, float]:
    """Reference route: full sweep re-run on the changed network."""
    removed = model.check_branches(change.removed_branches)
    changed_model = model.without_branches(removed)
    changed_area = area.without_branches(removed)
    changed_area.validate_against(changed_model)
    cands = [c for c in study.check_candidates(model, area, candidates)
             if c not in removed]
    if not cands:
        raise EmptyResults("no candidates left after the topology change")
    results = study.contingency_sweep(changed_model, changed_area, pattern, cands)
    return (study.warning_threshold(results, tau),
            study.emergency_threshold(results))


def change_from_dict(data: dict) -> TopologyChange:
    try:
        removed = frozenset(str(b) for b in data["removed_branches"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad change file: {exc}") from exc
    return TopologyChange(removed_branches=removed)


def load_change(path) -> TopologyChange:
    with open(path) as fp:
        return change_from_dict(json.load(fp))

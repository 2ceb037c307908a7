"""Filling unmeasured boundary buses: PAC offsets and one-hop estimation.

Not every boundary bus has a PMU.  Two fallbacks, in decreasing fidelity:

* lse_neighbor_angle computes the far-end voltage phasor across a branch of
  known impedance from a measured voltage/current pair (Ohm's law), good
  whenever the adjacent substation is instrumented.
* A PAC entry pins an unmeasured bus to its electrically nearest PMU bus
  with a constant base-case angle offset; cheap and surprisingly accurate
  because nearby buses swing together.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, NoReachablePmu, UnknownBus, UnresolvableBus
from .netmodel import NetworkModel, build_susceptance, connected_components, solve_dc


@dataclass(frozen=True)
class Phasor:
    magnitude: float
    angle_deg: float

    def __post_init__(self):
        if self.magnitude < 0.0:
            raise ValueError("phasor magnitude must be non-negative")

    @property
    def as_complex(self) -> complex:
        return cmath.rect(self.magnitude, math.radians(self.angle_deg))


@dataclass(frozen=True)
class PacEntry:
    target: str
    reference: str
    pac_deg: float


@dataclass(frozen=True)
class PacTable:
    entries: tuple[PacEntry, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.target in seen:
                raise ConfigError(f"duplicate PAC target {e.target!r}")
            seen.add(e.target)

    def get(self, target: str) -> PacEntry | None:
        for e in self.entries:
            if e.target == target:
                return e
        return None


def electrical_distances(model: NetworkModel) -> np.ndarray:
    """Pairwise effective electrical distance d(i,j) from the pseudoinverse
    of the susceptance Laplacian."""
    lap = build_susceptance(model).toarray()
    lp = np.linalg.pinv(lap)
    d = np.diag(lp)
    return d[:, None] + d[None, :] - 2.0 * lp


def compute_pac_table(model: NetworkModel, boundary: Sequence[str],
                      pmu_buses: Sequence[str], base_injections) -> PacTable:
    """One entry per boundary bus without a PMU, referenced to the
    electrically nearest PMU bus (ties broken by bus id), with the offset
    taken from the base-case DC solution."""
    pmus = list(dict.fromkeys(pmu_buses))
    missing = set(pmus) - model.bus_index.keys()
    if missing:
        raise UnknownBus(missing)
    unmeasured = [b for b in boundary if b not in pmus]
    if not unmeasured:
        return PacTable(entries=())
    if not pmus:
        raise NoReachablePmu(unmeasured[0])

    theta = solve_dc(model, base_injections)
    comps = connected_components(model)
    comp_of = {}
    for ci, comp in enumerate(comps):
        for bus in comp:
            comp_of[bus] = ci
    dist = electrical_distances(model)

    entries = []
    for target in unmeasured:
        ti = model.bus_index[target]
        reachable = [p for p in pmus if comp_of[p] == comp_of[target]]
        if not reachable:
            raise NoReachablePmu(target)
        ref = min(reachable, key=lambda p: (dist[ti, model.bus_index[p]], p))
        ri = model.bus_index[ref]
        entries.append(PacEntry(
            target=target, reference=ref,
            pac_deg=math.degrees(theta[ti] - theta[ri])))
    return PacTable(entries=tuple(entries))


def lse_neighbor_angle(v_local: Phasor, i_line: Phasor, z_line: complex) -> float:
    """Angle (degrees) of the far-end voltage V_far = V_local - z * I."""
    if v_local.magnitude <= 0.0:
        raise ValueError("local voltage magnitude must be positive")
    v_far = v_local.as_complex - z_line * i_line.as_complex
    if v_far == 0:
        raise ValueError("far-end voltage collapsed to zero")
    return math.degrees(cmath.phase(v_far))


@dataclass(frozen=True)
class LseInput:
    v_local: Phasor
    i_line: Phasor
    z_line: complex


def estimate_boundary_angles(boundary: Sequence[str], measured: Mapping[str, float],
                             table: PacTable,
                             lse_inputs: Mapping[str, LseInput] | None = None):
    """Resolve every boundary bus to an angle in degrees.

    Priority per bus: direct measurement, then LSE from a measured neighbor,
    then PAC offset on the reference bus measurement.  Returns the angle
    vector in boundary order plus a bus -> source tag mapping.
    """
    lse_inputs = lse_inputs or {}
    angles = np.empty(len(boundary))
    sources = {}
    for i, bus in enumerate(boundary):
        if bus in measured:
            angles[i] = float(measured[bus])
            sources[bus] = "measured"
            continue
        if bus in lse_inputs:
            inp = lse_inputs[bus]
            angles[i] = lse_neighbor_angle(inp.v_local, inp.i_line, inp.z_line)
            sources[bus] = "lse"
            continue
        entry = table.get(bus)
        if entry is not None:
            if entry.reference not in measured:
                raise UnresolvableBus(bus, f"PAC reference {entry.reference!r} unmeasured")
            angles[i] = float(measured[entry.reference]) + entry.pac_deg
            sources[bus] = "pac"
            continue
        raise UnresolvableBus(bus)
    return angles, sources


# ---------------------------------------------------------------------------
# file formats


def pac_table_to_list(table: PacTable) -> list:
    return [{"target": e.target, "reference": e.reference, "pac_deg": e.pac_deg}
            for e in table.entries]


def pac_table_from_list(data) -> PacTable:
    try:
        entries = tuple(PacEntry(target=str(e["target"]), reference=str(e["reference"]),
                                 pac_deg=float(e["pac_deg"])) for e in data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad PAC table: {exc}") from exc
    return PacTable(entries=entries)


def save_pac_table(table: PacTable, path) -> None:
    with open(path, "w") as fp:
        json.dump(pac_table_to_list(table), fp, indent=2)
        fp.write("\n")


def load_pac_table(path) -> PacTable:
    with open(path) as fp:
        return pac_table_from_list(json.load(fp))


@dataclass(frozen=True)
class LseChannelSpec:
    """Where on the telemetry stream an LSE-estimated bus finds its inputs.

    Channel entries may be a bare index (angle only, magnitude defaults:
    1.0 p.u. voltage, 0.0 current) or {"angle": i, "mag": j}.
    """
    bus: str
    v_angle: int
    i_angle: int
    z: complex
    v_mag: int | None = None
    i_mag: int | None = None


def _channel_pair(raw) -> tuple[int, int | None]:
    if isinstance(raw, int):
        return raw, None
    try:
        return int(raw["angle"]), (int(raw["mag"]) if "mag" in raw else None)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad channel spec {raw!r}") from exc


def lse_specs_from_list(data) -> tuple[LseChannelSpec, ...]:
    specs = []
    try:
        for e in data:
            va, vm = _channel_pair(e["v_channel"])
            ia, im = _channel_pair(e["i_channel"])
            specs.append(LseChannelSpec(
                bus=str(e["bus"]), v_angle=va, v_mag=vm, i_angle=ia, i_mag=im,
                z=complex(float(e["z"]["r"]), float(e["z"]["x"]))))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad LSE config: {exc}") from exc
    return tuple(specs)


def load_lse_specs(path) -> tuple[LseChannelSpec, ...]:
    with open(path) as fp:
        return lse_specs_from_list(json.load(fp))

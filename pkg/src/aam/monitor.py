"""Real-time area angle monitor: frame ingestion, estimation, alarming.

Channel values are unwrapped per channel (a jump of more than half a turn is
treated as wrap-around, the continuation is kept), held across BAD/MISSING
samples, and staleness-checked against each bus's source at every tick.  The
alarm side uses two sustained-time hysteresis gates, one per threshold: a
gate turns on after the angle has stayed at/above its threshold continuously
for t_area and off after it has stayed below for t_area, so both escalation
and de-escalation carry the same dwell and short excursions never alarm.
Ticks with an unresolvable boundary bus freeze the gate timers and report
DATA_UNAVAILABLE without disturbing the underlying alarm state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .area import BoundaryWeights, area_angle
from .errors import ConfigError, UnresolvableBus
from .pac import (LseChannelSpec, LseInput, PacTable, Phasor,
                  estimate_boundary_angles, lse_specs_from_list,
                  pac_table_from_list)
from .study import ThresholdSet, thresholds_from_dict
from .wire import PhasorFrame, Quality

NORMAL = "NORMAL"
WARNING = "WARNING"
EMERGENCY = "EMERGENCY"
DATA_UNAVAILABLE = "DATA_UNAVAILABLE"


@dataclass(frozen=True)
class ChannelMap:
    angle: dict  # boundary bus id -> channel index

    def __post_init__(self):
        used = list(self.angle.values())
        if len(set(used)) != len(used):
            raise ConfigError("two buses bound to the same angle channel")
        if any(idx < 0 for idx in used):
            raise ConfigError("negative channel index")


@dataclass(frozen=True)
class MonitorConfig:
    thresholds: ThresholdSet
    weights: BoundaryWeights
    t_area: float = 5.0        # seconds a class must persist before reporting
    frame_rate: float = 30.0   # nominal frames per second, informational
    stale_limit: float = 1.0   # seconds before a held value counts as stale
    pac: PacTable = PacTable(entries=())
    lse: tuple = ()

    def __post_init__(self):
        if self.t_area < 0 or self.stale_limit <= 0 or self.frame_rate <= 0:
            raise ConfigError("t_area, stale_limit and frame_rate must be positive")

    @property
    def boundary(self) -> tuple:
        return self.weights.boundary


@dataclass(frozen=True)
class AlertState:
    status: str = DATA_UNAVAILABLE
    warn_above: bool = False
    warn_streak_us: int = 0
    warn_gate: bool = False
    emerg_above: bool = False
    emerg_streak_us: int = 0
    emerg_gate: bool = False
    last_area_angle: float | None = None
    last_timestamp_us: int = -1
    last_available: bool = False


def _gate(gate: bool, above_prev: bool, streak_prev: int, above_now: bool,
          dt_us: int, t_area_us: int):
    streak = streak_prev + dt_us if above_now == above_prev else 0
    if above_now and streak >= t_area_us:
        gate = True
    elif not above_now and streak >= t_area_us:
        gate = False
    return gate, above_now, streak


def classify_status(state: AlertState, area_angle_deg: float | None, now_us: int,
                    thresholds: ThresholdSet, t_area: float) -> AlertState:
    """Advance the alarm state machine by one evaluation tick."""
    if area_angle_deg is None:
        return replace(state, status=DATA_UNAVAILABLE, last_area_angle=None,
                       last_timestamp_us=now_us, last_available=False)
    t_area_us = int(round(t_area * 1e6))
    dt = (now_us - state.last_timestamp_us
          if state.last_available and state.last_timestamp_us >= 0 else 0)
    wg, wa, ws = _gate(state.warn_gate, state.warn_above, state.warn_streak_us,
                       area_angle_deg >= thresholds.warning_ope, dt, t_area_us)
    eg, ea, es = _gate(state.emerg_gate, state.emerg_above, state.emerg_streak_us,
                       area_angle_deg >= thresholds.emergency_ope, dt, t_area_us)
    status = EMERGENCY if eg else WARNING if wg else NORMAL
    return AlertState(status=status,
                      warn_above=wa, warn_streak_us=ws, warn_gate=wg,
                      emerg_above=ea, emerg_streak_us=es, emerg_gate=eg,
                      last_area_angle=area_angle_deg, last_timestamp_us=now_us,
                      last_available=True)


@dataclass(frozen=True)
class TickResult:
    timestamp_us: int
    area_angle_deg: float | None
    status: str
    transitions: tuple        # ((from, to),) when the reported status changed
    boundary: dict            # bus -> (angle_deg, source) when available


class _Channel:
    __slots__ = ("value", "raw", "last_us", "seen", "unwrap")

    def __init__(self, unwrap: bool):
        self.value = 0.0
        self.raw = 0.0
        self.last_us = -1
        self.seen = False
        self.unwrap = unwrap


class AreaMonitor:
    """Event-driven monitor: feed frames, evaluate on their timestamps."""

    def __init__(self, config: MonitorConfig, channel_map: ChannelMap):
        self.config = config
        self.map = channel_map
        measured = set(channel_map.angle)
        lse_buses = {s.bus for s in config.lse}
        pac_buses = {e.target for e in config.pac.entries}
        unresolved = [b for b in config.boundary
                      if b not in measured | lse_buses | pac_buses]
        if unresolved:
            raise ConfigError(
                f"boundary buses with no measurement, LSE, or PAC source: {unresolved}")
        self._channels: dict[int, _Channel] = {}
        for idx in channel_map.angle.values():
            self._channels[idx] = _Channel(unwrap=True)
        for spec in config.lse:
            for idx in (spec.v_angle, spec.i_angle):
                self._channels.setdefault(idx, _Channel(unwrap=True))
            for idx in (spec.v_mag, spec.i_mag):
                if idx is not None:
                    self._channels.setdefault(idx, _Channel(unwrap=False))
        self._stream_ts: dict[int, int] = {}
        self.out_of_order = 0
        self.state = AlertState()

    def ingest_frame(self, frame: PhasorFrame) -> bool:
        """Apply one frame; False (counted) if it arrived out of order."""
        last = self._stream_ts.get(frame.stream_id)
        if last is not None and frame.timestamp_us < last:
            self.out_of_order += 1
            return False
        self._stream_ts[frame.stream_id] = frame.timestamp_us
        for idx, ch in self._channels.items():
            if idx >= frame.n_channels:
                continue
            q = frame.qualities[idx]
            if q not in (Quality.GOOD, Quality.SUSPECT):
                continue  # hold last value; staleness clock keeps running
            raw = float(frame.angles[idx])
            if not ch.seen:
                ch.value = raw
            elif ch.unwrap:
                delta = raw - ch.raw
                delta -= 360.0 * round(delta / 360.0)
                ch.value += delta
            else:
                ch.value = raw
            ch.raw = raw
            ch.last_us = frame.timestamp_us
            ch.seen = True
        return True

    def _fresh(self, idx: int, now_us: int) -> bool:
        ch = self._channels.get(idx)
        if ch is None or not ch.seen:
            return False
        return now_us - ch.last_us <= int(round(self.config.stale_limit * 1e6))

    def evaluate_tick(self, now_us: int) -> TickResult:
        cfg = self.config
        measured = {}
        for bus, idx in self.map.angle.items():
            if self._fresh(idx, now_us):
                measured[bus] = self._channels[idx].value
        lse_inputs = {}
        for spec in cfg.lse:
            if spec.bus in measured:
                continue
            need = [spec.v_angle, spec.i_angle]
            need += [i for i in (spec.v_mag, spec.i_mag) if i is not None]
            if not all(self._fresh(i, now_us) for i in need):
                continue
            vmag = self._channels[spec.v_mag].value if spec.v_mag is not None else 1.0
            imag = self._channels[spec.i_mag].value if spec.i_mag is not None else 0.0
            lse_inputs[spec.bus] = LseInput(
                v_local=Phasor(vmag, self._channels[spec.v_angle].value),
                i_line=Phasor(imag, self._channels[spec.i_angle].value),
                z_line=spec.z)
        boundary = {}
        try:
            angles, sources = estimate_boundary_angles(
                cfg.boundary, measured, cfg.pac, lse_inputs)
            ang = area_angle(cfg.weights, angles)
            boundary = {bus: (float(angles[i]), sources[bus])
                        for i, bus in enumerate(cfg.boundary)}
        except UnresolvableBus:
            ang = None
        old = self.state
        self.state = classify_status(old, ang, now_us, cfg.thresholds, cfg.t_area)
        transitions = ()
        if self.state.status != old.status:
            transitions = ((old.status, self.state.status),)
        return TickResult(timestamp_us=now_us, area_angle_deg=ang,
                          status=self.state.status, transitions=transitions,
                          boundary=boundary)


def format_status_row(tick: TickResult) -> str:
    ang = "" if tick.area_angle_deg is None else f"{tick.area_angle_deg:.6f}"
    return f"{tick.timestamp_us},{ang},{tick.status}"


STATUS_LOG_HEADER = "timestamp_us,area_angle_deg,status"


def run_monitor(frames: Iterable[PhasorFrame], config: MonitorConfig,
                channel_map: ChannelMap, log_fp=None, on_tick=None) -> list[TickResult]:
    """Drive the monitor off an iterable of frames, one tick per accepted
    frame at its own timestamp.  Returns all ticks (and streams them to
    log_fp / on_tick as they happen)."""
    mon = AreaMonitor(config, channel_map)
    if log_fp is not None:
        log_fp.write(STATUS_LOG_HEADER + "\n")
    ticks = []
    for frame in frames:
        if not mon.ingest_frame(frame):
            continue
        tick = mon.evaluate_tick(frame.timestamp_us)
        ticks.append(tick)
        if log_fp is not None:
            log_fp.write(format_status_row(tick) + "\n")
        if on_tick is not None:
            on_tick(mon, tick)
    return ticks


# ---------------------------------------------------------------------------
# configuration file


def monitor_config_from_dict(data: dict):
    try:
        boundary = tuple(str(b) for b in data["boundary"])
        wmap = {str(k): float(v) for k, v in data["weights"].items()}
        missing = [b for b in boundary if b not in wmap]
        if missing:
            raise ConfigError(f"weights missing for boundary buses: {missing}")
        weights = BoundaryWeights(
            boundary=boundary,
            weights=np.asarray([wmap[b] for b in boundary]),
            b_mod=float(data["b_mod"]))
        config = MonitorConfig(
            thresholds=thresholds_from_dict(data["thresholds"]),
            weights=weights,
            t_area=float(data.get("t_area", 5.0)),
            frame_rate=float(data.get("frame_rate", 30.0)),
            stale_limit=float(data.get("stale_limit", 1.0)),
            pac=pac_table_from_list(data.get("pac", [])),
            lse=lse_specs_from_list(data.get("lse", [])),
        )
        cmap = ChannelMap(angle={str(k): int(v) for k, v in data["channels"].items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad monitor config: {exc}") from exc
    extra = set(cmap.angle) - set(boundary)
    if extra:
        raise ConfigError(f"channel bindings for non-boundary buses: {sorted(extra)}")
    return config, cmap


def load_monitor_config(path):
    with open(path) as fp:
        return monitor_config_from_dict(json.load(fp))


def monitor_config_to_dict(config: MonitorConfig, cmap: ChannelMap) -> dict:
    from .pac import pac_table_to_list
    from .study import thresholds_to_dict

    lse = []
    for s in config.lse:
        lse.append({
            "bus": s.bus,
            "v_channel": s.v_angle if s.v_mag is None else {"angle": s.v_angle, "mag": s.v_mag},
            "i_channel": s.i_angle if s.i_mag is None else {"angle": s.i_angle, "mag": s.i_mag},
            "z": {"r": s.z.real, "x": s.z.imag},
        })
    return {
        "thresholds": thresholds_to_dict(config.thresholds),
        "t_area": config.t_area,
        "frame_rate": config.frame_rate,
        "stale_limit": config.stale_limit,
        "boundary": list(config.boundary),
        "weights": config.weights.as_mapping(),
        "b_mod": config.weights.b_mod,
        "channels": dict(config_channels_sorted(cmap)),
        "pac": pac_table_to_list(config.pac),
        "lse": lse,
    }


def config_channels_sorted(cmap: ChannelMap):
    return sorted(cmap.angle.items(), key=lambda kv: kv[1])


def save_monitor_config(config: MonitorConfig, cmap: ChannelMap, path) -> None:
    with open(path, "w") as fp:
        json.dump(monitor_config_to_dict(config, cmap), fp, indent=2)
        fp.write("\n")

"""Scenario synthesis and telemetry replay.

A scenario is a scripted sequence of branch outages and injection steps on a
model.  Synthesis solves the DC case piecewise between events, passes the
boundary-bus angle targets through a first-order measurement lag
(tau = 0.5 s), adds seeded Gaussian noise, and emits frames at the requested
rate with integer-microsecond timestamps.  Replay sources are a frames CSV
or a live TCP stream of length-prefixed binary frames; a wall-clock speed
factor of `inf` streams as fast as the consumer accepts.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .area import AreaDefinition, load_area
from .errors import ConfigError
from .netmodel import NetworkModel, load_model, solve_dc
from .wire import PhasorFrame, Quality, encode_frame, pack_message

log = logging.getLogger(__name__)

LAG_TAU_S = 0.5


@dataclass(frozen=True)
class ScenarioEvent:
    t: float                      # seconds from scenario start
    action: str                   # "branch_outage" | "injection_step"
    branches: tuple = ()
    bus: str = ""
    delta_mw: float = 0.0


@dataclass(frozen=True)
class Scenario:
    model: NetworkModel
    area: AreaDefinition
    injections: dict              # bus -> p.u., the pre-event operating point
    events: tuple = ()
    duration: float = 10.0
    frame_rate: float = 30.0
    noise_std: float = 0.0        # degrees
    seed: int = 0
    stream_id: int = 1
    start_us: int = 0

    def __post_init__(self):
        if self.duration <= 0 or self.frame_rate <= 0:
            raise ConfigError("duration and frame_rate must be positive")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")
        for ev in self.events:
            if not 0.0 <= ev.t <= self.duration:
                raise ConfigError(f"event at t={ev.t} outside scenario duration")
            if ev.action not in ("branch_outage", "injection_step"):
                raise ConfigError(f"unknown event action {ev.action!r}")


def synthesize_scenario(scenario: Scenario) -> list[PhasorFrame]:
    """Deterministic frame sequence for the scenario (same seed, same bytes)."""
    model = scenario.model
    boundary = scenario.area.boundary
    bidx = [model.bus_index[b] for b in boundary]

    events = sorted(scenario.events, key=lambda e: e.t)
    n_frames = int(round(scenario.duration * scenario.frame_rate))
    times = np.arange(n_frames) / scenario.frame_rate

    # piecewise-constant targets: re-solve at each event boundary
    targets = np.empty((n_frames, len(boundary)))
    inj = model.injection_vector(scenario.injections)
    excluded: set[str] = set()
    next_ev = 0
    theta = None
    for k, t in enumerate(times):
        changed = theta is None
        while next_ev < len(events) and events[next_ev].t <= t:
            ev = events[next_ev]
            if ev.action == "branch_outage":
                excluded.update(ev.branches)
            else:
                inj = inj.copy()
                inj[model.bus_index[ev.bus]] += ev.delta_mw / model.mva_base
            changed = True
            next_ev += 1
        if changed:
            theta = solve_dc(model, inj, frozenset(excluded))
        targets[k, :] = np.degrees(theta[bidx])

    alpha = 1.0 - math.exp(-1.0 / (scenario.frame_rate * LAG_TAU_S))
    lagged = _kernels.lag_filter(targets, alpha)

    rng = np.random.default_rng(scenario.seed)
    if scenario.noise_std > 0.0:
        lagged = lagged + rng.normal(0.0, scenario.noise_std, lagged.shape)
    # keep emitted angles in the wire convention [-180, 180)
    emitted = (lagged + 180.0) % 360.0 - 180.0

    frames = []
    qual = np.zeros(len(boundary), dtype=np.uint8)  # all GOOD
    for k in range(n_frames):
        ts = scenario.start_us + round(k * 1e6 / scenario.frame_rate)
        frames.append(PhasorFrame(timestamp_us=int(ts), stream_id=scenario.stream_id,
                                  angles=emitted[k], qualities=qual.copy()))
    return frames


# ---------------------------------------------------------------------------
# frames CSV


def write_frames_csv(frames: Sequence[PhasorFrame], path) -> None:
    """Header: timestamp_us,ch0,ch0_q,ch1,ch1_q,...  One frame per row."""
    nchan = frames[0].n_channels if frames else 0
    header = ["timestamp_us"]
    for i in range(nchan):
        header += [f"ch{i}", f"ch{i}_q"]
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        for fr in frames:
            row = [fr.timestamp_us]
            for i in range(fr.n_channels):
                row += [f"{fr.angles[i]:.9f}", int(fr.qualities[i])]
            writer.writerow(row)


class CsvReplay:
    """Replays a frames CSV; malformed rows are skipped and counted."""

    def __init__(self, path, stream_id: int = 1):
        self.path = Path(path)
        self.stream_id = stream_id
        self.malformed_rows = 0

    def frames(self, speed: float = math.inf) -> Iterable[PhasorFrame]:
        with open(self.path, newline="") as fp:
            reader = csv.reader(fp)
            header = next(reader, None)
            if header is None:
                return
            prev_ts = None
            for row in reader:
                frame = self._parse(row)
                if frame is None:
                    self.malformed_rows += 1
                    continue
                if prev_ts is not None and math.isfinite(speed) and speed > 0:
                    gap = (frame.timestamp_us - prev_ts) / 1e6 / speed
                    if gap > 0:
                        time.sleep(gap)
                prev_ts = frame.timestamp_us
                yield frame

    def _parse(self, row) -> PhasorFrame | None:
        if len(row) < 1 or len(row) % 2 == 0:
            return None
        try:
            ts = int(row[0])
            vals = [float(x) for x in row[1::2]]
            quals = [int(x) for x in row[2::2]]
            if any(not 0 <= q <= 3 for q in quals):
                return None
            return PhasorFrame(timestamp_us=ts, stream_id=self.stream_id,
                               angles=np.asarray(vals),
                               qualities=np.asarray(quals, dtype=np.uint8))
        except ValueError:
            return None


# ---------------------------------------------------------------------------
# TCP streaming


class _Client:
    def __init__(self, sock: socket.socket, addr, maxsize: int):
        self.sock = sock
        self.addr = addr
        self.queue: queue.Queue = queue.Queue(maxsize=maxsize)

    def offer(self, payload: bytes) -> None:
        # slow consumer: drop the oldest message, keep the stream current
        while True:
            try:
                self.queue.put_nowait(payload)
                return
            except queue.Full:
                try:
                    self.queue.get_nowait()
                except queue.Empty:
                    pass


class StreamServer:
    """Broadcasts a frame sequence to every connected TCP client.

    Set wait_for_clients to hold the broadcast until that many subscribers
    are attached (deterministic end-to-end replays); speed scales the pacing
    between frame timestamps, inf meaning no pacing at all.
    """

    def __init__(self, frames: Iterable[PhasorFrame], host: str = "127.0.0.1",
                 port: int = 0, speed: float = 1.0, wait_for_clients: int = 0,
                 queue_size: int = 512):
        if speed <= 0:
            raise ConfigError("speed must be positive")
        self._frames = frames
        self._speed = speed
        self._wait_for = wait_for_clients
        self._queue_size = queue_size
        self._clients: list[_Client] = []
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._server = socket.create_server((host, port))
        # poll for stop: closing a listening socket does not wake accept()
        self._server.settimeout(0.25)
        self.host, self.port = self._server.getsockname()[:2]
        self._threads: list[threading.Thread] = []
        self.frames_sent = 0

    def start(self) -> "StreamServer":
        accept = threading.Thread(target=self._accept_loop, daemon=True)
        produce = threading.Thread(target=self._produce_loop, daemon=True)
        self._threads += [accept, produce]
        accept.start()
        produce.start()
        return self

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, addr = self._server.accept()
            except TimeoutError:
                continue
            except OSError:
                return
            sock.settimeout(10.0)
            client = _Client(sock, addr, self._queue_size)
            with self._lock:
                self._clients.append(client)
            t = threading.Thread(target=self._client_loop, args=(client,), daemon=True)
            self._threads.append(t)
            t.start()

    def _client_loop(self, client: _Client) -> None:
        try:
            while True:
                payload = client.queue.get()
                if payload is None:
                    break
                client.sock.sendall(payload)
        except OSError as exc:
            log.warning("dropping client %s: %s", client.addr, exc)
        finally:
            try:
                client.sock.close()
            except OSError:
                pass
            with self._lock:
                if client in self._clients:
                    self._clients.remove(client)

    def _produce_loop(self) -> None:
        while self._wait_for and not self._stop.is_set():
            with self._lock:
                if len(self._clients) >= self._wait_for:
                    break
            time.sleep(0.005)
        prev_ts = None
        for frame in self._frames:
            if self._stop.is_set():
                break
            if prev_ts is not None and math.isfinite(self._speed):
                gap = (frame.timestamp_us - prev_ts) / 1e6 / self._speed
                if gap > 0:
                    time.sleep(gap)
            prev_ts = frame.timestamp_us
            payload = pack_message(encode_frame(frame))
            with self._lock:
                clients = list(self._clients)
            for client in clients:
                client.offer(payload)
            self.frames_sent += 1
        self._finish()

    def _finish(self) -> None:
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            client.offer(None)
        try:
            self._server.close()
        except OSError:
            pass

    def stop(self) -> None:
        self._stop.set()
        try:
            self._server.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
        for client in clients:
            client.offer(None)

    def join(self, timeout: float = 30.0) -> None:
        deadline = time.monotonic() + timeout
        for t in self._threads:
            t.join(max(0.0, deadline - time.monotonic()))


def serve_stream(frames: Iterable[PhasorFrame], host: str = "127.0.0.1", port: int = 0,
                 speed: float = 1.0, wait_for_clients: int = 0) -> StreamServer:
    return StreamServer(frames, host, port, speed, wait_for_clients).start()


def connect_stream(host: str, port: int, timeout: float = 10.0):
    """Client side: (FrameReader, socket) off a live stream."""
    from .wire import FrameReader

    sock = socket.create_connection((host, port), timeout=timeout)
    return FrameReader(sock.makefile("rb")), sock


# ---------------------------------------------------------------------------
# scenario file


def scenario_from_dict(data: dict, base_dir: Path | None = None) -> Scenario:
    base_dir = Path(base_dir) if base_dir else Path(".")
    try:
        model = load_model(base_dir / data["model"])
        area = load_area(base_dir / data["area"], model)
        events = []
        for ev in data.get("events", []):
            action = str(ev["action"])
            events.append(ScenarioEvent(
                t=float(ev["t"]),
                action=action,
                branches=tuple(str(b) for b in ev.get("branches", [])),
                bus=str(ev.get("bus", "")),
                delta_mw=float(ev.get("delta_mw", 0.0)),
            ))
        return Scenario(
            model=model,
            area=area,
            injections={str(k): float(v) for k, v in data.get("injections", {}).items()},
            events=tuple(events),
            duration=float(data.get("duration", 10.0)),
            frame_rate=float(data.get("frame_rate", 30.0)),
            noise_std=float(data.get("noise_std", 0.0)),
            seed=int(data.get("seed", 0)),
            stream_id=int(data.get("stream_id", 1)),
            start_us=int(data.get("start_us", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario file: {exc}") from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path) as fp:
        return scenario_from_dict(json.load(fp), base_dir=path.parent)

"""HTTP/WebSocket gateway over a live monitor.

A MonitorHub decouples the monitor thread from any number of web clients:
the monitor publishes each tick, the hub keeps the latest snapshot plus a
bounded history ring, and every subscriber gets a latest-wins queue of depth
one so a slow websocket can never back-pressure the monitor.  What-if
mitigation queries run against an immutable context and touch no live state.
"""
from __future__ import annotations

import asyncio
import queue
import threading
from collections import deque
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .area import AreaDefinition, BoundaryWeights
from .errors import AamError
from .mitigation import allocate_load_shed, plan_to_dict, simulate_mitigation
from .monitor import TickResult
from .netmodel import NetworkModel
from .study import ThresholdSet, TransferPattern, thresholds_to_dict

DEFAULT_HISTORY = 108_000  # one hour at 30 frames/s


class Subscription:
    def __init__(self, hub: "MonitorHub"):
        self._hub = hub
        self.queue: queue.Queue = queue.Queue(maxsize=1)

    def offer(self, item: dict) -> None:
        # coalesce: a subscriber that lags sees only the newest tick
        while True:
            try:
                self.queue.put_nowait(item)
                return
            except queue.Full:
                try:
                    self.queue.get_nowait()
                except queue.Empty:
                    pass

    def get(self, timeout: float | None = None) -> dict | None:
        try:
            return self.queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        self._hub.unsubscribe(self)


class MonitorHub:
    def __init__(self, history_size: int = DEFAULT_HISTORY):
        self._lock = threading.Lock()
        self._latest: dict | None = None
        self._history: deque = deque(maxlen=history_size)
        self._subs: list[Subscription] = []

    def publish(self, snapshot: dict) -> None:
        with self._lock:
            self._latest = snapshot
            self._history.append((snapshot["timestamp_us"], snapshot["area_angle_deg"],
                                  snapshot["status"]))
            subs = list(self._subs)
        for sub in subs:
            sub.offer(snapshot)

    def latest(self) -> dict | None:
        with self._lock:
            return self._latest

    def history(self, ts_from: int | None = None, ts_to: int | None = None) -> list[dict]:
        with self._lock:
            rows = list(self._history)
        out = []
        for ts, ang, status in rows:
            if ts_from is not None and ts < ts_from:
                continue
            if ts_to is not None and ts > ts_to:
                continue
            out.append({"timestamp_us": ts, "area_angle_deg": ang, "status": status})
        return out

    def subscribe(self) -> Subscription:
        sub = Subscription(self)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)


def tick_snapshot(tick: TickResult, thresholds: ThresholdSet) -> dict:
    """JSON-ready snapshot of one evaluation tick (angles in degrees,
    timestamps in microseconds, snake_case keys)."""
    return {
        "timestamp_us": tick.timestamp_us,
        "area_angle_deg": tick.area_angle_deg,
        "status": tick.status,
        "transitions": [{"from": a, "to": b} for a, b in tick.transitions],
        "thresholds": thresholds_to_dict(thresholds),
        "boundary": {bus: {"angle_deg": ang, "source": src}
                     for bus, (ang, src) in tick.boundary.items()},
    }


@dataclass(frozen=True)
class WhatIfContext:
    model: NetworkModel
    area: AreaDefinition
    weights: BoundaryWeights
    injections: np.ndarray    # p.u., current operating point snapshot
    pattern: TransferPattern


def run_whatif(ctx: WhatIfContext, total_mw: float) -> dict:
    plan = allocate_load_shed(ctx.weights, ctx.area, total_mw, ctx.model.mva_base)
    before, after, _ = simulate_mitigation(
        ctx.model, ctx.area, ctx.weights, ctx.injections, plan, ctx.pattern)
    out = plan_to_dict(plan)
    out["theta_before_deg"] = before
    out["theta_after_deg"] = after
    return out


class WhatIfRequest(BaseModel):
    total_mw: float


def create_app(hub: MonitorHub, thresholds: ThresholdSet,
               whatif: WhatIfContext | None = None):
    app = FastAPI(title="area angle monitor")

    @app.get("/api/snapshot")
    def get_snapshot():
        snap = hub.latest()
        if snap is None:
            raise HTTPException(status_code=503, detail="no evaluation tick yet")
        return snap

    @app.get("/api/thresholds")
    def get_thresholds():
        return thresholds_to_dict(thresholds)

    @app.get("/api/history")
    def get_history(ts_from: int | None = None, ts_to: int | None = None):
        return hub.history(ts_from, ts_to)

    @app.post("/api/whatif")
    def post_whatif(req: WhatIfRequest):
        if whatif is None:
            raise HTTPException(status_code=503, detail="what-if context not configured")
        if req.total_mw < 0:
            raise HTTPException(status_code=422, detail="total_mw must be non-negative")
        try:
            return run_whatif(whatif, req.total_mw)
        except AamError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        sub = hub.subscribe()
        try:
            snap = hub.latest()
            if snap is not None:
                await ws.send_json({"type": "snapshot", **snap})
            while True:
                item = await asyncio.to_thread(sub.get, 0.5)
                if item is None:
                    continue
                await ws.send_json({"type": "tick", **item})
        except WebSocketDisconnect:
            pass
        finally:
            sub.close()

    return app

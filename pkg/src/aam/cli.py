"""Command line front end.

The subcommands chain through files: `demo` emits a self-contained case,
`study` turns model+area+pattern into sweep.csv and thresholds.json,
`replay` streams synthesized telemetry over TCP, `monitor` consumes a stream
against a monitor config, and `serve` adds the HTTP/WebSocket gateway.
"""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import fixtures, mitigation, monitor as monitor_mod, pac as pac_mod
from . import replay as replay_mod, service, study as study_mod, update as update_mod
from .area import area_angle, load_area, save_area, weights_for
from .errors import AamError
from .netmodel import line_flows, load_model, save_model, solve_dc
from .study import (compensate_thresholds, contingency_sweep, default_candidates,
                    emergency_threshold, load_pattern, load_thresholds,
                    save_sweep_csv, save_thresholds, warning_threshold)


def _load_injections(model, path):
    if path is None:
        return np.zeros(model.n_buses)
    with open(path) as fp:
        data = json.load(fp)
    return model.injection_vector({str(k): float(v) for k, v in data.items()})


def _parse_listen(value: str):
    host, _, port = value.rpartition(":")
    return host or "127.0.0.1", int(port)


def _candidate_list(model, area, candidates):
    if candidates:
        return [c.strip() for c in candidates.split(",") if c.strip()]
    return default_candidates(model, area)


@click.group()
def main():
    """Area angle monitoring toolkit."""


@main.command()
@click.option("--out-dir", "-o", type=click.Path(path_type=Path), required=True)
def demo(out_dir: Path):
    """Write a ready-to-run demo case (model, area, pattern, scenario,
    monitor config) into OUT-DIR."""
    out_dir.mkdir(parents=True, exist_ok=True)
    model, area, pattern = fixtures.ladder_area()
    save_model(model, out_dir / "model.json")
    save_area(area, out_dir / "area.json")
    (out_dir / "pattern.json").write_text(json.dumps({
        "base": {},
        "direction": {"SRC": 1.0, "SNK": -1.0},
    }, indent=2) + "\n")
    (out_dir / "change.json").write_text(json.dumps({
        "removed_branches": ["C1_0"],
    }, indent=2) + "\n")

    results = contingency_sweep(model, area, pattern, default_candidates(model, area))
    save_sweep_csv(results, out_dir / "sweep.csv")
    w = weights_for(model, area)
    bidx = [model.bus_index[b] for b in area.boundary]
    base_theta = solve_dc(model, pattern.base)
    theta_mod = area_angle(w, np.degrees(base_theta[bidx]))
    tset = compensate_thresholds(
        (warning_threshold(results, 0.5), emergency_threshold(results)),
        theta_mod, theta_mod)
    save_thresholds(tset, out_dir / "thresholds.json")

    cap = tset.emergency_model  # degrees of area angle at capacity
    cap_pu = math.radians(cap) * w.b_mod
    (out_dir / "scenario.json").write_text(json.dumps({
        "model": "model.json",
        "area": "area.json",
        "duration": 20.0,
        "frame_rate": 30,
        "noise_std": 0.05,
        "seed": 1,
        "injections": {"SRC": round(0.6 * cap_pu, 6), "SNK": round(-0.6 * cap_pu, 6)},
        "events": [
            {"t": 6.0, "action": "injection_step", "bus": "SRC", "delta_mw": round(45.0 * cap_pu, 1)},
            {"t": 6.0, "action": "injection_step", "bus": "SNK", "delta_mw": round(-45.0 * cap_pu, 1)},
        ],
    }, indent=2) + "\n")

    cmap = monitor_mod.ChannelMap(angle={bus: i for i, bus in enumerate(area.boundary)})
    config = monitor_mod.MonitorConfig(thresholds=tset, weights=w, t_area=5.0,
                                       frame_rate=30.0, stale_limit=1.0)
    monitor_mod.save_monitor_config(config, cmap, out_dir / "monitor.json")
    click.echo(f"demo case written to {out_dir}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--area", "area_path", required=True, type=click.Path(exists=True))
@click.option("--exclude", default="", help="comma-separated branch ids out of service")
def weights(model_path, area_path, exclude):
    """Boundary weights and through-susceptance for an area."""
    model = load_model(model_path)
    area = load_area(area_path, model)
    excl = frozenset(x.strip() for x in exclude.split(",") if x.strip())
    w = weights_for(model, area, exclude=excl)
    click.echo(json.dumps({"weights": w.as_mapping(), "b_mod": w.b_mod}, indent=2))


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--injections", "inj_path", type=click.Path(exists=True))
@click.option("--exclude", default="")
def solve(model_path, inj_path, exclude):
    """DC solve: bus angles (degrees) and branch flows (p.u.) as CSV."""
    model = load_model(model_path)
    inj = _load_injections(model, inj_path)
    excl = frozenset(x.strip() for x in exclude.split(",") if x.strip())
    theta = solve_dc(model, inj, excl)
    flows = line_flows(model, theta, excl)
    click.echo("bus,angle_deg")
    for bus, ang in zip(model.buses, np.degrees(theta)):
        click.echo(f"{bus.id},{ang:.6f}")
    click.echo("branch,flow_pu")
    for bid, f in flows.items():
        click.echo(f"{bid},{f:.6f}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--area", "area_path", required=True, type=click.Path(exists=True))
@click.option("--pattern", "pattern_path", required=True, type=click.Path(exists=True))
@click.option("--tau", default=0.5, show_default=True,
              help="p.u. spread that places the warning threshold")
@click.option("--candidates", default="", help="comma-separated branch ids (default: all internal)")
@click.option("--theta-ope", type=float, default=None,
              help="measured area angle at normal operation, degrees")
@click.option("--out-dir", "-o", type=click.Path(path_type=Path), default=Path("."))
def study(model_path, area_path, pattern_path, tau, candidates, theta_ope, out_dir):
    """Offline N-1 study: writes sweep.csv and thresholds.json."""
    model = load_model(model_path)
    area = load_area(area_path, model)
    pattern = load_pattern(pattern_path, model)
    cands = _candidate_list(model, area, candidates)
    results = contingency_sweep(model, area, pattern, cands)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_sweep_csv(results, out_dir / "sweep.csv")

    w = weights_for(model, area)
    bidx = [model.bus_index[b] for b in area.boundary]
    theta_mod = area_angle(w, np.degrees(solve_dc(model, pattern.base)[bidx]))
    tset = compensate_thresholds(
        (warning_threshold(results, tau), emergency_threshold(results)),
        theta_mod, theta_mod if theta_ope is None else theta_ope)
    save_thresholds(tset, out_dir / "thresholds.json")
    click.echo(json.dumps(study_mod.thresholds_to_dict(tset), indent=2))


@main.command("update-thresholds")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--area", "area_path", required=True, type=click.Path(exists=True))
@click.option("--pattern", "pattern_path", required=True, type=click.Path(exists=True))
@click.option("--change", "change_path", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["fast", "original"]), default="fast",
              show_default=True)
@click.option("--tau", default=0.5, show_default=True)
@click.option("--candidates", default="")
def update_thresholds(model_path, area_path, pattern_path, change_path, method, tau,
                      candidates):
    """Re-derive model thresholds after a topology change."""
    model = load_model(model_path)
    area = load_area(area_path, model)
    pattern = load_pattern(pattern_path, model)
    change = update_mod.load_change(change_path)
    cands = [c for c in _candidate_list(model, area, candidates)
             if c not in change.removed_branches]
    if method == "fast":
        warn, emer = update_mod.fast_thresholds(model, area, pattern, change, cands)
    else:
        warn, emer = update_mod.original_thresholds(model, area, pattern, change,
                                                    cands, tau)
    click.echo(json.dumps({"method": method, "warning_model": warn,
                           "emergency_model": emer}, indent=2))


@main.command("pac-table")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--area", "area_path", required=True, type=click.Path(exists=True))
@click.option("--pmus", "pmus_path", required=True, type=click.Path(exists=True),
              help="JSON list of PMU bus ids")
@click.option("--injections", "inj_path", type=click.Path(exists=True))
@click.option("--out", "-o", type=click.Path(path_type=Path), required=True)
def pac_table(model_path, area_path, pmus_path, inj_path, out):
    """Constant angle offsets for unmeasured boundary buses."""
    model = load_model(model_path)
    area = load_area(area_path, model)
    with open(pmus_path) as fp:
        pmus = json.load(fp)
    inj = _load_injections(model, inj_path)
    table = pac_mod.compute_pac_table(model, area.boundary, pmus, inj)
    pac_mod.save_pac_table(table, out)
    click.echo(f"{len(table.entries)} PAC entries written to {out}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--area", "area_path", required=True, type=click.Path(exists=True))
@click.option("--pattern", "pattern_path", required=True, type=click.Path(exists=True))
@click.option("--injections", "inj_path", type=click.Path(exists=True))
@click.option("--total-mw", type=float, required=True)
def mitigate(model_path, area_path, pattern_path, inj_path, total_mw):
    """Size a load-shed plan and simulate its effect on the area angle."""
    model = load_model(model_path)
    area = load_area(area_path, model)
    pattern = load_pattern(pattern_path, model)
    inj = _load_injections(model, inj_path)
    w = weights_for(model, area)
    plan = mitigation.allocate_load_shed(w, area, total_mw, model.mva_base)
    before, after, _ = mitigation.simulate_mitigation(model, area, w, inj, plan, pattern)
    out = mitigation.plan_to_dict(plan)
    out["theta_before_deg"] = before
    out["theta_after_deg"] = after
    click.echo(json.dumps(out, indent=2))


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True))
@click.option("--out", "-o", type=click.Path(path_type=Path), required=True)
def synthesize(scenario_path, out):
    """Synthesize scenario telemetry into a frames CSV."""
    scenario = replay_mod.load_scenario(scenario_path)
    frames = replay_mod.synthesize_scenario(scenario)
    replay_mod.write_frames_csv(frames, out)
    click.echo(f"{len(frames)} frames written to {out}")


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True))
@click.option("--frames", "frames_path", type=click.Path(exists=True),
              help="frames CSV instead of a scenario")
@click.option("--listen", default=":7733", show_default=True)
@click.option("--speed", default=1.0, show_default=True,
              help="wall-clock factor; 0 means as fast as possible")
@click.option("--wait-clients", default=1, show_default=True)
def replay(scenario_path, frames_path, listen, speed, wait_clients):
    """Stream scenario (or CSV) telemetry over TCP as binary frames."""
    if (scenario_path is None) == (frames_path is None):
        raise click.UsageError("pass exactly one of --scenario / --frames")
    if scenario_path:
        frames = replay_mod.synthesize_scenario(replay_mod.load_scenario(scenario_path))
    else:
        frames = list(replay_mod.CsvReplay(frames_path).frames())
    host, port = _parse_listen(listen)
    server = replay_mod.serve_stream(frames, host, port,
                                     speed=math.inf if speed <= 0 else speed,
                                     wait_for_clients=wait_clients)
    click.echo(f"streaming {len(frames)} frames on {server.host}:{server.port}")
    server.join(timeout=86400)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--connect", help="host:port of a live frame stream")
@click.option("--frames", "frames_path", type=click.Path(exists=True),
              help="frames CSV to replay through the monitor")
@click.option("--log", "log_path", type=click.Path(path_type=Path), required=True)
def monitor(config_path, connect, frames_path, log_path):
    """Run the real-time monitor until the stream ends; write the status log."""
    if (connect is None) == (frames_path is None):
        raise click.UsageError("pass exactly one of --connect / --frames")
    config, cmap = monitor_mod.load_monitor_config(config_path)
    sock = None
    if connect:
        host, port = _parse_listen(connect)
        reader, sock = replay_mod.connect_stream(host, port)
        frames = iter(reader)
    else:
        frames = replay_mod.CsvReplay(frames_path).frames()
    try:
        with open(log_path, "w") as fp:
            ticks = monitor_mod.run_monitor(frames, config, cmap, log_fp=fp)
    finally:
        if sock is not None:
            sock.close()
    click.echo(f"{len(ticks)} ticks logged to {log_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--connect", required=True, help="host:port of a live frame stream")
@click.option("--http", "http_listen", default=":8080", show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True))
@click.option("--area", "area_path", type=click.Path(exists=True))
@click.option("--pattern", "pattern_path", type=click.Path(exists=True))
@click.option("--injections", "inj_path", type=click.Path(exists=True))
@click.option("--log", "log_path", type=click.Path(path_type=Path))
def serve(config_path, connect, http_listen, model_path, area_path, pattern_path,
          inj_path, log_path):
    """Monitor a live stream and serve snapshots over HTTP/WebSocket.

    Passing --model/--area/--pattern (and optionally --injections) enables
    the what-if mitigation endpoint."""
    import threading

    import uvicorn

    config, cmap = monitor_mod.load_monitor_config(config_path)
    hub = service.MonitorHub()
    whatif = None
    if model_path and area_path and pattern_path:
        model = load_model(model_path)
        area = load_area(area_path, model)
        whatif = service.WhatIfContext(
            model=model, area=area, weights=weights_for(model, area),
            injections=_load_injections(model, inj_path),
            pattern=load_pattern(pattern_path, model))

    host, port = _parse_listen(connect)
    reader, sock = replay_mod.connect_stream(host, port)

    def pump():
        log_fp = open(log_path, "w") if log_path else None
        try:
            monitor_mod.run_monitor(
                iter(reader), config, cmap, log_fp=log_fp,
                on_tick=lambda mon, tick: hub.publish(
                    service.tick_snapshot(tick, config.thresholds)))
        finally:
            if log_fp:
                log_fp.close()
            sock.close()

    threading.Thread(target=pump, daemon=True).start()
    app = service.create_app(hub, config.thresholds, whatif)
    http_host, http_port = _parse_listen(http_listen)
    uvicorn.run(app, host=http_host or "127.0.0.1", port=http_port, log_level="warning")


def entry() -> None:
    try:
        main(standalone_mode=True)
    except AamError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    entry()

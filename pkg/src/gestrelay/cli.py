"""Command-line entry points for every service and tool."""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from pathlib import Path

from . import __version__
from .config import load_config


def _parse_bus(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


def _pump_loop(components, stop: threading.Event) -> None:
    while not stop.is_set():
        moved = sum(c.pump() for c in components)
        if moved == 0:
            time.sleep(0.002)


def cmd_bus(args) -> int:
    from .bus import BusServer

    server = BusServer(host=args.host, port=args.port)
    print(f"bus listening on {server.host}:{server.port}")
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        server.close()
    return 0


def cmd_gateway(args) -> int:
    from .bus import BusClient
    from .gateway import CaptureGateway, load_mapping

    host, port = _parse_bus(args.bus)
    bus = BusClient(host, port)
    mapping = load_mapping(args.mapping) if args.mapping else load_mapping()
    gateway = CaptureGateway(bus, mapping=mapping)
    print(f"gateway listening for capture source on :{args.listen}")
    try:
        gateway.serve(port=args.listen)
    except KeyboardInterrupt:
        pass
    return 0


def cmd_behavior(args) -> int:
    from .behavior import BehaviorEngine
    from .bus import BusClient
    from .tracks import load_track

    host, port = _parse_bus(args.bus)
    bus = BusClient(host, port)
    tracks = {}
    if args.tracks:
        for path in sorted(Path(args.tracks).glob("*.track")):
            tracks[path.stem] = load_track(path)
    engine = BehaviorEngine(bus, tracks=tracks)
    print(f"behavior engine running ({len(tracks)} tracks loaded)")
    stop = threading.Event()
    try:
        _pump_loop([engine], stop)
    except KeyboardInterrupt:
        stop.set()
    return 0


def cmd_playback(args) -> int:
    from .bus import BusClient
    from .clock import WallClock
    from .playback import PlaybackService, load_library

    host, port = _parse_bus(args.bus)
    bus = BusClient(host, port)
    library = load_library(args.library, actor_id=args.actor)
    for w in library.warnings:
        print(f"warning: {w}", file=sys.stderr)
    service = PlaybackService(bus, library, WallClock())
    print(f"playback ready: {len(library)} prompts for actor {library.actor_id}")
    stop = threading.Event()
    try:
        _pump_loop([service], stop)
    except KeyboardInterrupt:
        stop.set()
    return 0


def cmd_renderer(args) -> int:
    from .bus import BusClient
    from .clock import WallClock
    from .renderer import FileRecorderSink, FrameRenderer, NetSink, RenderConfig, SimSink

    host, port = _parse_bus(args.bus)
    bus = BusClient(host, port)
    cfg = load_config(args.config) if args.config else load_config()
    if args.sink == "sim":
        sink = SimSink()
    elif args.sink.startswith("record:"):
        sink = FileRecorderSink(args.sink.split(":", 1)[1])
    elif args.sink.startswith("net:"):
        nhost, nport = _parse_bus(args.sink.split(":", 1)[1])
        sink = NetSink(nhost, nport)
    else:
        print(f"unknown sink: {args.sink}", file=sys.stderr)
        return 2
    renderer = FrameRenderer(bus, sink, WallClock(), RenderConfig(
        fir_taps=cfg.fir_taps, lip_channels=cfg.lip_channels, staleness_ms=cfg.staleness_ms,
    ))
    print("renderer running at 125/25 fps")
    try:
        while True:
            renderer.run_wall(3600.0)
    except KeyboardInterrupt:
        sink.close()
    return 0


def cmd_schedule(args) -> int:
    from .schedule import ExperimentSchedule, generate_schedule, validate_schedule

    if args.action == "generate":
        schedule = generate_schedule(args.n, args.seed)
        schedule.save(args.out)
        print(f"schedule for {args.n} participants written to {args.out}")
        return 0
    schedule = ExperimentSchedule.load(args.file)
    report = validate_schedule(schedule)
    for check in report.checks:
        print(f"{check.constraint}: {'pass' if check.passed else 'FAIL'}  {check.detail}")
    return 0 if report.passed else 1


def cmd_harness(args) -> int:
    from .bus import BusClient, BusServer
    from .clock import WallClock
    from .harness import ControllerConfig, SessionController
    from .httpapi import serve
    from .playback import load_library
    from .schedule import ExperimentSchedule

    if args.bus:
        host, port = _parse_bus(args.bus)
        bus = BusClient(host, port)
    else:
        server = BusServer(port=args.bus_port)
        print(f"embedded bus on {server.host}:{server.port}")
        bus = server.bus
    schedule = ExperimentSchedule.load(args.schedule)
    catalog = None
    if args.library:
        catalog = load_library(args.library).catalog()
    controller = SessionController(
        bus=bus,
        clock=WallClock(),
        schedule=schedule,
        config=ControllerConfig(log_dir=Path(args.logs)),
    )
    stop = threading.Event()
    threading.Thread(target=_pump_loop, args=([controller], stop), daemon=True).start()
    print(f"wizard API on http://127.0.0.1:{args.port}")
    try:
        serve(controller, port=args.port, catalog=catalog)
    finally:
        stop.set()
        controller.close()
    return 0


def cmd_analyze(args) -> int:
    from .session import load_records_from_dir
    from .stats import analyze_records, format_chi2_p, summarize

    records = load_records_from_dir(args.logs)
    if not records:
        print(f"no interaction records found in {args.logs}", file=sys.stderr)
        return 1
    table = summarize(records)
    for w in table.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = Path(args.out)
    if out.suffix == ".csv":
        out.write_text(table.to_csv(), encoding="utf-8")
    else:
        out.write_text(table.to_markdown(), encoding="utf-8")
    results = analyze_records(records, m=args.m, exact=args.exact)
    for category, result in results.items():
        print(f"{category}: {format_chi2_p(result)}")
    print(f"summary table written to {out}")
    return 0


def cmd_synth(args) -> int:
    import socket

    from .sim import SynthProfile, record_to_line, synth_records
    from .tracks import load_track

    if args.profile.startswith("sinusoid"):
        _, freq, axis, amp = (args.profile.split(":") + ["0.125", "x", "10"])[:4]
        profile = SynthProfile(kind="sinusoid", freq_hz=float(freq), axis=axis,
                               amplitude_deg=float(amp))
    elif args.profile.startswith("scripted:"):
        profile = SynthProfile(kind="scripted", track=load_track(args.profile.split(":", 1)[1]))
    else:
        profile = SynthProfile(kind="neutral")
    host, port = _parse_bus(args.gateway)
    t0 = int(time.time() * 1000)
    with socket.create_connection((host, port)) as sock:
        start = time.monotonic()
        for i, record in enumerate(synth_records(profile, args.fps, args.duration, t0)):
            sock.sendall(record_to_line(record))
            target = start + (i + 1) / args.fps
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
    print(f"streamed {round(args.duration * args.fps)} frames")
    return 0


def cmd_record(args) -> int:
    from .bus import BusClient
    from .sim import TrackRecorder

    host, port = _parse_bus(args.bus)
    bus = BusClient(host, port)
    recorder = TrackRecorder(bus, args.topic)
    deadline = time.monotonic() + args.duration
    while time.monotonic() < deadline:
        recorder.pump()
        time.sleep(0.005)
    recorder.pump()
    if not recorder.frames:
        print("warning: zero frames recorded; writing empty track", file=sys.stderr)
        from .tracks import save_track
        save_track(recorder.to_track(), args.out)
    else:
        recorder.save(args.out)
    print(f"recorded {len(recorder.frames)} frames to {args.out}")
    return 0


def cmd_replay(args) -> int:
    from .bus import BusClient
    from .tracks import load_track
    from .wire import KIND_CAPTURE, canonical_bs

    host, port = _parse_bus(args.bus)
    bus = BusClient(host, port)
    track = load_track(args.track)
    t0 = int(time.time() * 1000)
    start = time.monotonic()
    for seq, frame in enumerate(track.frames):
        rot = frame.rotation
        bus.publish(args.topic, KIND_CAPTURE, {
            "t": t0 + frame.t_rel,
            "seq": seq,
            "bs": canonical_bs(frame.blendshapes),
            "rot": [rot.x, rot.y, rot.z] if rot else [0.0, 0.0, 0.0],
        }, t0 + frame.t_rel)
        target = start + frame.t_rel / 1000.0
        delay = target - time.monotonic()
        if delay > 0:
            time.sleep(delay)
    print(f"replayed {len(track.frames)} frames")
    return 0


def cmd_e2e(args) -> int:
    from .sim import E2EConfig, ParticipantPolicy, run_e2e

    policy = ParticipantPolicy(ranking=args.ranking, outcomes=args.policy, accept_p=args.accept_p)
    result = run_e2e(E2EConfig(
        seed=args.seed,
        policy=policy,
        out_dir=Path(args.out),
        participant_index=args.participant,
    ))
    print(f"session log: {result.session_log}")
    print(f"sink recording: {result.sink_recording}")
    print(f"accepted counts: {result.accepted_counts}")
    print(f"simulated duration: {result.sim_duration_ms / 1000:.1f} s")
    return 0


def main(argv=None) -> int:
    defaults = load_config()  # env overrides (GR_BUS_PORT, GR_CAPTURE_PORT, GR_CONTROL_PORT)
    bus_addr = f"127.0.0.1:{defaults.bus_port}"

    parser = argparse.ArgumentParser(prog="gestrelay",
                                     description="facial-gesture robot middleware and experiment tools")
    parser.add_argument("--version", action="version", version=f"gestrelay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bus", help="run the TCP message broker")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=defaults.bus_port)
    p.set_defaults(fn=cmd_bus)

    p = sub.add_parser("gateway", help="capture gateway (device -> bus)")
    p.add_argument("--bus", default=bus_addr)
    p.add_argument("--listen", type=int, default=defaults.capture_port)
    p.add_argument("--mapping", default=None)
    p.set_defaults(fn=cmd_gateway)

    p = sub.add_parser("behavior", help="behavior engine")
    p.add_argument("--bus", default=bus_addr)
    p.add_argument("--tracks", default=None)
    p.set_defaults(fn=cmd_behavior)

    p = sub.add_parser("playback", help="prompt playback service")
    p.add_argument("--bus", default=bus_addr)
    p.add_argument("--library", required=True)
    p.add_argument("--actor", default=None)
    p.set_defaults(fn=cmd_playback)

    p = sub.add_parser("renderer", help="dual-rate frame renderer")
    p.add_argument("--bus", default=bus_addr)
    p.add_argument("--sink", default="sim", help="sim | record:<file> | net:<host:port>")
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_renderer)

    p = sub.add_parser("schedule", help="generate or validate experiment schedules")
    p.add_argument("action", choices=["generate", "validate"])
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="schedule.json")
    p.add_argument("--file", default="schedule.json")
    p.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("harness", help="session controller + wizard HTTP API")
    p.add_argument("--bus", default=None, help="broker address; omit to embed one")
    p.add_argument("--bus-port", type=int, default=defaults.bus_port)
    p.add_argument("--schedule", required=True)
    p.add_argument("--logs", default="logs")
    p.add_argument("--port", type=int, default=defaults.control_port)
    p.add_argument("--library", default=None, help="prompt library dir for the console catalog")
    p.set_defaults(fn=cmd_harness)

    p = sub.add_parser("analyze", help="summary table and Friedman tests from session logs")
    p.add_argument("--logs", required=True)
    p.add_argument("--out", default="table.md")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--exact", action="store_true")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("synth", help="stream a synthetic capture source to a gateway")
    p.add_argument("--gateway", default=f"127.0.0.1:{defaults.capture_port}")
    p.add_argument("--profile", default="neutral", help="neutral | sinusoid:<hz>:<axis>:<deg> | scripted:<file>")
    p.add_argument("--fps", type=int, default=60)
    p.add_argument("--duration", type=float, default=10.0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("record", help="record a bus topic into a track file")
    p.add_argument("--bus", default=bus_addr)
    p.add_argument("--topic", default="capture.frames")
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=10.0)
    p.set_defaults(fn=cmd_record)

    p = sub.add_parser("replay", help="replay a track file onto the bus")
    p.add_argument("--bus", default=bus_addr)
    p.add_argument("--track", required=True)
    p.add_argument("--topic", default="capture.frames")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("e2e", help="simulated end-to-end session")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--policy", default="accept_all",
                   choices=["accept_all", "decline_all", "accept_p"])
    p.add_argument("--accept-p", type=float, default=0.5)
    p.add_argument("--ranking", default="random", choices=["random", "optimal", "reversed"])
    p.add_argument("--participant", type=int, default=0)
    p.add_argument("--out", default="e2e_out")
    p.set_defaults(fn=cmd_e2e)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

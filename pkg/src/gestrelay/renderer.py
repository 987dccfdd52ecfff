"""Frame renderer: merges the behavior and lipsync streams into a
latest-state cell, smooths head rotations with FIR filters, and emits servo
commands at 125 Hz with blendshape commands on every 5th tick (25 Hz).

The blendshape clock is derived from the servo clock rather than run as a
second timer, so the two streams cannot drift apart.
"""

from __future__ import annotations

import json
import socket
import threading
from dataclasses import dataclass, field

from .clock import WallClock
from .fir import FirFilter, windowed_sinc_lowpass
from .frames import (
    LIP_CHANNELS,
    BlendshapeCommand,
    HeadRotation,
    RobotFrame,
    ServoCommand,
    neutral_robot_frame,
    SOURCE_MERGED,
)
from .wire import canonical_bs, json_line, robot_frame_from_data

SERVO_INTERVAL_MS = 8  # 125 Hz
BLENDSHAPE_EVERY = 5  # 25 Hz
DEFAULT_STALENESS_MS = 200


@dataclass
class RenderConfig:
    fir_taps: list[float] | None = None
    lip_channels: tuple[str, ...] = LIP_CHANNELS
    staleness_ms: int = DEFAULT_STALENESS_MS


@dataclass
class RenderState:
    """Latest-value cell per input stream; single atomic-swap writer each."""

    latest_behavior: RobotFrame
    latest_lipsync: tuple[dict[str, float], int] | None = None  # (weights, arrival ms)

    def lipsync_active(self, now: int, staleness_ms: int) -> bool:
        return self.latest_lipsync is not None and now - self.latest_lipsync[1] <= staleness_ms


def merge(state: RenderState, now: int, lip_channels: tuple[str, ...] = LIP_CHANNELS,
          staleness_ms: int = DEFAULT_STALENESS_MS) -> RobotFrame:
    """Rotation always follows behavior; lip-set channels follow lipsync while
    a lipsync frame is fresh."""
    behavior = state.latest_behavior
    bs = dict(behavior.blendshapes)
    if state.lipsync_active(now, staleness_ms):
        lip_set = set(lip_channels)
        for name, w in state.latest_lipsync[0].items():
            if name in lip_set:
                bs[name] = w
    return RobotFrame(t=now, blendshapes=bs, rotation=behavior.rotation, source=SOURCE_MERGED)


class SimSink:
    """Records emitted commands with their receive timestamps."""

    def __init__(self, clock=None):
        self.clock = clock
        self.servo: list[tuple[ServoCommand, int]] = []
        self.blendshape: list[tuple[BlendshapeCommand, int]] = []

    def send_servo(self, cmd: ServoCommand) -> None:
        self.servo.append((cmd, self.clock.now_ms() if self.clock else cmd.t))

    def send_blendshape(self, cmd: BlendshapeCommand) -> None:
        self.blendshape.append((cmd, self.clock.now_ms() if self.clock else cmd.t))

    def close(self) -> None:
        pass


class FileRecorderSink:
    """One JSON line per command, with the emit timestamp, golden-testable."""

    def __init__(self, path):
        self._fh = open(path, "wb")

    def send_servo(self, cmd: ServoCommand) -> None:
        self._fh.write(json_line({
            "type": "servo", "t": cmd.t,
            "rot": [cmd.rotation.x, cmd.rotation.y, cmd.rotation.z],
        }))

    def send_blendshape(self, cmd: BlendshapeCommand) -> None:
        self._fh.write(json_line({
            "type": "blendshape", "t": cmd.t, "bs": canonical_bs(cmd.blendshapes),
        }))

    def close(self) -> None:
        self._fh.close()


class NetSink:
    """Streams commands to a robot endpoint as JSON lines over TCP."""

    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))

    def send_servo(self, cmd: ServoCommand) -> None:
        self._sock.sendall(json_line({
            "type": "servo", "t": cmd.t,
            "rot": [cmd.rotation.x, cmd.rotation.y, cmd.rotation.z],
        }))

    def send_blendshape(self, cmd: BlendshapeCommand) -> None:
        self._sock.sendall(json_line({
            "type": "blendshape", "t": cmd.t, "bs": canonical_bs(cmd.blendshapes),
        }))

    def close(self) -> None:
        self._sock.close()


def load_recording(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class FrameRenderer:
    def __init__(self, bus, sink, clock, config: RenderConfig | None = None):
        self.bus = bus
        self.sink = sink
        self.clock = clock
        self.config = config or RenderConfig()
        taps = self.config.fir_taps if self.config.fir_taps is not None else windowed_sinc_lowpass()
        self._filters = {axis: FirFilter(taps) for axis in ("x", "y", "z")}
        self._behavior_sub = bus.subscribe("behavior.frames")
        self._lipsync_sub = bus.subscribe("lipsync.frames")
        self.state = RenderState(latest_behavior=neutral_robot_frame(clock.now_ms()))
        self._tick_index = 0
        self.servo_emitted = 0
        self.blendshape_emitted = 0

    def drain_inputs(self) -> int:
        """Fold pending bus messages into the latest-state cell."""
        n = 0
        while (msg := self._behavior_sub.try_get()) is not None:
            self.state.latest_behavior = robot_frame_from_data(msg.data)
            n += 1
        while (msg := self._lipsync_sub.try_get()) is not None:
            self.state.latest_lipsync = (
                {k: float(v) for k, v in msg.data["bs"].items()},
                self.clock.now_ms(),
            )
            n += 1
        return n

    def tick(self, now: int | None = None) -> ServoCommand:
        """One 125 Hz step: merge, filter rotations, emit commands."""
        now = self.clock.now_ms() if now is None else now
        merged = merge(self.state, now, self.config.lip_channels, self.config.staleness_ms)
        rot = HeadRotation(
            self._filters["x"].step(merged.rotation.x),
            self._filters["y"].step(merged.rotation.y),
            self._filters["z"].step(merged.rotation.z),
        )
        servo = ServoCommand(t=now, rotation=rot)
        self.sink.send_servo(servo)
        self.servo_emitted += 1
        if self._tick_index % BLENDSHAPE_EVERY == 0:
            self.sink.send_blendshape(BlendshapeCommand(t=now, blendshapes=merged.blendshapes))
            self.blendshape_emitted += 1
        self._tick_index += 1
        return servo

    def run_sim(self, duration_ms: int, drain_each_tick: bool = True) -> None:
        """Schedule ticks on a SimClock at exact 8 ms boundaries. The caller
        drives clock.run_until; inputs are drained just before each tick."""
        start = self.clock.now_ms()
        for i in range(duration_ms // SERVO_INTERVAL_MS):
            at = start + i * SERVO_INTERVAL_MS
            def do_tick(at=at):
                if drain_each_tick:
                    self.drain_inputs()
                self.tick(at)
            self.clock.call_at(at, do_tick)

    def run_wall(self, duration_s: float, stop: threading.Event | None = None) -> list[int]:
        """Fixed-rate wall-clock loop with absolute deadlines (drift-free).
        Ingestion runs on its own thread so a stalled stream never delays a
        tick and a tick never blocks ingestion. Returns emit times (ms)."""
        stop = stop or threading.Event()
        clock: WallClock = self.clock

        def ingest_loop():
            while not stop.is_set():
                msg = self._behavior_sub.get(timeout=0.05)
                if msg is not None:
                    self.state.latest_behavior = robot_frame_from_data(msg.data)
                while (ls := self._lipsync_sub.try_get()) is not None:
                    self.state.latest_lipsync = (
                        {k: float(v) for k, v in ls.data["bs"].items()},
                        clock.now_ms(),
                    )

        ingest = threading.Thread(target=ingest_loop, daemon=True)
        ingest.start()
        emit_times: list[int] = []
        t0 = clock.now_ms()
        n_ticks = int(duration_s * 1000) // SERVO_INTERVAL_MS
        for i in range(n_ticks):
            deadline = t0 + i * SERVO_INTERVAL_MS
            clock.sleep_until(deadline)
            if stop.is_set():
                break
            self.tick(clock.now_ms())
            emit_times.append(clock.now_ms())
        stop.set()
        ingest.join(timeout=1.0)
        return emit_times

"""Behavior engine: turns incoming user capture frames into robot gesture
frames through the active strategy (still, natural playback, delayed copy).
Strategy switches and natural-track loop seams are crossfaded so the head
never snaps."""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass

from .frames import (
    NEUTRAL_ROTATION,
    CaptureFrame,
    HeadRotation,
    RobotFrame,
    lerp_blendshapes,
    lerp_rotation,
    neutral_blendshapes,
)
from .tracks import GestureTrack
from .wire import KIND_ROBOT, capture_frame_from_data, robot_frame_data

TOPIC_BEHAVIOR = "behavior.frames"
TOPIC_SET_STRATEGY = "control.behavior.set"

STRATEGY_KINDS = ("still", "natural", "copy")

DEFAULT_DELAY_S = 4.0
CROSSFADE_MS = 500


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class BehaviorConfig:
    kind: str
    delay_s: float = DEFAULT_DELAY_S
    track_name: str | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise StrategyError(f"unknown strategy kind: {self.kind!r}")
        if self.kind == "copy" and self.delay_s <= 0:
            raise StrategyError(f"copy delay must be positive, got {self.delay_s}")


class DelayLine:
    """Time-ordered capture-frame buffer spanning at least delay + margin."""

    def __init__(self, delay_s: float = DEFAULT_DELAY_S, margin_s: float = 1.0):
        self.retention_ms = int((delay_s + margin_s) * 1000)
        self.frames: deque[CaptureFrame] = deque()
        self.rejected_nonmonotonic = 0

    def push(self, frame: CaptureFrame) -> bool:
        if self.frames and frame.t <= self.frames[-1].t:
            self.rejected_nonmonotonic += 1
            return False
        self.frames.append(frame)
        horizon = frame.t - self.retention_ms
        while len(self.frames) > 1 and self.frames[0].t < horizon:
            self.frames.popleft()
        return True

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def span_ms(self) -> int:
        return self.frames[-1].t - self.frames[0].t if self.frames else 0

    def sample(self, t: int) -> tuple[dict[str, float], HeadRotation] | None:
        """Interpolated content at time t; None during warm-up (t before the
        oldest buffered frame). Queries past the newest frame hold it."""
        if not self.frames or t < self.frames[0].t:
            return None
        if t >= self.frames[-1].t:
            last = self.frames[-1]
            return dict(last.blendshapes), last.rotation
        times = [f.t for f in self.frames]
        hi = bisect.bisect_right(times, t)
        a, b = self.frames[hi - 1], self.frames[hi]
        if a.t == t:
            return dict(a.blendshapes), a.rotation
        alpha = (t - a.t) / (b.t - a.t)
        return (
            lerp_blendshapes(a.blendshapes, b.blendshapes, alpha),
            lerp_rotation(a.rotation, b.rotation, alpha),
        )


def still_frame(t: int) -> RobotFrame:
    """Neutral pose: no head movement, no facial expressions."""
    return RobotFrame(t=t, blendshapes=neutral_blendshapes(), rotation=NEUTRAL_ROTATION)


def natural_frame(track: GestureTrack, t: int, t_start: int, fade_ms: int = CROSSFADE_MS) -> RobotFrame:
    """Loop the recorded track; near each loop seam, blend the track tail into
    its first frame so the wrap is continuous."""
    if not track.frames:
        raise StrategyError("natural strategy requires a non-empty track")
    duration = track.duration_ms
    if duration <= 0:
        f = track.frames[0]
        return RobotFrame(t=t, blendshapes=dict(f.blendshapes), rotation=f.rotation or NEUTRAL_ROTATION)
    phase = (t - t_start) % duration
    sampled = track.sample(phase)
    bs = sampled.blendshapes
    rot = sampled.rotation or NEUTRAL_ROTATION
    fade = min(fade_ms, duration)
    if phase > duration - fade:
        first = track.frames[0]
        alpha = (phase - (duration - fade)) / fade
        bs = lerp_blendshapes(bs, first.blendshapes, alpha)
        rot = lerp_rotation(rot, first.rotation or NEUTRAL_ROTATION, alpha)
    return RobotFrame(t=t, blendshapes=bs, rotation=rot)


def copy_frame(line: DelayLine, t: int, delay_s: float = DEFAULT_DELAY_S) -> RobotFrame:
    """The user's own gestures replayed delay_s in the past; neutral until the
    buffer spans back that far."""
    sampled = line.sample(t - int(delay_s * 1000))
    if sampled is None:
        return still_frame(t)
    bs, rot = sampled
    return RobotFrame(t=t, blendshapes=bs, rotation=rot)


class BehaviorEngine:
    """Subscribes to capture frames, dispatches to the active strategy, and
    publishes robot frames (one per input frame). Switches arrive on the
    control topic and apply atomically between frames."""

    def __init__(self, bus, tracks: dict[str, GestureTrack] | None = None,
                 initial: BehaviorConfig | None = None, crossfade_ms: int = CROSSFADE_MS):
        self.bus = bus
        self.tracks = tracks or {}
        self.crossfade_ms = crossfade_ms
        self.line = DelayLine()
        self._capture_sub = bus.subscribe("capture.frames")
        self._control_sub = bus.subscribe(TOPIC_SET_STRATEGY)
        self._active = initial or BehaviorConfig(kind="still")
        self._previous: BehaviorConfig | None = None
        self._switch_t: int | None = None
        self._track_start: dict[str, int] = {}

    @property
    def active(self) -> BehaviorConfig:
        return self._active

    def set_strategy(self, config: BehaviorConfig, t: int) -> None:
        if config.kind == "natural":
            name = config.track_name
            if name is None or name not in self.tracks:
                raise StrategyError(f"natural strategy needs a loaded track, got {name!r}")
            if not self.tracks[name].frames:
                raise StrategyError(f"track {name!r} is empty")
            self._track_start.setdefault(name, t)
        if config.kind == "copy":
            self.line.retention_ms = max(self.line.retention_ms, int((config.delay_s + 1.0) * 1000))
        self._previous = self._active
        self._active = config
        self._switch_t = t

    def _strategy_output(self, config: BehaviorConfig, t: int) -> RobotFrame:
        if config.kind == "still":
            return still_frame(t)
        if config.kind == "natural":
            track = self.tracks[config.track_name]
            return natural_frame(track, t, self._track_start[config.track_name], self.crossfade_ms)
        return copy_frame(self.line, t, config.delay_s)

    def output_frame(self, t: int) -> RobotFrame:
        out = self._strategy_output(self._active, t)
        if self._previous is not None and self._switch_t is not None:
            alpha = (t - self._switch_t) / self.crossfade_ms
            if alpha < 1.0:
                old = self._strategy_output(self._previous, t)
                out = RobotFrame(
                    t=t,
                    blendshapes=lerp_blendshapes(old.blendshapes, out.blendshapes, max(alpha, 0.0)),
                    rotation=lerp_rotation(old.rotation, out.rotation, max(alpha, 0.0)),
                )
            else:
                self._previous = None
        return out

    def on_capture_frame(self, frame: CaptureFrame) -> RobotFrame:
        self.line.push(frame)
        out = self.output_frame(frame.t)
        self.bus.publish(TOPIC_BEHAVIOR, KIND_ROBOT, robot_frame_data(out), out.t)
        return out

    def _apply_control(self, msg) -> None:
        data = msg.data
        if data.get("name") != "set_strategy":
            return
        config = BehaviorConfig(
            kind=data["kind"],
            delay_s=float(data.get("delay_s", DEFAULT_DELAY_S)),
            track_name=data.get("track"),
        )
        self.set_strategy(config, msg.t)

    def pump(self) -> int:
        """Drain pending control events, then pending capture frames."""
        n = 0
        while (msg := self._control_sub.try_get()) is not None:
            self._apply_control(msg)
            n += 1
        while (msg := self._capture_sub.try_get()) is not None:
            self.on_capture_frame(capture_frame_from_data(msg.data))
            n += 1
        return n

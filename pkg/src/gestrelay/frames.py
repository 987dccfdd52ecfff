"""Shared frame types: blendshape vectors, head rotations, and the frames
that flow between capture, behavior, and rendering."""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace

ROTATION_LIMIT_DEG = 90.0

SOURCE_BEHAVIOR = "behavior"
SOURCE_LIPSYNC = "lipsync"
SOURCE_MERGED = "merged"


def load_channel_list(path=None) -> tuple[str, ...]:
    """Read a channel-name config: one name per line, order significant,
    '#' comments and blank lines ignored."""
    if path is None:
        text = (
            importlib.resources.files("gestrelay.data")
            .joinpath("channels_52.txt")
            .read_text(encoding="utf-8")
        )
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    names = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        names.append(line)
    return tuple(names)


CHANNELS: tuple[str, ...] = load_channel_list()
CHANNEL_SET = frozenset(CHANNELS)

# Jaw and mouth channels: the default ownership boundary for lipsync merging.
LIP_CHANNELS: tuple[str, ...] = tuple(
    c for c in CHANNELS if c.startswith(("jaw", "mouth"))
)


def neutral_blendshapes() -> dict[str, float]:
    return {name: 0.0 for name in CHANNELS}


def clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def clamp_deg(x: float) -> float:
    if x < -ROTATION_LIMIT_DEG:
        return -ROTATION_LIMIT_DEG
    if x > ROTATION_LIMIT_DEG:
        return ROTATION_LIMIT_DEG
    return x


@dataclass(frozen=True)
class HeadRotation:
    """Euler angles in degrees about the three device axes."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def clamped(self) -> "HeadRotation":
        return HeadRotation(clamp_deg(self.x), clamp_deg(self.y), clamp_deg(self.z))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


NEUTRAL_ROTATION = HeadRotation(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CaptureFrame:
    """One timestamped sample of the 52 blendshape weights plus head rotation."""

    t: int  # ms since epoch
    seq: int
    blendshapes: dict[str, float]
    rotation: HeadRotation


@dataclass(frozen=True)
class RobotFrame:
    """A frame on its way to the renderer; `source` records which pipe produced it."""

    t: int
    blendshapes: dict[str, float]
    rotation: HeadRotation
    source: str = SOURCE_BEHAVIOR


@dataclass(frozen=True)
class ServoCommand:
    t: int
    rotation: HeadRotation


@dataclass(frozen=True)
class BlendshapeCommand:
    t: int
    blendshapes: dict[str, float]


def neutral_robot_frame(t: int, source: str = SOURCE_BEHAVIOR) -> RobotFrame:
    return RobotFrame(t=t, blendshapes=neutral_blendshapes(), rotation=NEUTRAL_ROTATION, source=source)


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_frame(frame: CaptureFrame, prev: CaptureFrame | None = None) -> ValidationResult:
    """Report (never raise) violations: out-of-range weights, wrong channel set,
    rotation out of bounds, timestamp/seq regressions against `prev`."""
    res = ValidationResult()
    keys = frame.blendshapes.keys()
    missing = CHANNEL_SET - keys
    extra = keys - CHANNEL_SET
    if missing:
        res.violations.append(f"missing channels: {sorted(missing)[:3]}{'...' if len(missing) > 3 else ''}")
    if extra:
        res.violations.append(f"unknown channels: {sorted(extra)[:3]}{'...' if len(extra) > 3 else ''}")
    for name, w in frame.blendshapes.items():
        if not 0.0 <= w <= 1.0:
            res.violations.append(f"weight out of range: {name}={w!r}")
    for axis in ("x", "y", "z"):
        v = getattr(frame.rotation, axis)
        if not -ROTATION_LIMIT_DEG <= v <= ROTATION_LIMIT_DEG:
            res.violations.append(f"rotation out of range: {axis}={v!r}")
    if prev is not None:
        if frame.t <= prev.t:
            res.violations.append(f"timestamp regression: {frame.t} after {prev.t}")
        if frame.seq <= prev.seq:
            res.violations.append(f"sequence regression: {frame.seq} after {prev.seq}")
    return res


def lerp_blendshapes(a: dict[str, float], b: dict[str, float], alpha: float) -> dict[str, float]:
    return {k: av + (b[k] - av) * alpha for k, av in a.items()}


def lerp_rotation(a: HeadRotation, b: HeadRotation, alpha: float) -> HeadRotation:
    return HeadRotation(
        a.x + (b.x - a.x) * alpha,
        a.y + (b.y - a.y) * alpha,
        a.z + (b.z - a.z) * alpha,
    )


def lerp_frames(a: CaptureFrame, b: CaptureFrame, t: int) -> CaptureFrame:
    """Component-wise linear interpolation at timestamp t, a.t <= t <= b.t."""
    if a.t >= b.t:
        raise ValueError(f"lerp interval is empty: a.t={a.t} b.t={b.t}")
    if not a.t <= t <= b.t:
        raise ValueError(f"t={t} outside [{a.t}, {b.t}]")
    alpha = (t - a.t) / (b.t - a.t)
    return CaptureFrame(
        t=t,
        seq=a.seq,
        blendshapes=lerp_blendshapes(a.blendshapes, b.blendshapes, alpha),
        rotation=lerp_rotation(a.rotation, b.rotation, alpha),
    )


def with_timestamp(frame: RobotFrame, t: int) -> RobotFrame:
    return replace(frame, t=t)

"""Gesture track files: recorded, replayable frame sequences.

One format serves natural-movement sources, lipsync tracks, and session
recordings. A file is a JSON header line followed by one JSON frame per
line: ``{"t": <t_rel ms>, "bs": {...}, "rot": [x, y, z] | null}``.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path

from .frames import HeadRotation, lerp_blendshapes, lerp_rotation
from .wire import canonical_bs, json_line

FORMAT_VERSION = 1


class TrackError(ValueError):
    pass


@dataclass(frozen=True)
class TrackFrame:
    t_rel: int
    blendshapes: dict[str, float]
    rotation: HeadRotation | None = None


@dataclass
class GestureTrack:
    channels: tuple[str, ...]
    fps: float
    frames: list[TrackFrame] = field(default_factory=list)

    @property
    def duration_ms(self) -> int:
        return self.frames[-1].t_rel if self.frames else 0

    def validate(self) -> None:
        declared = set(self.channels)
        prev = -1
        for i, f in enumerate(self.frames):
            if f.t_rel <= prev:
                raise TrackError(f"frame {i}: t_rel {f.t_rel} not increasing (prev {prev})")
            prev = f.t_rel
            extra = set(f.blendshapes) - declared
            if extra:
                raise TrackError(f"frame {i}: undeclared channels {sorted(extra)[:3]}")

    def sample(self, t_rel: float) -> TrackFrame:
        """Frame at t_rel with linear interpolation; clamped at the ends."""
        if not self.frames:
            raise TrackError("empty track")
        times = [f.t_rel for f in self.frames]
        if t_rel <= times[0]:
            return self.frames[0]
        if t_rel >= times[-1]:
            return self.frames[-1]
        hi = bisect.bisect_right(times, t_rel)
        a, b = self.frames[hi - 1], self.frames[hi]
        alpha = (t_rel - a.t_rel) / (b.t_rel - a.t_rel)
        rot = None
        if a.rotation is not None and b.rotation is not None:
            rot = lerp_rotation(a.rotation, b.rotation, alpha)
        return TrackFrame(
            t_rel=int(t_rel),
            blendshapes=lerp_blendshapes(a.blendshapes, b.blendshapes, alpha),
            rotation=rot,
        )


def save_track(track: GestureTrack, path: str | Path) -> None:
    track.validate()
    with open(path, "wb") as fh:
        fh.write(json_line({
            "version": FORMAT_VERSION,
            "channels": list(track.channels),
            "fps": track.fps,
        }))
        for f in track.frames:
            rot = None if f.rotation is None else [f.rotation.x, f.rotation.y, f.rotation.z]
            fh.write(json_line({"t": f.t_rel, "bs": canonical_bs(f.blendshapes), "rot": rot}))


def load_track(path: str | Path) -> GestureTrack:
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise TrackError(f"{path}: empty track file")
        try:
            header = json.loads(header_line)
            if header["version"] != FORMAT_VERSION:
                raise TrackError(f"{path}: unsupported version {header['version']!r}")
            track = GestureTrack(channels=tuple(header["channels"]), fps=float(header["fps"]))
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                rot = obj.get("rot")
                track.frames.append(TrackFrame(
                    t_rel=int(obj["t"]),
                    blendshapes={k: float(v) for k, v in obj["bs"].items()},
                    rotation=None if rot is None else HeadRotation(*(float(v) for v in rot)),
                ))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TrackError):
                raise
            raise TrackError(f"{path}: malformed track: {exc}") from exc
    track.validate()
    return track

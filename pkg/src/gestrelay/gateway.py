"""Capture gateway: accepts the raw device stream, normalizes it, and
republishes canonical capture frames on the bus.

Raw records are newline-delimited JSON:
``{"t": <int ms>, "seq": <int>, "bs": {<name>: <float>, ...}, "rot": [x, y, z]}``
"""

from __future__ import annotations

import importlib.resources
import json
import socket
import threading
from dataclasses import dataclass, field

from .frames import CHANNEL_SET, CaptureFrame, HeadRotation, clamp01
from .wire import KIND_CAPTURE, capture_frame_data

TOPIC_CAPTURE = "capture.frames"
DEFAULT_CAPTURE_PORT = 7011


class ParseError(ValueError):
    pass


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelMapping:
    """Total, injective rename from capture-source names to canonical names."""

    entries: dict[str, str]
    version: str = "unversioned"

    def __post_init__(self):
        targets = list(self.entries.values())
        if len(set(targets)) != len(targets):
            dupes = sorted({t for t in targets if targets.count(t) > 1})
            raise MappingError(f"mapping not injective, duplicate targets: {dupes}")
        unknown = [t for t in targets if t not in CHANNEL_SET]
        if unknown:
            raise MappingError(f"mapping targets outside canonical set: {unknown[:3]}")
        if set(targets) != CHANNEL_SET:
            missing = sorted(CHANNEL_SET - set(targets))
            raise MappingError(f"mapping not total, uncovered canonical channels: {missing[:3]}")


def load_mapping(path=None) -> ChannelMapping:
    """Two-column whitespace-separated config, '#' comments allowed."""
    if path is None:
        text = (
            importlib.resources.files("gestrelay.data")
            .joinpath("mapping_identity.txt")
            .read_text(encoding="utf-8")
        )
        version = "identity/1"
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        version = str(path)
    entries: dict[str, str] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MappingError(f"line {i}: expected 'source target', got {line!r}")
        src, dst = parts
        if src in entries:
            raise MappingError(f"line {i}: duplicate source {src!r}")
        entries[src] = dst
    return ChannelMapping(entries=entries, version=version)


def remap_axes(r: HeadRotation) -> HeadRotation:
    """+90 degree rotation about the z axis applied to the (x, y) components."""
    return HeadRotation(-r.y, r.x, r.z)


@dataclass
class GatewayTelemetry:
    parsed: int = 0
    parse_errors: int = 0
    mapping_errors: int = 0
    dropped_nonmonotonic: int = 0
    missing_channel_fills: int = 0
    last_receive_latency_ms: int | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class CaptureGateway:
    """One ingest reader per connected source; republishes on `capture.frames`."""

    def __init__(self, bus, mapping: ChannelMapping | None = None, clock=None):
        self.bus = bus
        self.mapping = mapping or load_mapping()
        self.clock = clock
        self.telemetry = GatewayTelemetry()
        self._prev_t: int | None = None

    def rename_channels(self, raw_bs: dict[str, float]) -> dict[str, float]:
        """Rename to canonical keys and clamp weights to [0, 1]. Unknown source
        names are an error; missing sources are filled with 0.0 and counted."""
        out: dict[str, float] = {}
        for src, value in raw_bs.items():
            dst = self.mapping.entries.get(src)
            if dst is None:
                raise MappingError(f"unknown capture channel: {src!r}")
            out[dst] = clamp01(float(value))
        for src, dst in self.mapping.entries.items():
            if dst not in out:
                out[dst] = 0.0
                self.telemetry.missing_channel_fills += 1
        return out

    def ingest(self, raw_record: bytes | str) -> CaptureFrame:
        """Parse, rename, axis-remap, clamp, and validate one raw record."""
        try:
            obj = json.loads(raw_record)
            t = int(obj["t"])
            seq = int(obj["seq"])
            raw_bs = obj["bs"]
            rx, ry, rz = (float(v) for v in obj["rot"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed capture record: {exc}") from exc
        bs = self.rename_channels(raw_bs)
        rotation = remap_axes(HeadRotation(rx, ry, rz)).clamped()
        return CaptureFrame(t=t, seq=seq, blendshapes=bs, rotation=rotation)

    def process_record(self, raw_record: bytes | str) -> CaptureFrame | None:
        """Ingest and publish one record; skips (and counts) bad or stale
        records so a glitch never stalls a live session."""
        try:
            frame = self.ingest(raw_record)
        except ParseError:
            self.telemetry.parse_errors += 1
            return None
        except MappingError:
            self.telemetry.mapping_errors += 1
            return None
        if self._prev_t is not None and frame.t <= self._prev_t:
            self.telemetry.dropped_nonmonotonic += 1
            return None
        self._prev_t = frame.t
        self.telemetry.parsed += 1
        if self.clock is not None:
            self.telemetry.last_receive_latency_ms = self.clock.now_ms() - frame.t
        self.bus.publish(TOPIC_CAPTURE, KIND_CAPTURE, capture_frame_data(frame), frame.t)
        return frame

    def serve(self, host: str = "127.0.0.1", port: int = DEFAULT_CAPTURE_PORT, stop=None) -> None:
        """Accept capture sources one at a time and stream their records."""
        stop = stop or threading.Event()
        with socket.create_server((host, port)) as listener:
            listener.settimeout(0.5)
            while not stop.is_set():
                try:
                    sock, _ = listener.accept()
                except TimeoutError:
                    continue
                with sock, sock.makefile("rb") as stream:
                    self._prev_t = None
                    for line in stream:
                        if stop.is_set():
                            break
                        if line.strip():
                            self.process_record(line)

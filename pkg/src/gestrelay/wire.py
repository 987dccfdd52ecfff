"""Wire encoding shared by the bus, the sinks, and the track files.

A frame is a 4-byte big-endian unsigned length followed by one UTF-8 JSON
object ``{"topic": ..., "t": ..., "kind": ..., "data": {...}}``. Key order
and separators are fixed so encodings are byte-stable (golden-testable).
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass
from typing import Any, BinaryIO

from .frames import CHANNELS, CaptureFrame, HeadRotation, RobotFrame

TOPIC_RE = re.compile(r"^[a-z]+(\.[a-z_]+)*$")

MAX_FRAME_BYTES = 1 << 22

KIND_CAPTURE = "capture_frame"
KIND_ROBOT = "robot_frame"
KIND_LIPSYNC = "lipsync_frame"
KIND_CONTROL = "control_event"
KIND_TELEMETRY = "telemetry"
KIND_SUBSCRIBE = "subscribe"  # reserved for the TCP transport handshake

# Topic roots with a pinned payload schema; publishes under these roots must
# carry the matching kind tag.
TOPIC_KINDS = {
    "capture": KIND_CAPTURE,
    "behavior": KIND_ROBOT,
    "lipsync": KIND_LIPSYNC,
    "control": KIND_CONTROL,
    "telemetry": KIND_TELEMETRY,
}


class WireError(ValueError):
    pass


@dataclass(frozen=True)
class BusMessage:
    topic: str
    t: int
    kind: str
    data: dict[str, Any]


def topic_is_valid(topic: str) -> bool:
    return bool(TOPIC_RE.match(topic))


def expected_kind(topic: str) -> str | None:
    root = topic.split(".", 1)[0]
    return TOPIC_KINDS.get(root)


def _dumps(obj: Any) -> bytes:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_message(msg: BusMessage) -> bytes:
    body = _dumps({"topic": msg.topic, "t": msg.t, "kind": msg.kind, "data": msg.data})
    return struct.pack(">I", len(body)) + body


def decode_body(body: bytes) -> BusMessage:
    try:
        obj = json.loads(body.decode("utf-8"))
        return BusMessage(topic=obj["topic"], t=int(obj["t"]), kind=obj["kind"], data=obj["data"])
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise WireError(f"malformed frame body: {exc}") from exc


def read_message(stream: BinaryIO) -> BusMessage | None:
    """Read one length-prefixed frame; None on clean EOF."""
    header = stream.read(4)
    if not header:
        return None
    if len(header) < 4:
        raise WireError("truncated length prefix")
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME_BYTES:
        raise WireError(f"frame too large: {length}")
    body = b""
    while len(body) < length:
        chunk = stream.read(length - len(body))
        if not chunk:
            raise WireError("truncated frame body")
        body += chunk
    return decode_body(body)


def canonical_bs(bs: dict[str, float]) -> dict[str, float]:
    """Blendshape map in canonical channel order (keeps encodings byte-stable)."""
    out = {name: bs[name] for name in CHANNELS if name in bs}
    if len(out) != len(bs):
        extras = [k for k in bs if k not in out]
        raise WireError(f"unknown channels in payload: {extras[:3]}")
    return out


def capture_frame_data(f: CaptureFrame) -> dict[str, Any]:
    return {
        "t": f.t,
        "seq": f.seq,
        "bs": canonical_bs(f.blendshapes),
        "rot": [f.rotation.x, f.rotation.y, f.rotation.z],
    }


def capture_frame_from_data(d: dict[str, Any]) -> CaptureFrame:
    return CaptureFrame(
        t=int(d["t"]),
        seq=int(d["seq"]),
        blendshapes={k: float(v) for k, v in d["bs"].items()},
        rotation=HeadRotation(*(float(v) for v in d["rot"])),
    )


def robot_frame_data(f: RobotFrame) -> dict[str, Any]:
    return {
        "t": f.t,
        "bs": canonical_bs(f.blendshapes),
        "rot": [f.rotation.x, f.rotation.y, f.rotation.z],
        "source": f.source,
    }


def robot_frame_from_data(d: dict[str, Any]) -> RobotFrame:
    return RobotFrame(
        t=int(d["t"]),
        blendshapes={k: float(v) for k, v in d["bs"].items()},
        rotation=HeadRotation(*(float(v) for v in d["rot"])),
        source=d.get("source", "behavior"),
    )


def lipsync_frame_data(t: int, t_rel: int, bs: dict[str, float]) -> dict[str, Any]:
    return {"t": t, "t_rel": t_rel, "bs": canonical_bs(bs)}


def json_line(obj: Any) -> bytes:
    """One compact JSON object plus newline (track files, logs, record sinks)."""
    return _dumps(obj) + b"\n"

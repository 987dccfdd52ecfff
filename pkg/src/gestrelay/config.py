"""Runtime configuration: JSON file keys with environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .frames import LIP_CHANNELS

ENV_BUS_PORT = "GR_BUS_PORT"
ENV_CAPTURE_PORT = "GR_CAPTURE_PORT"
ENV_CONTROL_PORT = "GR_CONTROL_PORT"


@dataclass
class AppConfig:
    bus_port: int = 7010
    capture_port: int = 7011
    control_port: int = 7080
    fir_taps: list[float] | None = None
    lip_channels: tuple[str, ...] = LIP_CHANNELS
    staleness_ms: int = 200
    mapping_file: str | None = None
    extras: dict = field(default_factory=dict)


def load_config(path: str | Path | None = None) -> AppConfig:
    cfg = AppConfig()
    if path is not None:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        bus = obj.get("bus", {})
        renderer = obj.get("renderer", {})
        capture = obj.get("capture", {})
        control = obj.get("control", {})
        cfg.bus_port = int(bus.get("port", cfg.bus_port))
        cfg.capture_port = int(capture.get("port", cfg.capture_port))
        cfg.control_port = int(control.get("port", cfg.control_port))
        if "fir_taps" in renderer:
            cfg.fir_taps = [float(x) for x in renderer["fir_taps"]]
        if "lip_channels" in renderer:
            cfg.lip_channels = tuple(renderer["lip_channels"])
        cfg.staleness_ms = int(renderer.get("staleness_ms", cfg.staleness_ms))
        cfg.mapping_file = capture.get("mapping", cfg.mapping_file)
        cfg.extras = obj
    if ENV_BUS_PORT in os.environ:
        cfg.bus_port = int(os.environ[ENV_BUS_PORT])
    if ENV_CAPTURE_PORT in os.environ:
        cfg.capture_port = int(os.environ[ENV_CAPTURE_PORT])
    if ENV_CONTROL_PORT in os.environ:
        cfg.control_port = int(os.environ[ENV_CONTROL_PORT])
    return cfg

import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gestrelay.bus import MessageBus
from gestrelay.frames import CHANNELS, HeadRotation
from gestrelay.gateway import (
    CaptureGateway,
    ChannelMapping,
    MappingError,
    load_mapping,
    remap_axes,
)

from .conftest import make_frame


def record_line(t=1000, seq=0, bs=None, rot=(0.0, 0.0, 0.0)):
    payload = {"t": t, "seq": seq, "bs": bs or {name: 0.0 for name in CHANNELS}, "rot": list(rot)}
    return (json.dumps(payload) + "\n").encode()


class TestRemapAxes:
    def test_fixed_point(self):
        assert remap_axes(HeadRotation(0, 0, 0)) == HeadRotation(0, 0, 0)

    def test_quarter_turn(self):
        # (x, y, z) -> (-y, x, z)
        assert remap_axes(HeadRotation(10, 0, 5)) == HeadRotation(0, 10, 5)
        assert remap_axes(HeadRotation(0, 10, 5)) == HeadRotation(-10, 0, 5)

    @given(st.floats(-90, 90), st.floats(-90, 90), st.floats(-90, 90))
    def test_fourth_power_is_identity(self, x, y, z):
        r = HeadRotation(x, y, z)
        out = remap_axes(remap_axes(remap_axes(remap_axes(r))))
        assert out == r  # negation and swap are exact in IEEE arithmetic

    def test_bijective_on_random_rotations(self):
        rng = random.Random(1)
        seen = set()
        for _ in range(1000):
            r = HeadRotation(rng.uniform(-90, 90), rng.uniform(-90, 90), rng.uniform(-90, 90))
            seen.add(remap_axes(r).as_tuple())
        assert len(seen) == 1000


class TestChannelMapping:
    def test_default_mapping_is_total_and_injective(self):
        mapping = load_mapping()
        assert len(mapping.entries) == 52
        assert set(mapping.entries.values()) == set(CHANNELS)

    def test_duplicate_target_rejected(self):
        entries = {name: name for name in CHANNELS}
        entries["jawOpen"] = "jawLeft"  # now two sources hit jawLeft
        with pytest.raises(MappingError, match="injective"):
            ChannelMapping(entries=entries)

    def test_missing_target_rejected(self):
        entries = {name: name for name in CHANNELS if name != "tongueOut"}
        with pytest.raises(MappingError, match="not total"):
            ChannelMapping(entries=entries)

    def test_mapping_file_round_trip(self, tmp_path):
        path = tmp_path / "map.txt"
        lines = ["# test mapping"] + [f"src_{name} {name}" for name in CHANNELS]
        path.write_text("\n".join(lines) + "\n")
        mapping = load_mapping(path)
        assert mapping.entries["src_jawOpen"] == "jawOpen"
        assert len(mapping.entries) == 52


class TestIngest:
    def test_neutral_record(self, bus):
        gw = CaptureGateway(bus)
        frame = gw.ingest(record_line())
        assert frame.rotation == HeadRotation(0, 0, 0)
        assert all(w == 0.0 for w in frame.blendshapes.values())

    def test_unknown_channel_named_in_error(self, bus):
        gw = CaptureGateway(bus)
        bs = {name: 0.0 for name in CHANNELS}
        bs["notAChannel"] = 0.5
        with pytest.raises(MappingError, match="notAChannel"):
            gw.ingest(record_line(bs=bs))

    def test_rotation_axis_remap_applied(self, bus):
        gw = CaptureGateway(bus)
        frame = gw.ingest(record_line(rot=(10, 0, 5)))
        assert frame.rotation == HeadRotation(0, 10, 5)

    def test_weights_clamped(self, bus):
        gw = CaptureGateway(bus)
        bs = {name: 0.0 for name in CHANNELS}
        bs["jawOpen"] = 1.2
        bs["mouthClose"] = -0.3
        frame = gw.ingest(record_line(bs=bs))
        assert frame.blendshapes["jawOpen"] == 1.0
        assert frame.blendshapes["mouthClose"] == 0.0

    def test_rotation_clamped(self, bus):
        gw = CaptureGateway(bus)
        frame = gw.ingest(record_line(rot=(0, 0, 120)))
        assert frame.rotation.z == 90.0

    def test_missing_channel_filled_and_counted(self, bus):
        gw = CaptureGateway(bus)
        bs = {name: 0.1 for name in CHANNELS if name != "cheekPuff"}
        frame = gw.ingest(record_line(bs=bs))
        assert frame.blendshapes["cheekPuff"] == 0.0
        assert gw.telemetry.missing_channel_fills == 1

    def test_rename_preserves_weight_multiset(self, bus):
        rng = random.Random(3)
        gw = CaptureGateway(bus)
        weights = [round(rng.random(), 6) for _ in CHANNELS]
        bs = dict(zip(CHANNELS, weights))
        out = gw.rename_channels(bs)
        assert sorted(out.values()) == sorted(weights)


class TestProcessRecord:
    def test_publishes_with_identical_t_and_seq(self, bus):
        sub = bus.subscribe("capture.frames")
        gw = CaptureGateway(bus)
        gw.process_record(record_line(t=12345, seq=9))
        msg = sub.try_get()
        assert msg.data["t"] == 12345 and msg.data["seq"] == 9

    def test_malformed_record_skipped_and_counted(self, bus):
        gw = CaptureGateway(bus)
        assert gw.process_record(b"{not json}\n") is None
        assert gw.telemetry.parse_errors == 1
        assert gw.process_record(record_line(t=1, seq=0)) is not None  # stream continues

    def test_out_of_order_frames_dropped_not_reordered(self, bus):
        sub = bus.subscribe("capture.frames")
        gw = CaptureGateway(bus)
        gw.process_record(record_line(t=1000, seq=0))
        assert gw.process_record(record_line(t=900, seq=1)) is None
        gw.process_record(record_line(t=1100, seq=2))
        assert gw.telemetry.dropped_nonmonotonic == 1
        times = [sub.try_get().data["t"] for _ in range(2)]
        assert times == [1000, 1100]

    def test_sustained_throughput(self, bus):
        import time

        gw = CaptureGateway(bus)
        records = [record_line(t=1000 + i * 16, seq=i) for i in range(600)]
        start = time.monotonic()
        for r in records:
            gw.process_record(r)
        elapsed = time.monotonic() - start
        assert gw.telemetry.parsed == 600
        assert 600 / elapsed > 60  # at least one second of 60 fps per wall second

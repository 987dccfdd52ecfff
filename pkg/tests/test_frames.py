import pytest
from hypothesis import given
from hypothesis import strategies as st

from gestrelay.frames import (
    CHANNELS,
    CaptureFrame,
    HeadRotation,
    lerp_frames,
    neutral_blendshapes,
    validate_frame,
)
from gestrelay.wire import capture_frame_data, capture_frame_from_data

from .conftest import make_frame


def test_channel_set_is_the_canonical_52():
    assert len(CHANNELS) == 52
    assert len(set(CHANNELS)) == 52
    assert "jawOpen" in CHANNELS and "browInnerUp" in CHANNELS


def test_neutral_frame_validates():
    assert validate_frame(make_frame()).ok


def test_out_of_range_weight_reported():
    frame = make_frame(weights={"jawOpen": 1.3})
    result = validate_frame(frame)
    assert not result.ok
    assert any("out of range" in v and "jawOpen" in v for v in result.violations)


def test_timestamp_regression_reported():
    prev = make_frame(t=1000, seq=0)
    frame = make_frame(t=999, seq=1)
    result = validate_frame(frame, prev=prev)
    assert any("timestamp regression" in v for v in result.violations)


def test_missing_channel_reported():
    bs = neutral_blendshapes()
    del bs["tongueOut"]
    frame = CaptureFrame(t=0, seq=0, blendshapes=bs, rotation=HeadRotation())
    result = validate_frame(frame)
    assert any("missing channels" in v for v in result.violations)


def test_validation_never_raises_on_garbage_weights():
    frame = make_frame(weights={"jawOpen": float("inf")})
    assert not validate_frame(frame).ok


class TestLerp:
    def test_endpoint_returns_a(self):
        a = make_frame(t=1000, weights={"jawOpen": 0.2}, rot=(1, 2, 3))
        b = make_frame(t=2000, weights={"jawOpen": 0.8}, rot=(4, 5, 6))
        out = lerp_frames(a, b, 1000)
        assert out.blendshapes == a.blendshapes
        assert out.rotation == a.rotation

    def test_midpoint(self):
        a = make_frame(t=1000, weights={"jawOpen": 0.0})
        b = make_frame(t=2000, weights={"jawOpen": 1.0})
        assert lerp_frames(a, b, 1500).blendshapes["jawOpen"] == pytest.approx(0.5)

    def test_quarter_point_rotation(self):
        # affine formula: 10 + (20 - 10) * 0.25 = 12.5
        a = make_frame(t=0, rot=(10, 0, 0))
        b = make_frame(t=1000, rot=(20, 0, 0))
        assert lerp_frames(a, b, 250).rotation.x == pytest.approx(12.5)

    def test_out_of_interval_raises(self):
        a, b = make_frame(t=1000), make_frame(t=2000, seq=1)
        with pytest.raises(ValueError):
            lerp_frames(a, b, 2001)
        with pytest.raises(ValueError):
            lerp_frames(a, b, 999)

    def test_empty_interval_raises(self):
        a, b = make_frame(t=1000), make_frame(t=1000, seq=1)
        with pytest.raises(ValueError):
            lerp_frames(a, b, 1000)

    @given(
        wa=st.floats(0, 1), wb=st.floats(0, 1),
        frac=st.floats(0, 1, exclude_max=True),
    )
    def test_lerp_bounded_and_monotone_in_t(self, wa, wb, frac):
        a = make_frame(t=0, weights={"jawOpen": wa})
        b = make_frame(t=1000, weights={"jawOpen": wb})
        t1 = int(frac * 999)
        t2 = t1 + 1
        v1 = lerp_frames(a, b, t1).blendshapes["jawOpen"]
        v2 = lerp_frames(a, b, t2).blendshapes["jawOpen"]
        lo, hi = min(wa, wb), max(wa, wb)
        assert lo - 1e-12 <= v1 <= hi + 1e-12
        if wa <= wb:
            assert v1 <= v2 + 1e-12
        else:
            assert v2 <= v1 + 1e-12


def test_wire_round_trip_is_exact():
    import random

    from .conftest import random_frame

    rng = random.Random(5)
    for seq in range(20):
        frame = random_frame(rng, t=1000 + seq, seq=seq)
        back = capture_frame_from_data(capture_frame_data(frame))
        assert back.t == frame.t and back.seq == frame.seq
        assert back.rotation == frame.rotation
        for name in CHANNELS:
            assert back.blendshapes[name] == frame.blendshapes[name]

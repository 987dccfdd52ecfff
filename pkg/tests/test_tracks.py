from pathlib import Path

import pytest

from gestrelay.frames import HeadRotation
from gestrelay.tracks import GestureTrack, TrackError, TrackFrame, load_track, save_track

GOLDEN = Path(__file__).parent / "golden"


def small_track():
    track = GestureTrack(channels=("jawOpen", "mouthClose"), fps=25.0)
    track.frames = [
        TrackFrame(t_rel=0, blendshapes={"jawOpen": 0.0, "mouthClose": 0.1}),
        TrackFrame(t_rel=40, blendshapes={"jawOpen": 0.5, "mouthClose": 0.05}),
        TrackFrame(t_rel=80, blendshapes={"jawOpen": 1.0, "mouthClose": 0.0},
                   rotation=HeadRotation(1.0, 2.0, 3.0)),
    ]
    return track


def test_round_trip(tmp_path):
    path = tmp_path / "t.track"
    save_track(small_track(), path)
    loaded = load_track(path)
    assert loaded.channels == ("jawOpen", "mouthClose")
    assert loaded.fps == 25.0
    assert loaded.frames == small_track().frames


def test_golden_bytes_stable(tmp_path):
    path = tmp_path / "t.track"
    save_track(small_track(), path)
    assert path.read_bytes() == (GOLDEN / "track.gt").read_bytes()


def test_non_monotone_rejected(tmp_path):
    track = small_track()
    track.frames.append(TrackFrame(t_rel=40, blendshapes={"jawOpen": 0.0}))
    with pytest.raises(TrackError, match="not increasing"):
        save_track(track, tmp_path / "bad.track")


def test_undeclared_channel_rejected(tmp_path):
    track = small_track()
    track.frames[0].blendshapes["browInnerUp"] = 0.5
    with pytest.raises(TrackError, match="undeclared"):
        save_track(track, tmp_path / "bad.track")


def test_sample_interpolates():
    track = small_track()
    mid = track.sample(20)
    assert mid.blendshapes["jawOpen"] == pytest.approx(0.25)
    assert track.sample(-5).blendshapes == track.frames[0].blendshapes
    assert track.sample(500).blendshapes == track.frames[-1].blendshapes


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.track"
    path.write_text("")
    with pytest.raises(TrackError):
        load_track(path)


def test_duration(tmp_path):
    assert small_track().duration_ms == 80
    assert GestureTrack(channels=(), fps=30).duration_ms == 0

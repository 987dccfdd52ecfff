import random

import pytest

from gestrelay.bus import MessageBus
from gestrelay.clock import SimClock
from gestrelay.frames import CHANNELS, CaptureFrame, HeadRotation, neutral_blendshapes
from gestrelay.sim import SIM_EPOCH_MS


@pytest.fixture
def bus():
    return MessageBus()


@pytest.fixture
def sim_clock():
    return SimClock(SIM_EPOCH_MS)


def make_frame(t=SIM_EPOCH_MS, seq=0, weights=None, rot=(0.0, 0.0, 0.0)):
    bs = neutral_blendshapes()
    if weights:
        bs.update(weights)
    return CaptureFrame(t=t, seq=seq, blendshapes=bs, rotation=HeadRotation(*rot))


def random_frame(rng: random.Random, t, seq):
    bs = {name: round(rng.random(), 6) for name in CHANNELS}
    rot = HeadRotation(rng.uniform(-90, 90), rng.uniform(-90, 90), rng.uniform(-90, 90))
    return CaptureFrame(t=t, seq=seq, blendshapes=bs, rotation=rot)

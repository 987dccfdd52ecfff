"""gestrelay: real-time facial-gesture middleware for a social-robot head,
with the wizard-of-oz experiment harness and analysis built around it."""

__version__ = "0.1.0"

from .frames import (  # noqa: F401
    CHANNELS,
    LIP_CHANNELS,
    BlendshapeCommand,
    CaptureFrame,
    HeadRotation,
    RobotFrame,
    ServoCommand,
    lerp_frames,
    validate_frame,
)

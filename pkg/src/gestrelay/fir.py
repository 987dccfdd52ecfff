"""FIR smoothing for head-rotation streams.

Default design: 25-tap Hamming-windowed sinc, 4 Hz cutoff at the 125 Hz
servo rate, normalized to unit DC gain. Head motion lives below 4 Hz; the
(taps-1)/2 = 12-sample group delay adds 96 ms, which is acceptable and
documented.
"""

from __future__ import annotations

from collections import deque

import numpy as np

DEFAULT_TAPS = 25
DEFAULT_CUTOFF_HZ = 4.0
DEFAULT_RATE_HZ = 125.0


def windowed_sinc_lowpass(n_taps: int = DEFAULT_TAPS, cutoff_hz: float = DEFAULT_CUTOFF_HZ,
                          rate_hz: float = DEFAULT_RATE_HZ) -> np.ndarray:
    if n_taps % 2 == 0:
        raise ValueError(f"tap count must be odd, got {n_taps}")
    if not 0 < cutoff_hz < rate_hz / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz outside (0, {rate_hz / 2})")
    m = n_taps - 1
    k = np.arange(n_taps)
    h = np.sinc(2.0 * cutoff_hz / rate_hz * (k - m / 2.0)) * np.hamming(n_taps)
    return h / h.sum()


def frequency_response(taps: np.ndarray, f_hz: float, rate_hz: float = DEFAULT_RATE_HZ) -> complex:
    k = np.arange(len(taps))
    return complex(np.sum(taps * np.exp(-2j * np.pi * f_hz * k / rate_hz)))


def group_delay_ms(taps: np.ndarray, rate_hz: float = DEFAULT_RATE_HZ) -> float:
    return (len(taps) - 1) / 2.0 * 1000.0 / rate_hz


class FirFilter:
    """Direct-form FIR with its own state; one instance per rotation axis."""

    def __init__(self, taps=None):
        self.taps = np.asarray(taps if taps is not None else windowed_sinc_lowpass(), dtype=float)
        if len(self.taps) % 2 == 0:
            raise ValueError("tap count must be odd")
        if abs(float(self.taps.sum()) - 1.0) > 1e-9:
            raise ValueError(f"taps must have unit DC gain, sum={self.taps.sum()!r}")
        self._history: deque[float] = deque([0.0] * len(self.taps), maxlen=len(self.taps))

    def step(self, x: float) -> float:
        self._history.appendleft(float(x))
        return float(np.dot(self.taps, self._history))

    def reset(self, value: float = 0.0) -> None:
        self._history = deque([value] * len(self.taps), maxlen=len(self.taps))

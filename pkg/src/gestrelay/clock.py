"""Injectable clocks. Every time-dependent component takes a clock so timing
invariants are exact under simulation and only jitter tests touch wall time."""

from __future__ import annotations

import heapq
import threading
import time
from typing import Callable


class SimClock:
    """Discrete-event clock: callbacks run in timestamp order (FIFO within a
    timestamp), and `now_ms` is always the timestamp of the running event."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms
        self._seq = 0
        self._events: list[tuple[int, int, Callable[[], None]]] = []
        # runs after every event; lets a host pump message queues at the
        # exact simulated instant the event fired
        self.after_event: Callable[[], None] | None = None

    def now_ms(self) -> int:
        return self._now

    def call_at(self, t_ms: int, fn: Callable[[], None]) -> None:
        if t_ms < self._now:
            raise ValueError(f"cannot schedule in the past: {t_ms} < {self._now}")
        heapq.heappush(self._events, (int(t_ms), self._seq, fn))
        self._seq += 1

    def call_later(self, delay_ms: int, fn: Callable[[], None]) -> None:
        self.call_at(self._now + int(delay_ms), fn)

    def run_until(self, t_ms: int) -> int:
        """Run all events scheduled at or before t_ms; returns events run."""
        ran = 0
        while self._events and self._events[0][0] <= t_ms:
            t, _, fn = heapq.heappop(self._events)
            self._now = t
            fn()
            if self.after_event is not None:
                self.after_event()
            ran += 1
        self._now = max(self._now, t_ms)
        return ran

    def run_all(self, limit: int = 10_000_000) -> int:
        ran = 0
        while self._events and ran < limit:
            t, _, fn = heapq.heappop(self._events)
            self._now = t
            fn()
            if self.after_event is not None:
                self.after_event()
            ran += 1
        return ran

    @property
    def pending(self) -> int:
        return len(self._events)


class WallClock:
    """Monotonic clock aligned to the epoch at construction; scheduled
    callbacks run on a background thread."""

    def __init__(self):
        self._base_ms = time.time() * 1000.0 - time.monotonic() * 1000.0
        self._events: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0
        self._cond = threading.Condition()
        self._thread: threading.Thread | None = None
        self._running = False

    # spin window for deadline sleeps; OS sleep alone is too coarse for a
    # 125 Hz emit loop under load
    SPIN_S = 0.0025

    def now_ms(self) -> int:
        return int(self._base_ms + time.monotonic() * 1000.0)

    def sleep_until(self, t_ms: int) -> None:
        deadline = (t_ms - self._base_ms) / 1000.0
        remaining = deadline - time.monotonic()
        if remaining > self.SPIN_S:
            time.sleep(remaining - self.SPIN_S)
        while time.monotonic() < deadline:
            pass

    def call_at(self, t_ms: int, fn: Callable[[], None]) -> None:
        with self._cond:
            heapq.heappush(self._events, (int(t_ms), self._seq, fn))
            self._seq += 1
            if not self._running:
                self._running = True
                self._thread = threading.Thread(target=self._loop, daemon=True)
                self._thread.start()
            self._cond.notify()

    def call_later(self, delay_ms: int, fn: Callable[[], None]) -> None:
        self.call_at(self.now_ms() + int(delay_ms), fn)

    def _loop(self) -> None:
        while True:
            with self._cond:
                if not self._events:
                    self._cond.wait(0.2)
                    if not self._events:
                        continue
                wait_ms = self._events[0][0] - self.now_ms()
                if wait_ms > 0:
                    self._cond.wait(wait_ms / 1000.0)
                    continue
                _, _, fn = heapq.heappop(self._events)
            try:
                fn()
            except Exception:  # scheduled work must not kill the timer thread
                pass

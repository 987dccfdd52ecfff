"""Topic-based pub/sub transport.

The in-process broker is the reference implementation; the TCP server/client
pair extends it across processes with the same ordering and drop-oldest loss
semantics. A publisher is never backpressured: when a subscriber queue is
full the oldest message is dropped and counted.
"""

from __future__ import annotations

import socket
import threading
from collections import deque
from dataclasses import dataclass, field

from .wire import (
    KIND_SUBSCRIBE,
    BusMessage,
    WireError,
    encode_message,
    expected_kind,
    read_message,
    topic_is_valid,
)

DEFAULT_QUEUE_CAPACITY = 1024
DEFAULT_BUS_PORT = 7010


class BusUsageError(ValueError):
    pass


def pattern_matches(pattern: str, topic: str) -> bool:
    """Prefix match on dot-separated segments; empty pattern matches all."""
    if pattern == "":
        return True
    return topic == pattern or topic.startswith(pattern + ".")


class Subscription:
    """Bounded delivery queue for one subscriber; drop-oldest on overflow."""

    def __init__(self, pattern: str, capacity: int = DEFAULT_QUEUE_CAPACITY):
        self.pattern = pattern
        self.capacity = capacity
        self.dropped = 0
        self._queue: deque[BusMessage] = deque()
        self._cond = threading.Condition()
        self._closed = False

    def _offer(self, msg: BusMessage) -> None:
        with self._cond:
            if self._closed:
                return
            if len(self._queue) >= self.capacity:
                self._queue.popleft()
                self.dropped += 1
            self._queue.append(msg)
            self._cond.notify()

    def get(self, timeout: float | None = None) -> BusMessage | None:
        """Next message, blocking up to `timeout` seconds; None on timeout/close."""
        with self._cond:
            if not self._queue:
                self._cond.wait(timeout)
            if self._queue:
                return self._queue.popleft()
            return None

    def try_get(self) -> BusMessage | None:
        with self._cond:
            return self._queue.popleft() if self._queue else None

    def drain(self) -> list[BusMessage]:
        with self._cond:
            out = list(self._queue)
            self._queue.clear()
            return out

    def __len__(self) -> int:
        with self._cond:
            return len(self._queue)

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


@dataclass
class BusStats:
    published: int = 0
    delivered: int = 0
    dropped: int = 0
    rejected: int = 0
    per_pattern_drops: dict[str, int] = field(default_factory=dict)


class MessageBus:
    """In-process broker. Publishers may call from any thread; each
    Subscription is consumed by one reader at a time."""

    def __init__(self):
        self._subs: list[Subscription] = []
        self._lock = threading.Lock()
        self.stats = BusStats()

    def subscribe(self, pattern: str, capacity: int = DEFAULT_QUEUE_CAPACITY) -> Subscription:
        if pattern != "" and not topic_is_valid(pattern):
            raise BusUsageError(f"invalid subscription pattern: {pattern!r}")
        sub = Subscription(pattern, capacity)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)
        sub.close()

    def publish(self, topic: str, kind: str, data: dict, t: int) -> None:
        if not topic_is_valid(topic):
            raise BusUsageError(f"invalid topic: {topic!r}")
        want = expected_kind(topic)
        if want is not None and kind != want:
            raise BusUsageError(f"topic {topic!r} requires payload kind {want!r}, got {kind!r}")
        msg = BusMessage(topic=topic, t=t, kind=kind, data=data)
        with self._lock:
            subs = [s for s in self._subs if pattern_matches(s.pattern, topic)]
        self.stats.published += 1
        for sub in subs:
            before = sub.dropped
            sub._offer(msg)
            self.stats.delivered += 1
            if sub.dropped != before:
                self.stats.dropped += 1
                key = sub.pattern or "*"
                self.stats.per_pattern_drops[key] = self.stats.per_pattern_drops.get(key, 0) + 1

    def telemetry(self) -> dict:
        return {
            "published": self.stats.published,
            "delivered": self.stats.delivered,
            "dropped": self.stats.dropped,
            "per_pattern_drops": dict(self.stats.per_pattern_drops),
        }


class _ClientConn:
    """Server-side state for one TCP client."""

    # Outbound bound is deliberately large: the hard drop-oldest point lives in
    # the client-side Subscription; this bound only guards a dead peer.
    OUTBOUND_CAPACITY = 65536

    def __init__(self, sock: socket.socket, server: "BusServer"):
        self.sock = sock
        self.server = server
        self.patterns: list[str] = []
        self.outbound: deque[bytes] = deque()
        self.dropped = 0
        self.cond = threading.Condition()
        self.alive = True

    def offer(self, payload: bytes) -> None:
        with self.cond:
            if not self.alive:
                return
            if len(self.outbound) >= self.OUTBOUND_CAPACITY:
                self.outbound.popleft()
                self.dropped += 1
            self.outbound.append(payload)
            self.cond.notify()

    def writer_loop(self) -> None:
        while True:
            with self.cond:
                while self.alive and not self.outbound:
                    self.cond.wait(0.2)
                if not self.alive and not self.outbound:
                    return
                payload = self.outbound.popleft() if self.outbound else None
            if payload is not None:
                try:
                    self.sock.sendall(payload)
                except OSError:
                    self.close()
                    return

    def close(self) -> None:
        with self.cond:
            self.alive = False
            self.cond.notify_all()
        try:
            self.sock.close()
        except OSError:
            pass


class BusServer:
    """TCP front end for a MessageBus. Clients publish frames and register
    prefix subscriptions with a reserved `subscribe` control frame."""

    def __init__(self, bus: MessageBus | None = None, host: str = "127.0.0.1", port: int = 0):
        self.bus = bus or MessageBus()
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()
        self._clients: list[_ClientConn] = []
        self._lock = threading.Lock()
        self._running = True
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while self._running:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            conn = _ClientConn(sock, self)
            with self._lock:
                self._clients.append(conn)
            threading.Thread(target=self._reader_loop, args=(conn,), daemon=True).start()
            threading.Thread(target=conn.writer_loop, daemon=True).start()

    def _reader_loop(self, conn: _ClientConn) -> None:
        stream = conn.sock.makefile("rb")
        try:
            while True:
                msg = read_message(stream)
                if msg is None:
                    break
                if msg.kind == KIND_SUBSCRIBE:
                    pattern = msg.data.get("pattern", "")
                    with self._lock:
                        conn.patterns.append(pattern)
                    continue
                try:
                    self.bus.publish(msg.topic, msg.kind, msg.data, msg.t)
                except BusUsageError:
                    self.bus.stats.rejected += 1
                self._fan_out(msg)
        except (WireError, OSError):
            pass
        finally:
            self._drop_client(conn)

    def _fan_out(self, msg: BusMessage) -> None:
        payload = encode_message(msg)
        with self._lock:
            targets = [
                c for c in self._clients
                if any(pattern_matches(p, msg.topic) for p in c.patterns)
            ]
        for c in targets:
            c.offer(payload)

    def publish(self, topic: str, kind: str, data: dict, t: int) -> None:
        """Publish from the hosting process to both local and TCP subscribers."""
        self.bus.publish(topic, kind, data, t)
        self._fan_out(BusMessage(topic=topic, t=t, kind=kind, data=data))

    def _drop_client(self, conn: _ClientConn) -> None:
        conn.close()
        with self._lock:
            if conn in self._clients:
                self._clients.remove(conn)

    def close(self) -> None:
        self._running = False
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            clients = list(self._clients)
        for c in clients:
            c.close()


class BusClient:
    """TCP peer with the same publish/subscribe surface as MessageBus."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_BUS_PORT):
        self._sock = socket.create_connection((host, port))
        self._stream = self._sock.makefile("rb")
        self._send_lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._subs_lock = threading.Lock()
        self._closed = False
        self._reader = threading.Thread(target=self._reader_loop, daemon=True)
        self._reader.start()

    def _send(self, msg: BusMessage) -> None:
        payload = encode_message(msg)
        with self._send_lock:
            self._sock.sendall(payload)

    def publish(self, topic: str, kind: str, data: dict, t: int) -> None:
        if not topic_is_valid(topic):
            raise BusUsageError(f"invalid topic: {topic!r}")
        want = expected_kind(topic)
        if want is not None and kind != want:
            raise BusUsageError(f"topic {topic!r} requires payload kind {want!r}, got {kind!r}")
        self._send(BusMessage(topic=topic, t=t, kind=kind, data=data))

    def subscribe(self, pattern: str, capacity: int = DEFAULT_QUEUE_CAPACITY) -> Subscription:
        if pattern != "" and not topic_is_valid(pattern):
            raise BusUsageError(f"invalid subscription pattern: {pattern!r}")
        sub = Subscription(pattern, capacity)
        with self._subs_lock:
            self._subs.append(sub)
        self._send(BusMessage(topic="control.bus", t=0, kind=KIND_SUBSCRIBE, data={"pattern": pattern}))
        return sub

    def _reader_loop(self) -> None:
        try:
            while True:
                msg = read_message(self._stream)
                if msg is None:
                    break
                with self._subs_lock:
                    subs = [s for s in self._subs if pattern_matches(s.pattern, msg.topic)]
                for sub in subs:
                    sub._offer(msg)
        except (WireError, OSError):
            pass
        finally:
            with self._subs_lock:
                for sub in self._subs:
                    sub.close()

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._sock.close()
        except OSError:
            pass

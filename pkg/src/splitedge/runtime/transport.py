"""Topic publish/subscribe between two nodes.

Two implementations share one interface:

* :class:`InProcBus` -- single-threaded, deterministic, virtual time. Each
  publish is delivered after the latency given to it; delivery happens when a
  subscriber pulls (``Subscription.get``) or the bus is drained.
* :class:`SocketEndpoint` -- a direct TCP connection between two endpoints,
  one reader thread per connection, bounded subscriber queues. A full queue
  stalls the reader, which stalls the peer's writes (backpressure, no drops).

A publish reaches subscribers on the *other* endpoint(s), never the sender's own.
Each subscription delivers a given (sender, topic, sequence) at most once and
drops anything that arrives out of order.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import queue
import socket
import threading
from collections import defaultdict, deque
from typing import Callable, Iterator

from ..errors import BackpressureError, MalformedPayload, TransportError
from .messages import Message, MessageKind, encode_message, read_message

logger = logging.getLogger(__name__)

NS_PER_S = 1_000_000_000
Callback = Callable[[Message], None]


class VirtualClock:
    """Integer-nanosecond clock so that repeated small steps add up exactly."""

    def __init__(self):
        self.ticks = 0

    @staticmethod
    def to_ticks(seconds: float) -> int:
        return round(seconds * NS_PER_S)

    @property
    def now(self) -> float:
        return self.ticks / NS_PER_S

    def advance_to(self, ticks: int) -> None:
        if ticks > self.ticks:
            self.ticks = ticks


class Subscription:
    def __init__(self, topic: str, callback: Callback | None = None, maxsize: int = 0):
        self.topic = topic
        self.callback = callback
        self.maxsize = maxsize
        self._last_seq: dict[str, int] = {}
        self.received = 0

    def _accept(self, msg: Message) -> bool:
        last = self._last_seq.get(msg.sender, 0)
        if msg.sequence <= last:
            logger.debug("dropping duplicate/out-of-order %s seq %d", msg.topic, msg.sequence)
            return False
        self._last_seq[msg.sender] = msg.sequence
        self.received += 1
        return True

    def get(self, timeout: float | None = None) -> Message:
        raise NotImplementedError

    def __iter__(self) -> Iterator[Message]:
        while True:
            try:
                yield self.get()
            except TransportError:
                return


class Endpoint:
    """One node's handle on a transport."""

    name: str

    def __init__(self, name: str):
        self.name = name
        self._seq: dict[str, int] = defaultdict(int)
        self._subs: dict[str, list[Subscription]] = defaultdict(list)
        self.published: dict[MessageKind, int] = defaultdict(int)

    def _next_message(self, topic: str, kind: MessageKind, payload: bytes) -> Message:
        self._seq[topic] += 1
        self.published[kind] += 1
        return Message(topic, kind, self._seq[topic], payload, self.name)

    def publish(self, topic: str, kind: MessageKind, payload: bytes = b"", latency: float = 0.0) -> Message:
        raise NotImplementedError

    def subscribe(self, topic: str, callback: Callback | None = None, maxsize: int = 0) -> Subscription:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# -- in-process --------------------------------------------------------------


class _InProcSubscription(Subscription):
    def __init__(self, bus: "InProcBus", topic: str, callback: Callback | None, maxsize: int):
        super().__init__(topic, callback, maxsize)
        self._bus = bus
        self._queue: deque[Message] = deque()

    def _deliver(self, msg: Message) -> None:
        if not self._accept(msg):
            return
        if self.callback is not None:
            self.callback(msg)
            return
        if self.maxsize and len(self._queue) >= self.maxsize:
            raise BackpressureError(f"subscriber queue for {self.topic!r} is full")
        self._queue.append(msg)

    def get(self, timeout: float | None = None) -> Message:
        while not self._queue:
            if not self._bus.step():
                raise TransportError(f"no pending messages for {self.topic!r}")
        return self._queue.popleft()

    def pending(self) -> int:
        return len(self._queue)


class _InProcEndpoint(Endpoint):
    def __init__(self, bus: "InProcBus", name: str):
        super().__init__(name)
        self._bus = bus
        self.closed = False

    def publish(self, topic, kind, payload=b"", latency=0.0):
        if self.closed or self._bus.closed:
            raise TransportError("transport is closed")
        msg = self._next_message(topic, MessageKind(kind), bytes(payload))
        self._bus._schedule(self, msg, latency)
        return msg

    def subscribe(self, topic, callback=None, maxsize=0):
        sub = _InProcSubscription(self._bus, topic, callback, maxsize)
        self._subs[topic].append(sub)
        return sub

    def close(self):
        self.closed = True


class InProcBus:
    """Deterministic event-driven bus with a virtual clock."""

    def __init__(self):
        self.clock = VirtualClock()
        self.endpoints: list[_InProcEndpoint] = []
        self._events: list = []
        self._order = itertools.count()
        self._last_due: dict[tuple[str, str], int] = {}
        self.closed = False

    def endpoint(self, name: str) -> Endpoint:
        ep = _InProcEndpoint(self, name)
        self.endpoints.append(ep)
        return ep

    def pair(self, a: str = "primary", b: str = "auxiliary") -> tuple[Endpoint, Endpoint]:
        return self.endpoint(a), self.endpoint(b)

    @property
    def now(self) -> float:
        return self.clock.now

    def _schedule(self, sender: _InProcEndpoint, msg: Message, latency: float) -> None:
        if latency < 0:
            raise ValueError("latency must be >= 0")
        due = self.clock.ticks + VirtualClock.to_ticks(latency)
        # FIFO per (sender, topic): a message never overtakes an earlier one.
        key = (sender.name, msg.topic)
        due = max(due, self._last_due.get(key, 0))
        self._last_due[key] = due
        heapq.heappush(self._events, (due, next(self._order), sender, msg))

    def step(self) -> bool:
        """Deliver the next due message. False when nothing is pending."""
        if not self._events:
            return False
        due, _, sender, msg = heapq.heappop(self._events)
        self.clock.advance_to(due)
        for ep in self.endpoints:
            if ep is sender or ep.closed:
                continue
            for sub in list(ep._subs.get(msg.topic, ())):
                sub._deliver(msg)
        return True

    def drain(self) -> int:
        n = 0
        while self.step():
            n += 1
        return n

    def close(self) -> None:
        self.closed = True


# -- sockets -----------------------------------------------------------------


class _SocketSubscription(Subscription):
    def __init__(self, topic, callback, maxsize):
        super().__init__(topic, callback, maxsize)
        self._queue: queue.Queue = queue.Queue(maxsize)

    def _deliver(self, msg: Message) -> None:
        if not self._accept(msg):
            return
        if self.callback is not None:
            self.callback(msg)
        else:
            self._queue.put(msg)  # blocks when full

    def _close(self) -> None:
        try:
            self._queue.put_nowait(None)
        except queue.Full:
            pass

    def get(self, timeout: float | None = None) -> Message:
        try:
            msg = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TransportError(f"timed out waiting on {self.topic!r}") from None
        if msg is None:
            self._queue.put(None)
            raise TransportError("connection closed")
        return msg

    def pending(self) -> int:
        return self._queue.qsize()


class SocketEndpoint(Endpoint):
    """One side of a direct TCP link."""

    def __init__(self, sock: socket.socket, name: str, peer: str):
        super().__init__(name)
        self._sock = sock
        self._peer = peer
        self._wlock = threading.Lock()
        self._slock = threading.Lock()
        self._rfile = sock.makefile("rb")
        self._closed = threading.Event()
        self.error: Exception | None = None
        self._reader = threading.Thread(target=self._read_loop, name=f"{name}-reader", daemon=True)
        self._reader.start()

    @classmethod
    def connect(cls, host: str, port: int, name: str = "primary", timeout: float = 5.0) -> "SocketEndpoint":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        sock.settimeout(None)
        return cls(sock, name, f"{host}:{port}")

    def _read_loop(self) -> None:
        try:
            while not self._closed.is_set():
                msg = read_message(self._rfile, sender=self._peer)
                with self._slock:
                    subs = list(self._subs.get(msg.topic, ()))
                for sub in subs:
                    sub._deliver(msg)
        except EOFError:
            pass
        except MalformedPayload as exc:
            self.error = exc
            logger.error("malformed message from %s: %s", self._peer, exc)
        except (OSError, ValueError) as exc:
            if not self._closed.is_set():
                self.error = exc
                logger.warning("reader for %s stopped: %s", self.name, exc)
        finally:
            self._closed.set()
            with self._slock:
                for subs in self._subs.values():
                    for sub in subs:
                        sub._close()

    def publish(self, topic, kind, payload=b"", latency=0.0):
        if self._closed.is_set():
            raise TransportError("connection is closed")
        msg = self._next_message(topic, MessageKind(kind), bytes(payload))
        data = encode_message(msg)
        try:
            with self._wlock:
                self._sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc
        return msg

    def subscribe(self, topic, callback=None, maxsize=0):
        sub = _SocketSubscription(topic, callback, maxsize)
        with self._slock:
            self._subs[topic].append(sub)
        if self._closed.is_set():
            sub._close()
        return sub

    def close(self) -> None:
        if self._closed.is_set() and self._sock.fileno() == -1:
            return
        self._closed.set()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
        if threading.current_thread() is not self._reader:
            self._reader.join(timeout=2.0)


class SocketListener:
    """Accepts one connection and wraps it in a :class:`SocketEndpoint`."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._sock = socket.create_server((host, port))
        self.address = self._sock.getsockname()[:2]

    def accept(self, name: str = "auxiliary", timeout: float | None = 5.0) -> SocketEndpoint:
        self._sock.settimeout(timeout)
        try:
            conn, addr = self._sock.accept()
        except OSError as exc:
            raise TransportError(f"accept failed: {exc}") from exc
        conn.settimeout(None)
        return SocketEndpoint(conn, name, f"{addr[0]}:{addr[1]}")

    def close(self) -> None:
        self._sock.close()


def socket_pair(a: str = "primary", b: str = "auxiliary") -> tuple[SocketEndpoint, SocketEndpoint]:
    """Two endpoints joined by a loopback TCP connection."""
    listener = SocketListener()
    result: dict = {}

    def _accept():
        try:
            result["ep"] = listener.accept(b)
        except TransportError as exc:
            result["err"] = exc

    t = threading.Thread(target=_accept, daemon=True)
    t.start()
    try:
        client = SocketEndpoint.connect(*listener.address, name=a)
        t.join(timeout=5.0)
    finally:
        listener.close()
    if "ep" not in result:
        client.close()
        raise result.get("err", TransportError("peer did not connect"))
    return client, result["ep"]

import io
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from splitedge.compression import synthetic_scene
from splitedge.errors import BackpressureError, MalformedPayload, TransportError
from splitedge.runtime.messages import (
    Message,
    MessageKind,
    decode_frame_batch,
    decode_message,
    encode_frame_batch,
    encode_message,
    pack_frame,
    read_message,
)
from splitedge.runtime.transport import InProcBus, SocketEndpoint, SocketListener, socket_pair


def test_wire_layout():
    data = encode_message(Message("ab", MessageKind.RESULT, 7, b"xyz"))
    assert data == b"HEO1" + b"\x03" + (7).to_bytes(8, "big") + b"\x00\x02ab" + b"\x00\x00\x00\x03xyz"
    assert decode_message(data) == Message("ab", MessageKind.RESULT, 7, b"xyz")


@given(st.text(min_size=1, max_size=50), st.sampled_from(list(MessageKind)), st.integers(0, 2**64 - 1), st.binary(max_size=300))
def test_message_round_trip(topic, kind, seq, payload):
    msg = Message(topic, kind, seq, payload)
    assert decode_message(encode_message(msg)) == msg


def test_message_malformed():
    good = encode_message(Message("t", MessageKind.CONTROL, 1, b"p"))
    with pytest.raises(MalformedPayload):
        decode_message(b"XXXX" + good[4:])
    with pytest.raises(MalformedPayload):
        decode_message(good[:4] + b"\x09" + good[5:])
    with pytest.raises(MalformedPayload):
        decode_message(good[:-1])
    with pytest.raises(MalformedPayload):
        decode_message(good + b"\x00")
    with pytest.raises(EOFError):
        read_message(io.BytesIO(b""))
    with pytest.raises(MalformedPayload):
        Message("", MessageKind.CONTROL, 1)


def test_frame_batch_round_trip():
    rng = np.random.default_rng(0)
    frames = [synthetic_scene(rng, 12, 8)[0] for _ in range(3)]
    wire = [pack_frame(i + 10, f, rle=bool(i % 2)) for i, f in enumerate(frames)]
    back = decode_frame_batch(encode_frame_batch(wire))
    assert back == wire
    assert [w.frame() for w in back] == frames
    assert decode_frame_batch(encode_frame_batch([])) == []
    payload = encode_frame_batch(wire)
    with pytest.raises(MalformedPayload):
        decode_frame_batch(payload[:-2])
    with pytest.raises(MalformedPayload):
        decode_frame_batch(payload[:-1] + b"\x05")


def test_inproc_order_and_gap_free():
    bus = InProcBus()
    a, b = bus.pair()
    sub = b.subscribe("t")
    for i in range(20):
        a.publish("t", MessageKind.CONTROL, bytes([i]), latency=0.001 * (20 - i))
    got = [sub.get() for _ in range(20)]
    assert [m.sequence for m in got] == list(range(1, 21))
    assert [m.payload[0] for m in got] == list(range(20))


def test_inproc_two_subscribers_and_no_self_delivery():
    bus = InProcBus()
    a, b = bus.pair()
    c = bus.endpoint("third")
    s1, s2 = b.subscribe("t"), c.subscribe("t")
    own = a.subscribe("t")
    a.publish("t", MessageKind.CONTROL, b"hi")
    bus.drain()
    assert s1.get().payload == b"hi" and s2.get().payload == b"hi"
    assert own.pending() == 0


def test_inproc_virtual_time_exact():
    # DERIVED: 1000 back-to-back messages at 10 ms each occupy exactly 10 s of virtual time.
    bus = InProcBus()
    a, b = bus.pair()
    sub = b.subscribe("t")
    for i in range(1000):
        a.publish("t", MessageKind.CONTROL, b"", latency=0.01)
        sub.get()
    assert bus.clock.ticks == 10_000_000_000
    assert bus.now == 10.0


def test_inproc_backpressure_and_duplicates():
    bus = InProcBus()
    a, b = bus.pair()
    sub = b.subscribe("t", maxsize=1)
    a.publish("t", MessageKind.CONTROL)
    a.publish("t", MessageKind.CONTROL)
    with pytest.raises(BackpressureError):
        bus.drain()
    dup = Message("t", MessageKind.CONTROL, 1, b"", "primary")
    assert not sub._accept(dup)
    with pytest.raises(TransportError):
        b.subscribe("empty").get()
    a.close()
    with pytest.raises(TransportError):
        a.publish("t", MessageKind.CONTROL)


def test_socket_pair_delivery():
    a, b = socket_pair()
    try:
        s1 = b.subscribe("t")
        s2 = b.subscribe("t")
        got = []
        s3 = a.subscribe("r", callback=got.append)
        for i in range(50):
            a.publish("t", MessageKind.FRAME_BATCH, bytes([i]) * 100)
        b.publish("r", MessageKind.RESULT, b"ok")
        assert [s1.get(timeout=5).payload[0] for _ in range(50)] == list(range(50))
        assert [s2.get(timeout=5).sequence for _ in range(50)] == list(range(1, 51))
        deadline = threading.Event()
        for _ in range(100):
            if got:
                break
            deadline.wait(0.02)
        assert got and got[0].payload == b"ok" and s3.received == 1
    finally:
        a.close()
        b.close()


def test_socket_backpressure_blocks_not_drops():
    a, b = socket_pair()
    try:
        sub = b.subscribe("t", maxsize=2)
        payload = b"x" * 65536
        done = threading.Event()

        def writer():
            for _ in range(200):
                a.publish("t", MessageKind.FRAME_BATCH, payload)
            done.set()

        t = threading.Thread(target=writer, daemon=True)
        t.start()
        assert not done.wait(0.5)  # the full queue stalls the writer
        seqs = [sub.get(timeout=5).sequence for _ in range(200)]
        assert seqs == list(range(1, 201))
        assert done.wait(5)
    finally:
        a.close()
        b.close()


def test_socket_close_and_errors():
    a, b = socket_pair()
    sub = b.subscribe("t")
    a.close()
    with pytest.raises(TransportError):
        sub.get(timeout=5)
    b.close()
    with pytest.raises(TransportError):
        a.publish("t", MessageKind.CONTROL)
    listener = SocketListener()
    port = listener.address[1]
    listener.close()
    with pytest.raises(TransportError):
        SocketEndpoint.connect("127.0.0.1", port, timeout=1.0)


def test_socket_rejects_bad_magic():
    listener = SocketListener()
    import socket as _socket

    raw = _socket.create_connection(listener.address)
    ep = listener.accept()
    listener.close()
    try:
        sub = ep.subscribe("t")
        raw.sendall(b"NOPE" + bytes(20))
        with pytest.raises(TransportError):
            sub.get(timeout=5)
        assert isinstance(ep.error, MalformedPayload)
    finally:
        raw.close()
        ep.close()

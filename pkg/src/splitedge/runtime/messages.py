"""Messages and their binary encoding.

Wire layout (big-endian)::

    "HEO1" | kind u8 | sequence u64 | topic_len u16 | topic utf-8 | payload_len u32 | payload

FRAME_BATCH payloads::

    count u32 | per frame: id u64 | byte_len u32 | bytes | rle_flag u8

where ``bytes`` is a PGM/PPM file, RLE-encoded when ``rle_flag`` is 1.
"""

from __future__ import annotations

import enum
import io
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, NamedTuple

from ..compression import rle_decode, rle_encode
from ..errors import MalformedPayload
from ..model import Frame
from ..pnm import decode_frame, encode_frame

MAGIC = b"HEO1"
_HEAD = struct.Struct(">4sBQH")
_PAYLOAD_LEN = struct.Struct(">I")
_COUNT = struct.Struct(">I")
_FRAME_HEAD = struct.Struct(">QI")


class MessageKind(enum.IntEnum):
    PROFILE_REPORT = 1
    FRAME_BATCH = 2
    RESULT = 3
    CONTROL = 4


@dataclass(frozen=True)
class Message:
    topic: str
    kind: MessageKind
    sequence: int
    payload: bytes = b""
    sender: str = ""  # not on the wire; set by the receiving side

    def __post_init__(self):
        if not self.topic:
            raise MalformedPayload("topic must be non-empty")
        if not (0 <= self.sequence < 2**64):
            raise MalformedPayload("sequence out of range")


def encode_message(msg: Message) -> bytes:
    topic = msg.topic.encode("utf-8")
    if len(topic) > 0xFFFF:
        raise MalformedPayload("topic too long")
    return (
        _HEAD.pack(MAGIC, int(msg.kind), msg.sequence, len(topic))
        + topic
        + _PAYLOAD_LEN.pack(len(msg.payload))
        + msg.payload
    )


def _read_exact(stream: BinaryIO, n: int, at_boundary: bool = False) -> bytes:
    """Read ``n`` bytes. A close before the first byte is EOFError only at a message boundary."""
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            if buf or not at_boundary:
                raise MalformedPayload("connection closed mid-message")
            raise EOFError
        buf += chunk
    return bytes(buf)


def read_message(stream: BinaryIO, sender: str = "") -> Message:
    """Read one message; raises EOFError on a clean close between messages."""
    magic, kind, seq, topic_len = _HEAD.unpack(_read_exact(stream, _HEAD.size, at_boundary=True))
    if magic != MAGIC:
        raise MalformedPayload(f"bad magic {magic!r}")
    try:
        kind = MessageKind(kind)
    except ValueError as exc:
        raise MalformedPayload(f"unknown message kind {kind}") from exc
    try:
        topic = _read_exact(stream, topic_len).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedPayload("topic is not UTF-8") from exc
    (plen,) = _PAYLOAD_LEN.unpack(_read_exact(stream, _PAYLOAD_LEN.size))
    payload = _read_exact(stream, plen) if plen else b""
    return Message(topic, kind, seq, payload, sender)


def decode_message(data: bytes) -> Message:
    stream = io.BytesIO(data)
    msg = read_message(stream)
    if stream.read(1):
        raise MalformedPayload("trailing bytes after message")
    return msg


class WireFrame(NamedTuple):
    frame_id: int
    data: bytes
    rle: bool

    def frame(self) -> Frame:
        return decode_frame(rle_decode(self.data) if self.rle else self.data)


def pack_frame(frame_id: int, frame: Frame, rle: bool = False) -> WireFrame:
    data = encode_frame(frame)
    return WireFrame(frame_id, rle_encode(data) if rle else data, rle)


def encode_frame_batch(frames: Iterable[WireFrame]) -> bytes:
    frames = list(frames)
    out = bytearray(_COUNT.pack(len(frames)))
    for f in frames:
        out += _FRAME_HEAD.pack(f.frame_id, len(f.data))
        out += f.data
        out.append(1 if f.rle else 0)
    return bytes(out)


def decode_frame_batch(payload: bytes) -> list[WireFrame]:
    if len(payload) < _COUNT.size:
        raise MalformedPayload("frame batch too short")
    (count,) = _COUNT.unpack_from(payload)
    pos = _COUNT.size
    frames = []
    for _ in range(count):
        if pos + _FRAME_HEAD.size > len(payload):
            raise MalformedPayload("truncated frame header")
        fid, n = _FRAME_HEAD.unpack_from(payload, pos)
        pos += _FRAME_HEAD.size
        if pos + n + 1 > len(payload):
            raise MalformedPayload("truncated frame data")
        data = payload[pos : pos + n]
        flag = payload[pos + n]
        if flag not in (0, 1):
            raise MalformedPayload(f"bad rle flag {flag}")
        frames.append(WireFrame(fid, data, bool(flag)))
        pos += n + 1
    if pos != len(payload):
        raise MalformedPayload("trailing bytes after frame batch")
    return frames

"""Binary PGM (P5), PPM (P6) and PBM (P4) reading and writing."""

from __future__ import annotations

import os

import numpy as np

from .compression import BinaryMask
from .errors import MalformedPayload
from .model import Frame


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    toks, pos = [], 0
    while len(toks) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedPayload("truncated PNM header")
        toks.append(data[start:pos])
    return toks, pos + 1  # exactly one whitespace byte ends the header


def encode_frame(frame: Frame) -> bytes:
    magic = b"P5" if frame.channels == 1 else b"P6"
    return magic + b"\n%d %d\n255\n" % (frame.width, frame.height) + frame.pixels


def decode_frame(data: bytes) -> Frame:
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise MalformedPayload(f"not a binary PGM/PPM (magic {magic!r})")
    (w, h, maxval), pos = _tokens(data[2:], 3)
    if int(maxval) != 255:
        raise MalformedPayload("only 8-bit PGM/PPM is supported")
    channels = 1 if magic == b"P5" else 3
    w, h = int(w), int(h)
    body = data[2 + pos : 2 + pos + w * h * channels]
    if len(body) != w * h * channels:
        raise MalformedPayload("truncated pixel data")
    return Frame(w, h, channels, body)


def encode_mask(mask: BinaryMask) -> bytes:
    packed = np.packbits(mask.to_array(), axis=1)
    return b"P4\n%d %d\n" % (mask.width, mask.height) + packed.tobytes()


def decode_mask(data: bytes) -> BinaryMask:
    if data[:2] != b"P4":
        raise MalformedPayload("not a binary PBM")
    (w, h), pos = _tokens(data[2:], 2)
    w, h = int(w), int(h)
    row_bytes = (w + 7) // 8
    body = data[2 + pos : 2 + pos + row_bytes * h]
    if len(body) != row_bytes * h:
        raise MalformedPayload("truncated bitmap data")
    bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8).reshape(h, row_bytes), axis=1)[:, :w]
    return BinaryMask.from_array(bits)


def read_frame(path: str | os.PathLike) -> Frame:
    with open(path, "rb") as fh:
        return decode_frame(fh.read())


def write_frame(path: str | os.PathLike, frame: Frame) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_frame(frame))


def read_mask(path: str | os.PathLike) -> BinaryMask:
    with open(path, "rb") as fh:
        return decode_mask(fh.read())


def write_mask(path: str | os.PathLike, mask: BinaryMask) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_mask(mask))

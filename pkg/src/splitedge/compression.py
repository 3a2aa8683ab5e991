"""Frame masking, run-length coding and similar-frame elimination.

RLE format: a sequence of 3-byte records ``count (uint16, big-endian) | value``.
Runs longer than 65535 are split; a zero count is invalid.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, MalformedPayload, RangeError
from .model import Frame

MAX_RUN = 0xFFFF
_RECORD = struct.Struct(">HB")

DEFAULT_SIMILARITY_THRESHOLD = 0.97
DEFAULT_DETECTOR_LATENCY_S = 0.0035


@dataclass(frozen=True)
class BinaryMask:
    width: int
    height: int
    bits: bytes  # one byte per pixel, 0 or 1

    def __post_init__(self):
        bits = bytes(self.bits)
        if len(bits) != self.width * self.height:
            raise RangeError("bits", "mask length != width * height")
        if bits.translate(None, b"\x00\x01"):
            raise RangeError("bits", "mask bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "BinaryMask":
        arr = np.asarray(arr)
        h, w = arr.shape
        return cls(w, h, (arr != 0).astype(np.uint8).tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.bits, dtype=np.uint8).reshape(self.height, self.width)

    @property
    def coverage(self) -> float:
        return sum(self.bits) / len(self.bits)


@dataclass(frozen=True)
class MaskedFrame:
    frame: Frame
    rle_payload: bytes
    raw_bytes: int

    @property
    def compressed_bytes(self) -> int:
        return len(self.rle_payload)

    @property
    def saving(self) -> float:
        """Fractional size reduction relative to the raw frame."""
        return 1.0 - self.compressed_bytes / self.raw_bytes


def rle_encode(pixels: bytes) -> bytes:
    data = np.frombuffer(bytes(pixels), dtype=np.uint8)
    if data.size == 0:
        return b""
    # Run boundaries, vectorised; long runs are split afterwards.
    starts = np.flatnonzero(np.r_[True, data[1:] != data[:-1]])
    lengths = np.diff(np.r_[starts, data.size])
    out = bytearray()
    for start, length in zip(starts.tolist(), lengths.tolist()):
        value = int(data[start])
        while length > MAX_RUN:
            out += _RECORD.pack(MAX_RUN, value)
            length -= MAX_RUN
        out += _RECORD.pack(length, value)
    return bytes(out)


def rle_decode(payload: bytes) -> bytes:
    payload = bytes(payload)
    if len(payload) % _RECORD.size:
        raise MalformedPayload(f"payload length {len(payload)} is not a multiple of {_RECORD.size}")
    out = bytearray()
    for count, value in _RECORD.iter_unpack(payload):
        if count == 0:
            raise MalformedPayload("zero-length run")
        out += bytes((value,)) * count
    return bytes(out)


def _check_same_shape(frame: Frame, width: int, height: int) -> None:
    if (frame.width, frame.height) != (width, height):
        raise DimensionMismatch(f"frame is {frame.width}x{frame.height}, other is {width}x{height}")


def apply_mask(frame: Frame, mask: BinaryMask) -> MaskedFrame:
    """Zero every pixel outside the mask and RLE-encode the result."""
    _check_same_shape(frame, mask.width, mask.height)
    m = mask.to_array()
    arr = frame.to_array()
    masked = arr * (m if frame.channels == 1 else m[:, :, None])
    out = Frame.from_array(masked)
    return MaskedFrame(out, rle_encode(out.pixels), frame.nbytes)


def frame_similarity(a: Frame, b: Frame) -> float:
    """1 - mean absolute pixel difference / 255."""
    _check_same_shape(a, b.width, b.height)
    if a.channels != b.channels:
        raise DimensionMismatch("channel counts differ")
    da = np.frombuffer(a.pixels, dtype=np.uint8).astype(np.int16)
    db = np.frombuffer(b.pixels, dtype=np.uint8).astype(np.int16)
    return 1.0 - float(np.abs(da - db).mean()) / 255.0


def dedup_stream(frames: Sequence[Frame], threshold: float = DEFAULT_SIMILARITY_THRESHOLD) -> tuple[list[Frame], int]:
    """Keep a frame only if it is less similar than ``threshold`` to the last kept one."""
    if not (0.0 <= threshold <= 1.0):
        raise RangeError("threshold", "threshold must be in [0, 1]")
    kept: list[Frame] = []
    for f in frames:
        if not kept or frame_similarity(f, kept[-1]) < threshold:
            kept.append(f)
    return kept, len(frames) - len(kept)


def dedup_indices(frames: Sequence[Frame], threshold: float = DEFAULT_SIMILARITY_THRESHOLD) -> list[int]:
    """Indices of the frames :func:`dedup_stream` keeps."""
    keep, last = [], None
    for i, f in enumerate(frames):
        if last is None or frame_similarity(f, last) < threshold:
            keep.append(i)
            last = f
    return keep


def synthetic_scene(
    rng: np.random.Generator,
    width: int = 96,
    height: int = 64,
    background_fraction: float = 0.72,
    channels: int = 1,
) -> tuple[Frame, BinaryMask]:
    """A noisy background with textured rectangular objects and their mask.

    Rectangles are added until the uncovered area drops to roughly
    ``background_fraction``. Object texture comes in horizontal strokes of
    1-6 pixels so the foreground is neither flat nor pure noise.
    """
    mask = np.zeros((height, width), dtype=np.uint8)
    target = 1.0 - background_fraction
    while mask.mean() < target:
        rw = int(rng.integers(width // 8, width // 3 + 1))
        rh = int(rng.integers(height // 8, height // 3 + 1))
        x0 = int(rng.integers(0, width - rw + 1))
        y0 = int(rng.integers(0, height - rh + 1))
        mask[y0 : y0 + rh, x0 : x0 + rw] = 1

    shape = (height, width) if channels == 1 else (height, width, channels)
    pixels = rng.integers(0, 256, size=shape, dtype=np.uint8)
    n = height * width
    lengths = rng.integers(1, 7, size=n)
    values = rng.integers(1, 256, size=n, dtype=np.uint8)
    strokes = np.repeat(values, lengths)[:n].reshape(height, width)
    fg = strokes if channels == 1 else np.repeat(strokes[:, :, None], channels, axis=2)
    sel = mask.astype(bool)
    pixels[sel] = fg[sel]
    return Frame.from_array(pixels), BinaryMask.from_array(mask)


def compression_stats(masked: Sequence[MaskedFrame]) -> dict:
    raw = sum(m.raw_bytes for m in masked)
    comp = sum(m.compressed_bytes for m in masked)
    savings = [m.saving for m in masked]
    return {
        "frames": len(masked),
        "raw_bytes": raw,
        "compressed_bytes": comp,
        "total_saving": 1.0 - comp / raw if raw else 0.0,
        "mean_saving": float(np.mean(savings)) if savings else 0.0,
    }

"""Binary telemetry frame codec and length-prefixed stream framing.

Frame layout (little-endian):

    magic "AAMF" | version u8 | stream_id u16 | timestamp_us u64 | nchan u16
    nchan x (angle_deg f64 | quality u8)
    crc32 u32  (zlib crc over every preceding byte)

On the wire each frame travels as a u32 length prefix followed by the frame
bytes, so a reader can resynchronize per message and count bad frames
without losing the stream.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import CrcMismatch, FrameDecodeError

MAGIC = b"AAMF"
VERSION = 1
MAX_MESSAGE = 1 << 20

_HEADER = struct.Struct("<4sBHQH")
_CHANNEL = struct.Struct("<dB")
_CRC = struct.Struct("<I")
_LENGTH = struct.Struct("<I")


class Quality(IntEnum):
    GOOD = 0
    SUSPECT = 1
    BAD = 2
    MISSING = 3


@dataclass(frozen=True)
class PhasorFrame:
    timestamp_us: int
    stream_id: int
    angles: np.ndarray                  # degrees, one per channel
    qualities: np.ndarray = field(default=None)  # Quality codes, uint8

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        object.__setattr__(self, "angles", angles)
        q = self.qualities
        if q is None:
            q = np.zeros(angles.size, dtype=np.uint8)
        q = np.asarray(q, dtype=np.uint8)
        object.__setattr__(self, "qualities", q)
        if q.shape != angles.shape:
            raise ValueError("angles and qualities must have equal length")
        if self.timestamp_us < 0:
            raise ValueError("timestamp must be non-negative")

    @property
    def n_channels(self) -> int:
        return int(self.angles.size)


def encode_frame(frame: PhasorFrame) -> bytes:
    if frame.n_channels > 0xFFFF:
        raise ValueError("too many channels for one frame")
    if int(frame.qualities.max(initial=0)) > 3:
        raise ValueError("quality codes must be 0..3")
    buf = bytearray(_HEADER.pack(MAGIC, VERSION, frame.stream_id,
                                 frame.timestamp_us, frame.n_channels))
    for ang, q in zip(frame.angles, frame.qualities):
        buf += _CHANNEL.pack(float(ang), int(q))
    buf += _CRC.pack(zlib.crc32(bytes(buf)))
    return bytes(buf)


def decode_frame(data: bytes) -> PhasorFrame:
    if len(data) < _HEADER.size + _CRC.size:
        raise FrameDecodeError(f"frame too short ({len(data)} bytes)")
    magic, version, stream_id, ts, nchan = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FrameDecodeError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameDecodeError(f"unsupported version {version}")
    expect = _HEADER.size + nchan * _CHANNEL.size + _CRC.size
    if len(data) != expect:
        raise FrameDecodeError(f"length {len(data)} != {expect} for {nchan} channels")
    (crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    actual = zlib.crc32(data[:-_CRC.size])
    if crc != actual:
        raise CrcMismatch(f"crc {crc:#010x} != computed {actual:#010x}")
    angles = np.empty(nchan)
    qualities = np.empty(nchan, dtype=np.uint8)
    off = _HEADER.size
    for i in range(nchan):
        angles[i], qualities[i] = _CHANNEL.unpack_from(data, off)
        off += _CHANNEL.size
    if qualities.max(initial=0) > 3:
        raise FrameDecodeError("quality code out of range")
    return PhasorFrame(timestamp_us=ts, stream_id=stream_id,
                       angles=angles, qualities=qualities)


def pack_message(payload: bytes) -> bytes:
    if len(payload) > MAX_MESSAGE:
        raise ValueError("message exceeds size cap")
    return _LENGTH.pack(len(payload)) + payload


def read_exact(fp, n: int) -> bytes | None:
    """Read exactly n bytes from a file-like object; None on clean EOF at a
    message boundary, error mid-message."""
    chunks = []
    got = 0
    while got < n:
        chunk = fp.read(n - got)
        if not chunk:
            if got == 0:
                return None
            raise FrameDecodeError("stream truncated mid message")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


class FrameReader:
    """Iterates decoded frames off a length-prefixed binary stream, keeping
    going (and counting) when individual frames fail validation."""

    def __init__(self, fp):
        self.fp = fp
        self.crc_rejected = 0
        self.malformed = 0

    def __iter__(self):
        return self

    def __next__(self) -> PhasorFrame:
        while True:
            head = read_exact(self.fp, _LENGTH.size)
            if head is None:
                raise StopIteration
            (length,) = _LENGTH.unpack(head)
            if length > MAX_MESSAGE:
                raise FrameDecodeError(f"message length {length} exceeds cap")
            payload = read_exact(self.fp, length)
            if payload is None:
                raise StopIteration
            try:
                return decode_frame(payload)
            except CrcMismatch:
                self.crc_rejected += 1
            except FrameDecodeError:
                self.malformed += 1

"""Binary sketch files.

Layout (little-endian)::

    magic "FSKT" | version u8 | kind u8 | q f64 | m u32 | W u32 |
    offset mode u8 | seed u64 | payload | [estimate f64] | crc32 u32

PCSA payloads are the m*W bits row-major, LSB-first within each byte and
zero-padded to a whole byte.  LL payloads are m u16 registers.  Martingale
kinds append the running estimate.  The CRC covers every preceding byte.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .loglog import LogLogSketch
from .martingale import MartingaleSketch
from .params import OffsetMode, SketchParams
from .pcsa import PcsaSketch

MAGIC = b"FSKT"
VERSION = 1
KIND_PCSA, KIND_LL, KIND_MART_PCSA, KIND_MART_LL = range(4)

_HEADER = struct.Struct("<4sBBdIIBQ")


class SketchFormatError(ValueError):
    pass


def _kind_of(sketch) -> int:
    if isinstance(sketch, MartingaleSketch):
        return KIND_MART_PCSA if isinstance(sketch.inner, PcsaSketch) else KIND_MART_LL
    if isinstance(sketch, PcsaSketch):
        return KIND_PCSA
    if isinstance(sketch, LogLogSketch):
        return KIND_LL
    raise TypeError(f"cannot serialize {type(sketch).__name__}")


def serialize(sketch) -> bytes:
    kind = _kind_of(sketch)
    inner = sketch.inner if isinstance(sketch, MartingaleSketch) else sketch
    p = inner.params
    out = bytearray(_HEADER.pack(MAGIC, VERSION, kind, p.q, p.m, p.W, int(p.offsets), inner.seed))
    if isinstance(inner, PcsaSketch):
        out += np.packbits(inner.bits.reshape(-1), bitorder="little").tobytes()
    else:
        out += inner.registers.astype("<u2").tobytes()
    if isinstance(sketch, MartingaleSketch):
        out += struct.pack("<d", sketch.estimate)
    out += struct.pack("<I", zlib.crc32(out))
    return bytes(out)


def deserialize(data: bytes):
    if len(data) < _HEADER.size + 4:
        raise SketchFormatError("sketch file too short")
    magic, version, kind, q, m, W, mode, seed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SketchFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SketchFormatError(f"unsupported version {version}")
    if kind not in (KIND_PCSA, KIND_LL, KIND_MART_PCSA, KIND_MART_LL):
        raise SketchFormatError(f"unknown sketch kind {kind}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise SketchFormatError("checksum mismatch")
    try:
        params = SketchParams(q=q, m=m, W=W, offsets=OffsetMode(mode))
    except ValueError as exc:
        raise SketchFormatError(str(exc)) from exc

    pos = _HEADER.size
    pcsa = kind in (KIND_PCSA, KIND_MART_PCSA)
    size = (m * W + 7) // 8 if pcsa else 2 * m
    martingale = kind in (KIND_MART_PCSA, KIND_MART_LL)
    expected = _HEADER.size + size + (8 if martingale else 0) + 4
    if len(data) != expected:
        raise SketchFormatError(f"expected {expected} bytes, got {len(data)}")
    payload = np.frombuffer(data, dtype=np.uint8, count=size, offset=pos)
    if pcsa:
        bits = np.unpackbits(payload, bitorder="little", count=m * W).astype(bool)
        sketch = PcsaSketch(params, seed, bits.reshape(m, W))
    else:
        regs = np.frombuffer(data, dtype="<u2", count=m, offset=pos)
        try:
            sketch = LogLogSketch(params, seed, regs)
        except ValueError as exc:
            raise SketchFormatError(str(exc)) from exc
    if martingale:
        (estimate,) = struct.unpack_from("<d", data, pos + size)
        sketch = MartingaleSketch(sketch, estimate)
    return sketch


def save(sketch, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(sketch))


def load(path):
    with open(path, "rb") as fh:
        return deserialize(fh.read())

"""Binary ``DXNM`` container for pixel and row/column noise models.

Layout (all integers little-endian)::

    b"DXNM"  version:u16  bit_depth:u16  channels:u8  exposures:u8
    per (c, e) in channel-major order:   table
    zero or more sections:  b"RCNM"  axis:u8 (0 row, 1 column)  per (c, e): table

    table := populated:u32, then per populated y:
             y:u16  x_min:u16  length:u16  cumulative:f32[length]
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import MalformedHeader, TruncatedPayload
from .imaging import EXPOSURES
from .noise import PixelNoiseModel
from .rowcol import AXES, RowColNoiseModel
from .tables import CumulativeTable

MAGIC = b"DXNM"
SECTION_ROWCOL = b"RCNM"
VERSION = 1


def _pack_table(t: CumulativeTable) -> bytes:
    parts = [struct.pack("<I", len(t.ys))]
    for i in range(len(t.ys)):
        s, n = int(t.starts[i]), int(t.lengths[i])
        parts.append(struct.pack("<HHH", int(t.ys[i]), int(t.x_min[i]), n))
        parts.append(t.cum[s : s + n].astype("<f4").tobytes())
    return b"".join(parts)


def _pack_tables(tables: dict, channels: int) -> bytes:
    return b"".join(_pack_table(tables[c, e]) for c in range(channels) for e in EXPOSURES)


def dumps(pixel: PixelNoiseModel, rowcol=()) -> bytes:
    out = [MAGIC, struct.pack("<HHBB", VERSION, pixel.bit_depth, pixel.channels, len(EXPOSURES))]
    out.append(_pack_tables(pixel.tables, pixel.channels))
    for rc in rowcol:
        if (rc.bit_depth, rc.channels) != (pixel.bit_depth, pixel.channels):
            raise ValueError("row/column model must match the pixel model's bit depth and channels")
        out.append(SECTION_ROWCOL + struct.pack("<B", AXES.index(rc.axis)))
        out.append(_pack_tables(rc.tables, rc.channels))
    return b"".join(out)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedPayload(f"model file ends at byte {len(self.buf)}, needed {self.pos + n}")
        b = self.buf[self.pos : self.pos + n]
        self.pos += n
        return b

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def at_end(self) -> bool:
        return self.pos >= len(self.buf)


def _read_table(r: _Reader, bit_depth: int) -> CumulativeTable:
    (count,) = r.unpack("<I")
    ys = np.empty(count, dtype=np.uint16)
    x_min = np.empty(count, dtype=np.uint16)
    lengths = np.empty(count, dtype=np.uint16)
    rows = []
    for i in range(count):
        ys[i], x_min[i], lengths[i] = r.unpack("<HHH")
        rows.append(np.frombuffer(r.take(4 * int(lengths[i])), dtype="<f4"))
    cum = np.concatenate(rows) if rows else np.zeros(0, np.float32)
    return CumulativeTable(ys, x_min, lengths, cum.astype(np.float32), bit_depth)


def _read_tables(r: _Reader, channels: int, bit_depth: int) -> dict:
    return {(c, e): _read_table(r, bit_depth) for c in range(channels) for e in EXPOSURES}


def loads(buf: bytes):
    """Parse a container; returns ``(pixel_model, [rowcol_models])``."""
    r = _Reader(buf)
    if len(buf) < 4 or r.take(4) != MAGIC:
        raise MalformedHeader("not a DXNM model file")
    version, bit_depth, channels, exposures = r.unpack("<HHBB")
    if version != VERSION:
        raise MalformedHeader(f"unsupported model version {version}")
    if exposures != len(EXPOSURES) or not 8 <= bit_depth <= 16:
        raise MalformedHeader("unsupported exposure count or bit depth")
    pixel = PixelNoiseModel(bit_depth, channels, _read_tables(r, channels, bit_depth))
    rowcol = []
    while not r.at_end():
        tag = r.take(4)
        if tag != SECTION_ROWCOL:
            raise MalformedHeader(f"unknown section {tag!r}")
        (axis,) = r.unpack("<B")
        if axis >= len(AXES):
            raise MalformedHeader(f"bad axis byte {axis}")
        rowcol.append(RowColNoiseModel(AXES[axis], bit_depth, channels, _read_tables(r, channels, bit_depth)))
    return pixel, rowcol


def save_models(path, pixel: PixelNoiseModel, rowcol=()) -> None:
    with open(path, "wb") as f:
        f.write(dumps(pixel, rowcol))


def load_models(path):
    with open(path, "rb") as f:
        return loads(f.read())

"""PFM (float) and 16-bit PGM/PPM (integer) readers and writers.

PFM files hold 32-bit floats stored bottom row first; a negative scale marks
little-endian data. PGM files hold big-endian samples with a ``maxval`` of
``2**B - 1`` and a ``# bitdepth B`` comment. Three-channel readings are
written as ``P6`` with the same conventions.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import MalformedHeader, TruncatedPayload, UnsupportedMaxVal
from .imaging import ExposureLayout, QuantizedReading


class _HeaderScanner:
    """Whitespace-separated header tokens with ``#`` comments collected."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0
        self.comments: list[str] = []

    def token(self, comments: bool = False) -> bytes:
        buf, n = self.buf, len(self.buf)
        while True:
            while self.pos < n and buf[self.pos : self.pos + 1].isspace():
                self.pos += 1
            if comments and self.pos < n and buf[self.pos] == ord("#"):
                end = buf.find(b"\n", self.pos)
                end = n if end < 0 else end
                self.comments.append(buf[self.pos + 1 : end].decode("ascii", "replace").strip())
                self.pos = end
                continue
            break
        start = self.pos
        while self.pos < n and not buf[self.pos : self.pos + 1].isspace():
            self.pos += 1
        if start == self.pos:
            raise MalformedHeader("unexpected end of header")
        return buf[start : self.pos]

    def integer(self, comments: bool = False) -> int:
        tok = self.token(comments)
        try:
            value = int(tok)
        except ValueError:
            raise MalformedHeader(f"expected an integer, got {tok!r}") from None
        if value < 0:
            raise MalformedHeader(f"negative header value {value}")
        return value

    def end_header(self) -> int:
        # exactly one whitespace byte separates the header from the payload
        if self.pos >= len(self.buf) or not self.buf[self.pos : self.pos + 1].isspace():
            raise MalformedHeader("missing whitespace after header")
        return self.pos + 1


def _read_bytes(path) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a float64 ``(H, W, C)`` array (values exact float32)."""
    buf = _read_bytes(path)
    if not buf:
        raise MalformedHeader(f"{path}: empty file")
    sc = _HeaderScanner(buf)
    magic = sc.token()
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise MalformedHeader(f"{path}: bad PFM magic {magic!r}")
    width = sc.integer()
    height = sc.integer()
    tok = sc.token()
    try:
        scale = float(tok)
    except ValueError:
        raise MalformedHeader(f"{path}: bad scale {tok!r}") from None
    if scale == 0 or not np.isfinite(scale):
        raise MalformedHeader(f"{path}: bad scale {tok!r}")
    start = sc.end_header()
    count = width * height * channels
    if len(buf) - start < 4 * count:
        raise TruncatedPayload(f"{path}: expected {4 * count} payload bytes, found {len(buf) - start}")
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=start)
    img = data.reshape(height, width, channels)[::-1]
    return img.astype(np.float64)


def write_pfm(path, image) -> None:
    """Write a 1- or 3-channel image as little-endian PFM."""
    a = np.asarray(image)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ValueError(f"PFM holds 1 or 3 channels, got shape {a.shape}")
    height, width, channels = a.shape
    magic = b"PF" if channels == 3 else b"Pf"
    header = magic + b"\n%d %d\n-1.0\n" % (width, height)
    payload = np.ascontiguousarray(a[::-1], dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def _bit_depth_for_maxval(maxval: int) -> int:
    b = (maxval + 1).bit_length() - 1
    if maxval < 1 or (1 << b) != maxval + 1 or not 8 <= b <= 16:
        raise UnsupportedMaxVal(f"maxval {maxval} is not 2**B - 1 with B in [8, 16]")
    return b


def read_pgm16(path) -> QuantizedReading:
    """Read a binary PGM (``P5``) or PPM (``P6``) reading."""
    buf = _read_bytes(path)
    if not buf:
        raise MalformedHeader(f"{path}: empty file")
    sc = _HeaderScanner(buf)
    magic = sc.token(comments=True)
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise MalformedHeader(f"{path}: bad PGM magic {magic!r}")
    width = sc.integer(comments=True)
    height = sc.integer(comments=True)
    maxval = sc.integer(comments=True)
    start = sc.end_header()
    bit_depth = _bit_depth_for_maxval(maxval)

    layout = ExposureLayout()
    for comment in sc.comments:
        parts = comment.split()
        if parts[:1] == ["bitdepth"] and len(parts) == 2:
            if parts[1] != str(bit_depth):
                raise UnsupportedMaxVal(f"{path}: bitdepth comment {parts[1]} disagrees with maxval {maxval}")
        elif parts[:1] == ["layout"] and len(parts) == 3:
            try:
                layout = ExposureLayout(parts[1], int(parts[2]))
            except ValueError:
                raise MalformedHeader(f"{path}: bad layout comment {comment!r}") from None

    count = width * height * channels
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    if len(buf) - start < dtype.itemsize * count:
        raise TruncatedPayload(
            f"{path}: expected {dtype.itemsize * count} payload bytes, found {len(buf) - start}"
        )
    data = np.frombuffer(buf, dtype=dtype, count=count, offset=start).reshape(height, width, channels)
    if data.size and data.max() > maxval:
        raise MalformedHeader(f"{path}: sample exceeds maxval {maxval}")
    return QuantizedReading(data.astype(np.uint16), bit_depth, layout)


def write_pgm16(path, reading: QuantizedReading) -> None:
    data = reading.data
    height, width, channels = data.shape
    if channels not in (1, 3):
        raise ValueError(f"PGM/PPM holds 1 or 3 channels, got {channels}")
    magic = "P5" if channels == 1 else "P6"
    lay = reading.layout
    header = (
        f"{magic}\n# bitdepth {reading.bit_depth}\n# layout {lay.axis} {lay.low_parity}\n"
        f"{width} {height}\n{reading.max_value}\n"
    ).encode("ascii")
    dtype = ">u2" if reading.max_value > 255 else "u1"
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(data, dtype=dtype).tobytes())


def read_image(path) -> np.ndarray:
    """Read a linear image from PFM, or a reading from PGM/PPM as normalized floats."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".pgm", ".ppm"):
        r = read_pgm16(path)
        return r.data.astype(np.float64) / r.max_value
    return read_pfm(path)

"""Manifest-driven synthesis of distorted/clean training pairs.

A manifest is a line-oriented text file::

    # comment
    seed 1234
    config ratio 4
    clip  frames/clip01  *.pfm  240
    pair  clean/001.pgm  sensor/001.pgm
    calibration  flat/000.pgm
    split train  sensor/001.pgm

Relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import glob
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import rng
from .blur import FrameStack, exposure_mosaic, low_frame_index, synthesize_mb_mosaic
from .errors import DuplicateSplit, HDRDistortError, MissingPath, ParseError, PatchTooLarge
from .fileio import read_pfm, write_pfm
from .imaging import (
    HIGH,
    ExposureLayout,
    QuantizedReading,
    SensorConfig,
    as_image,
    deinterleave_columns,
    exposure_map,
    linearize,
)
from .noise import PixelNoiseModel, apply_pixel_noise
from .rowcol import apply_rowcol_noise

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20210301

# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class ClipEntry:
    directory: str
    pattern: str
    fps: float

    @property
    def name(self) -> str:
        return os.path.basename(os.path.normpath(self.directory))


@dataclass(frozen=True)
class PatchGeometry:
    height: int = 128
    width: int = 128
    stride: int = 128


@dataclass
class DatasetManifest:
    clips: list = field(default_factory=list)
    capture_pairs: list = field(default_factory=list)
    calibration: list = field(default_factory=list)
    splits: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    config: SensorConfig = field(default_factory=SensorConfig)
    geometry: PatchGeometry = field(default_factory=PatchGeometry)
    t_stride: int | None = None
    linearize_frames: bool = True
    base_dir: str = "."

    @property
    def window_stride(self) -> int:
        return self.t_stride or self.config.burst_length


_CONFIG_KEYS = {
    "bit_depth": int,
    "ratio": float,
    "burst": int,
    "gamma": float,
    "layout": str,
    "low_parity": int,
    "alignment": str,
    "patch_height": int,
    "patch_width": int,
    "stride": int,
    "t_stride": int,
    "linearize": str,
}


def _natural_key(path: str):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", os.path.basename(path))]


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest; every referenced path must exist."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()

    def resolve(p):
        return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))

    m = DatasetManifest(base_dir=base)
    cfg = {}
    seen_split = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]

        def need(n, usage):
            if len(args) != n:
                raise ParseError(f"'{kind}' expects {usage}", lineno, kind)

        if kind == "clip":
            need(3, "<dir> <pattern> <fps>")
            try:
                fps = float(args[2])
            except ValueError:
                raise ParseError(f"bad frame rate {args[2]!r}", lineno, "fps") from None
            m.clips.append(ClipEntry(resolve(args[0]), args[1], fps))
        elif kind == "pair":
            need(2, "<clean> <distorted>")
            m.capture_pairs.append((resolve(args[0]), resolve(args[1])))
        elif kind == "calibration":
            need(1, "<path>")
            m.calibration.append(resolve(args[0]))
        elif kind == "split":
            need(2, "<name> <path>")
            name, p = args[0], resolve(args[1])
            if p in seen_split and seen_split[p] != name:
                raise DuplicateSplit(f"line {lineno}: {args[1]} is in both '{seen_split[p]}' and '{name}'")
            seen_split[p] = name
            m.splits.setdefault(name, [])
            if p not in m.splits[name]:
                m.splits[name].append(p)
        elif kind == "seed":
            need(1, "<u64>")
            try:
                seed = int(args[0])
            except ValueError:
                raise ParseError(f"bad seed {args[0]!r}", lineno, "seed") from None
            if not 0 <= seed < 2**64:
                raise ParseError("seed must be an unsigned 64-bit integer", lineno, "seed")
            m.seed = seed
        elif kind == "config":
            need(2, "<key> <value>")
            key, value = args
            if key not in _CONFIG_KEYS:
                raise ParseError(f"unknown config key {key!r}", lineno, key)
            try:
                cfg[key] = _CONFIG_KEYS[key](value)
            except ValueError:
                raise ParseError(f"bad value {value!r} for {key}", lineno, key) from None
        else:
            raise ParseError(f"unknown entry {kind!r}", lineno, kind)

    try:
        m.config = SensorConfig(
            bit_depth=cfg.get("bit_depth", 12),
            exposure_ratio=cfg.get("ratio", 4.0),
            burst_length=cfg.get("burst", 4),
            gamma=cfg.get("gamma", 2.2),
            layout=ExposureLayout(cfg.get("layout", "column"), cfg.get("low_parity", 0)),
            alignment=cfg.get("alignment", "end"),
        )
        m.geometry = PatchGeometry(
            cfg.get("patch_height", 128), cfg.get("patch_width", 128), cfg.get("stride", cfg.get("patch_width", 128))
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if m.geometry.width % 2 or m.geometry.stride < 1 or m.geometry.height < 1:
        raise ParseError("patch width must be even and stride positive")
    m.t_stride = cfg.get("t_stride")
    if m.t_stride is not None and m.t_stride < 1:
        raise ParseError("t_stride must be positive")
    lin = cfg.get("linearize", "true").lower()
    if lin not in ("true", "false"):
        raise ParseError("linearize must be true or false")
    m.linearize_frames = lin == "true"

    for clip in m.clips:
        if not os.path.isdir(clip.directory):
            raise MissingPath(f"clip directory not found: {clip.directory}")
    for clean, dist in m.capture_pairs:
        for p in (clean, dist):
            if not os.path.exists(p):
                raise MissingPath(f"pair file not found: {p}")
    for p in m.calibration:
        if not os.path.exists(p):
            raise MissingPath(f"calibration file not found: {p}")
    for name, paths in m.splits.items():
        for p in paths:
            if not os.path.exists(p):
                raise MissingPath(f"split '{name}' file not found: {p}")
    return m


def clip_frame_paths(clip: ClipEntry) -> list:
    return sorted(glob.glob(os.path.join(clip.directory, clip.pattern)), key=_natural_key)


def load_frame_stack(clip: ClipEntry, gamma: float | None = 2.2) -> FrameStack:
    """Read a clip's frames; display-referred frames are linearized with ``gamma``."""
    paths = clip_frame_paths(clip)
    if not paths:
        raise MissingPath(f"no frames match {clip.pattern!r} in {clip.directory}")
    frames = []
    for p in paths:
        f = read_pfm(p)
        frames.append(linearize(np.clip(f, 0.0, 1.0), gamma) if gamma else f)
    return FrameStack(np.stack(frames), clip.fps)


# ---------------------------------------------------------------------------
# virtual sensor


@dataclass(frozen=True)
class VirtualSensorParams:
    """Parametric sensor used as a test oracle.

    Noise variance ``gain * s + read_noise`` and row offsets with standard
    deviation ``row_sigma`` are all in quantized units; ``s`` is the scaled
    clean signal in the same units.
    """

    gain: float = 0.0
    read_noise: float = 0.0
    row_sigma: float = 0.0
    ratio: float = 1.0
    bit_depth: int = 12
    layout: ExposureLayout = field(default_factory=ExposureLayout)


def virtual_sensor(clean, params: VirtualSensorParams, seed: int, image_id: int = 0) -> QuantizedReading:
    """Expose, add heteroscedastic and row noise, then quantize with clamping.

    High-exposure lines (per the layout) are scaled by ``ratio``.
    """
    img = as_image(clean, name="clean")
    m = (1 << params.bit_depth) - 1
    classes = exposure_map(img.shape[:2], params.layout)
    scale = np.where(classes == HIGH, params.ratio, 1.0)[:, :, None]
    s = np.minimum(img * scale, 1.0) * m
    key = rng.stream_key(seed, rng.STREAM_VIRTUAL, image_id)
    noisy = s
    if params.gain or params.read_noise:
        z = rng.normal(key, np.arange(img.size, dtype=np.uint64)).reshape(img.shape)
        noisy = s + np.sqrt(np.maximum(params.gain * s + params.read_noise, 0.0)) * z
    if params.row_sigma:
        h = img.shape[0]
        zr = rng.normal(key, np.arange(img.size, img.size + h, dtype=np.uint64))
        noisy = noisy + params.row_sigma * zr[:, None, None]
    x = np.clip(np.floor(noisy + 0.5), 0, m)
    return QuantizedReading(x.astype(np.uint16), params.bit_depth, params.layout)


# ---------------------------------------------------------------------------
# synthesis


@dataclass
class SynthesizedPair:
    clip: str
    t: int
    clean: np.ndarray  # mosaic of the sharp reference against its own exposure-scaled copy
    distorted: np.ndarray  # blur, pixel noise and row/column noise
    reference: np.ndarray  # full-resolution linear frame in low-exposure units
    image_id: int = 0


@dataclass
class SynthesisFailure:
    clip: str
    t: int | None
    error: str


def image_id_for(clip_index: int, t: int) -> int:
    return (clip_index << 32) | t


def window_starts(n_frames: int, config: SensorConfig, stride: int) -> list:
    return list(range(0, n_frames - config.burst_length + 1, stride))


def synthesize_item(
    stack: FrameStack,
    t: int,
    config: SensorConfig,
    pixel_model: PixelNoiseModel | None,
    rowcol_models=(),
    seed: int = DEFAULT_SEED,
    image_id: int = 0,
    clip: str = "",
) -> SynthesizedPair:
    """Run blur, pixel noise and row/column noise for one window."""
    reference = stack.frames[low_frame_index(t, config)]
    scaled = np.minimum(1.0, config.exposure_ratio * reference)
    clean = exposure_mosaic(reference, scaled, config)
    img = synthesize_mb_mosaic(stack, t, config)
    if pixel_model is not None:
        img = apply_pixel_noise(img, pixel_model, seed, layout=config.layout, image_id=image_id)
    for rc in rowcol_models:
        img = apply_rowcol_noise(img, rc, seed, layout=config.layout, image_id=image_id)
    return SynthesizedPair(clip, t, clean, img, reference, image_id)


def iter_jobs(manifest: DatasetManifest):
    """``(clip_index, clip, t)`` for every synthesis window, in manifest order."""
    for ci, clip in enumerate(manifest.clips):
        n = len(clip_frame_paths(clip))
        for t in window_starts(n, manifest.config, manifest.window_stride):
            yield ci, clip, t


def synthesize_dataset(
    manifest: DatasetManifest,
    pixel_model: PixelNoiseModel | None = None,
    rowcol_models=(),
    seed: int | None = None,
) -> Iterator:
    """Yield a :class:`SynthesizedPair` per window, or a :class:`SynthesisFailure`.

    A failing clip or window is reported and the stream moves on.
    """
    seed = manifest.seed if seed is None else seed
    gamma = manifest.config.gamma if manifest.linearize_frames else None
    for ci, clip in enumerate(manifest.clips):
        try:
            stack = load_frame_stack(clip, gamma)
        except (HDRDistortError, OSError) as exc:
            logger.warning("clip %s failed: %s", clip.name, exc)
            yield SynthesisFailure(clip.name, None, str(exc))
            continue
        for t in window_starts(len(stack), manifest.config, manifest.window_stride):
            try:
                yield synthesize_item(
                    stack, t, manifest.config, pixel_model, rowcol_models, seed, image_id_for(ci, t), clip.name
                )
            except (HDRDistortError, ValueError) as exc:
                logger.warning("clip %s t=%d failed: %s", clip.name, t, exc)
                yield SynthesisFailure(clip.name, t, str(exc))


# ---------------------------------------------------------------------------
# patches

CLAMP_EPS = 1e-6


@dataclass
class PatchPair:
    distorted: np.ndarray  # (ph, pw/2, 8)
    clean: np.ndarray  # (ph, pw, C)
    x: int
    y: int
    clip: str = ""
    t: int = 0


def pack_distorted(mosaic_patch: np.ndarray, ratio: float, layout: ExposureLayout = ExposureLayout()) -> np.ndarray:
    """Eight planes: low RGB, high RGB, high-clamp mask, constant ``1/ratio``."""
    pair = deinterleave_columns(mosaic_patch, layout)
    low, high = pair.low, pair.high
    if low.shape[2] != 3:
        raise ValueError("patch packing expects 3-channel images")
    mask = np.any(high >= 1.0 - CLAMP_EPS, axis=2, keepdims=True).astype(np.float64)
    const = np.full(mask.shape, 1.0 / ratio)
    return np.concatenate([low, high, mask, const], axis=2)


def unpack_distorted(packed: np.ndarray):
    """``(low, high, mask, ratio)`` from an 8-plane patch."""
    return packed[:, :, 0:3], packed[:, :, 3:6], packed[:, :, 6], 1.0 / float(packed[0, 0, 7])


def _positions(size: int, patch: int, stride: int, offset: int, step: int = 1) -> list:
    pos = list(range(offset, size - patch + 1, stride))
    if not pos or pos[-1] != size - patch:
        # one more patch flush with the far edge so the border is covered
        pos.append(size - patch)
    return sorted(set(p - p % step for p in pos))


def extract_patches(
    distorted,
    clean,
    geometry: PatchGeometry = PatchGeometry(),
    stride: int | None = None,
    seed: int | None = None,
    *,
    ratio: float = 4.0,
    layout: ExposureLayout = ExposureLayout(),
    clip: str = "",
    t: int = 0,
) -> list:
    """Cut aligned distorted/clean patches.

    ``seed`` jitters the grid origin within one stride; ``None`` anchors it at
    the top-left corner. Column origins stay even so the exposure phase is
    the same in every patch.
    """
    d = as_image(distorted, name="distorted")
    c = as_image(clean, name="clean")
    if d.shape[:2] != c.shape[:2]:
        raise PatchTooLarge(f"distorted {d.shape} and clean {c.shape} differ in size")
    h, w = d.shape[:2]
    ph, pw = geometry.height, geometry.width
    stride = stride or geometry.stride
    if ph > h or pw > w:
        raise PatchTooLarge(f"patch {ph}x{pw} does not fit image {h}x{w}")
    oy = ox = 0
    if seed is not None:
        key = rng.stream_key(seed, rng.STREAM_PATCH)
        u = rng.uniform(key, np.arange(2, dtype=np.uint64))
        oy = int(u[0] * min(stride, h - ph + 1))
        ox = int(u[1] * min(stride, w - pw + 1))
    step = 2 if layout.axis == "column" else 1
    ystep = 2 if layout.axis == "row" else 1
    patches = []
    for y in _positions(h, ph, stride, oy, ystep):
        for x in _positions(w, pw, stride, ox, step):
            dp = d[y : y + ph, x : x + pw]
            patches.append(PatchPair(pack_distorted(dp, ratio, layout), c[y : y + ph, x : x + pw].copy(), x, y, clip, t))
    return patches


def stack_planes(packed: np.ndarray) -> np.ndarray:
    """Planes stacked vertically into one grayscale image, plane 0 on top."""
    return np.concatenate([packed[:, :, k] for k in range(packed.shape[2])], axis=0)


def unstack_planes(stacked: np.ndarray, planes: int = 8) -> np.ndarray:
    s = np.asarray(stacked)
    if s.ndim == 3:
        s = s[:, :, 0]
    return np.stack(np.split(s, planes, axis=0), axis=2)


def patch_name(p: PatchPair) -> str:
    return f"{p.clip}_t{p.t:06d}_y{p.y:05d}_x{p.x:05d}"


def export_patches(patches, out_dir) -> list:
    """Write each patch as two PFM files and return their index lines.

    The distorted file holds the eight planes stacked vertically in a
    grayscale PFM; the clean file is a colour PFM. Values are stored as
    float32.
    """
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for p in patches:
        name = patch_name(p)
        d_name, c_name = f"{name}.distorted.pfm", f"{name}.clean.pfm"
        write_pfm(os.path.join(out_dir, d_name), stack_planes(p.distorted))
        write_pfm(os.path.join(out_dir, c_name), p.clean)
        lines.append(f"{d_name} {c_name} {p.x} {p.y} {p.clip} {p.t}")
    return lines


def write_index(path, lines) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in sorted(lines):
            f.write(line + "\n")


def read_index(path) -> list:
    """Parse an index file into ``(distorted, clean, x, y, clip, t)`` tuples."""
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ParseError("index lines need 6 fields", lineno)
            d, c, x, y, clip, t = parts
            rows.append((d, c, int(x), int(y), clip, int(t)))
    return rows

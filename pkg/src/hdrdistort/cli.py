"""Command-line entry point.

Exit codes: 0 success, 2 usage or input error, 3 insufficient data for a
model, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .blur import FrameStack
from .dataset import (
    DEFAULT_SEED,
    clip_frame_paths,
    export_patches,
    extract_patches,
    image_id_for,
    iter_jobs,
    load_manifest,
    synthesize_item,
    write_index,
)
from .errors import (
    EmptyModel,
    FormatError,
    HDRDistortError,
    InsufficientBins,
    ManifestError,
    TooFewReadings,
)
from .fileio import read_image, read_pfm, read_pgm16, write_pfm
from .fusion import FusionWeights, direct_fuse
from .imaging import EXPOSURE_NAMES, ExposureLayout, QuantizedReading, SensorConfig, gamma_encode, linearize
from .metrics import dssim, simulate_burst_fusion, variance_by_radiance
from .modelio import load_models, save_models
from .noise import (
    FixedPatternMap,
    accumulate_histograms,
    build_inverse_cumulative,
    build_tables,
    estimate_fixed_pattern,
    remove_fixed_pattern,
)
from .rowcol import RowColNoiseModel, accumulate_line_histograms

log = logging.getLogger("hdrdistort")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _map(fn, items, workers: int):
    """Ordered map, in-process for one worker, over a process pool otherwise."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# estimate


def _estimate_job(job):
    clean_path, dist_path, offsets, axis = job
    clean = read_pgm16(clean_path)
    dist = read_pgm16(dist_path)
    if offsets is not None:
        dist = remove_fixed_pattern(dist, FixedPatternMap(offsets))
    pair = [(clean, dist)]
    return accumulate_histograms(pair), accumulate_line_histograms(pair, axis)


def cmd_estimate(args) -> int:
    manifest = load_manifest(args.manifest)
    if not manifest.capture_pairs:
        raise CliError("manifest lists no capture pairs")
    offsets = None
    if len(manifest.calibration) >= 2:
        fpn = estimate_fixed_pattern([read_pgm16(p) for p in manifest.calibration])
        offsets = fpn.offsets
    elif manifest.calibration:
        raise CliError("fixed-pattern calibration needs at least 2 captures", EXIT_DATA)
    jobs = [(c, d, offsets, args.axis) for c, d in manifest.capture_pairs]
    parts = _map(_estimate_job, jobs, args.workers)
    pixel_h, line_h = parts[0]
    for p, l in parts[1:]:
        pixel_h = pixel_h.merge(p)
        line_h = line_h.merge(l)
    pixel = build_inverse_cumulative(pixel_h)
    rowcol = RowColNoiseModel(args.axis, line_h.bit_depth, line_h.channels, build_tables(line_h))
    save_models(args.out, pixel, [rowcol])
    for (c, e), n in sorted(pixel_h.observation_counts().items()):
        lines = line_h[c, e].total
        print(f"channel {c} {EXPOSURE_NAMES[e]}: {n} pixel observations, {lines} {args.axis} means")
    print(f"wrote {args.out} from {len(jobs)} pairs")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synthesize


def _synth_job(job):
    ci, clip, t, manifest, pixel, rowcol, seed, out_dir = job
    config = manifest.config
    paths = clip_frame_paths(clip)[t : t + config.burst_length]
    gamma = config.gamma if manifest.linearize_frames else None
    frames = []
    for p in paths:
        f = read_pfm(p)
        frames.append(linearize(np.clip(f, 0.0, 1.0), gamma) if gamma else f)
    stack = FrameStack(np.stack(frames), clip.fps)
    item = synthesize_item(stack, 0, config, pixel, rowcol, seed, image_id_for(ci, t), clip.name)
    patches = extract_patches(
        item.distorted,
        item.reference,
        manifest.geometry,
        ratio=config.exposure_ratio,
        layout=config.layout,
        clip=f"c{ci:03d}-{clip.name}",
        t=t,
    )
    return export_patches(patches, out_dir)


def _safe_synth_job(job):
    try:
        return _synth_job(job), None
    except (HDRDistortError, ValueError, OSError) as exc:
        return None, f"{job[1].name} t={job[2]}: {exc}"


def cmd_synthesize(args) -> int:
    manifest = load_manifest(args.manifest)
    if not os.path.exists(args.model):
        raise CliError(f"model file not found: {args.model}")
    pixel, rowcol = load_models(args.model)
    if pixel.bit_depth != manifest.config.bit_depth:
        raise CliError(f"model bit depth {pixel.bit_depth} differs from manifest {manifest.config.bit_depth}")
    seed = manifest.seed if args.seed is None else args.seed
    os.makedirs(args.out, exist_ok=True)
    jobs = [(ci, clip, t, manifest, pixel, rowcol, seed, args.out) for ci, clip, t in iter_jobs(manifest)]
    results = _map(_safe_synth_job, jobs, args.workers)
    lines, failures = [], []
    for res, err in results:
        if err:
            failures.append(err)
        else:
            lines.extend(res)
    for err in failures:
        print(f"failed: {err}", file=sys.stderr)
    write_index(os.path.join(args.out, "index.txt"), lines)
    print(f"synthesized {len(jobs) - len(failures)} windows, {len(lines)} patches, {len(failures)} failures")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fuse / evaluate / characterize


def _layout_from(args) -> ExposureLayout:
    return ExposureLayout(args.layout, args.low_parity)


def cmd_fuse(args) -> int:
    mosaic = read_image(args.input)
    config = SensorConfig(exposure_ratio=args.ratio, layout=_layout_from(args))
    hdr = direct_fuse(mosaic, config, FusionWeights(args.floor, args.ceiling))
    write_pfm(args.out, hdr)
    return EXIT_OK


def _eval_pair(pred, ref, gamma):
    a, b = read_image(pred), read_image(ref)
    if gamma:
        a, b = gamma_encode(a, gamma), gamma_encode(b, gamma)
    return dssim(a, b)


def cmd_evaluate(args) -> int:
    fmt = f"{{:.{args.digits}f}}"
    if os.path.isdir(args.pred):
        names = sorted(
            n for n in os.listdir(args.pred) if n.lower().endswith((".pfm", ".pgm", ".ppm"))
        )
        if not names:
            raise CliError(f"no images in {args.pred}")
        scores = []
        for n in names:
            ref = os.path.join(args.ref, n)
            if not os.path.exists(ref):
                raise CliError(f"reference missing for {n}")
            s = _eval_pair(os.path.join(args.pred, n), ref, args.gamma)
            scores.append(s)
            print(f"{n} {fmt.format(s)}")
        print(f"mean {fmt.format(float(np.mean(scores)))}")
    else:
        print(fmt.format(_eval_pair(args.pred, args.ref, args.gamma)))
    return EXIT_OK


def cmd_characterize(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.readings, "*.pgm")) + glob.glob(os.path.join(args.readings, "*.ppm")))
    readings = [read_pgm16(p) for p in paths]
    if len(readings) < 2:
        raise CliError(f"need at least 2 readings in {args.readings}, found {len(readings)}", EXIT_DATA)
    if args.reference:
        reference = read_pgm16(args.reference)
    else:
        mean = np.mean([r.data.astype(np.float64) for r in readings], axis=0)
        reference = QuantizedReading(np.floor(mean + 0.5).astype(np.uint16), readings[0].bit_depth)
    series = readings
    if args.burst:
        series = simulate_burst_fusion(readings, n_tuples=args.tuples, seed=args.seed)
    curve = variance_by_radiance(series, reference, args.mode, ratio=args.ratio, center=args.center)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(curve.to_text())
    print(f"wrote {int(curve.defined.sum())} levels to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdrdistort", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate pixel and row/column noise models")
    e.add_argument("--manifest", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--axis", choices=("row", "column"), default="row")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("synthesize", help="synthesize distorted/clean patches")
    s.add_argument("--manifest", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=None, help=f"overrides the manifest seed (default {DEFAULT_SEED})")
    s.set_defaults(func=cmd_synthesize)

    f = sub.add_parser("fuse", help="direct HDR fusion of a mosaic")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--ratio", type=float, default=4.0)
    f.add_argument("--out", required=True)
    f.add_argument("--layout", choices=("column", "row"), default="column")
    f.add_argument("--low-parity", type=int, choices=(0, 1), default=0)
    f.add_argument("--floor", type=float, default=0.02)
    f.add_argument("--ceiling", type=float, default=0.98)
    f.set_defaults(func=cmd_fuse)

    v = sub.add_parser("evaluate", help="DSSIM between prediction and reference")
    v.add_argument("--pred", required=True)
    v.add_argument("--ref", required=True)
    v.add_argument("--gamma", type=float, default=None, help="gamma-encode both images first")
    v.add_argument("--digits", type=int, default=4)
    v.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("characterize", help="variance against radiance for a static burst")
    c.add_argument("--readings", required=True)
    c.add_argument("--mode", choices=("low", "high"), required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--reference", default=None)
    c.add_argument("--ratio", type=float, default=4.0)
    c.add_argument("--burst", action="store_true", help="average random 4-tuples first")
    c.add_argument("--tuples", type=int, default=None)
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--center", choices=("mean", "reference"), default="mean")
    c.set_defaults(func=cmd_characterize)
    return p


def _check_inputs(args):
    for attr in ("manifest", "input", "pred", "ref", "readings", "reference"):
        path = getattr(args, attr, None)
        if path and not os.path.exists(path):
            raise CliError(f"--{attr} path not found: {path}")
    if args.workers < 1:
        raise CliError("--workers must be >= 1")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        _check_inputs(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except EmptyModel as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TooFewReadings, InsufficientBins) as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ManifestError, FormatError, HDRDistortError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

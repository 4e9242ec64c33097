"""Learned spatio-temporal distortion models for dual-exposure HDR sensors.

Estimate non-parametric pixel and row/column noise models from a few paired
sensor captures, synthesize distorted/clean training pairs from high-speed
LDR video, and evaluate against a direct HDR fusion baseline.
"""

from .blur import FrameStack, simulate_high_frame, simulate_low_frame, synthesize_mb_mosaic
from .dataset import (
    DatasetManifest,
    PatchGeometry,
    PatchPair,
    VirtualSensorParams,
    extract_patches,
    load_manifest,
    synthesize_dataset,
    virtual_sensor,
)
from .errors import *  # noqa: F401,F403
from .fileio import read_pfm, read_pgm16, write_pfm, write_pgm16
from .fusion import FusionWeights, bicubic_upsample_width2x, direct_fuse, ground_truth_average
from .imaging import (
    HIGH,
    LOW,
    ExposureLayout,
    ExposurePair,
    QuantizedReading,
    SensorConfig,
    deinterleave_columns,
    dequantize,
    interleave_columns,
    linearize,
    quantize,
)
from .metrics import (
    HetGaussFit,
    VarianceCurve,
    dssim,
    fit_hetgauss,
    normalize_exposures,
    simulate_burst_fusion,
    variance_by_radiance,
)
from .modelio import load_models, save_models
from .noise import (
    ConditionalHistogram,
    FixedPatternMap,
    PixelNoiseModel,
    accumulate_histograms,
    apply_pixel_noise,
    build_inverse_cumulative,
    estimate_fixed_pattern,
    remove_fixed_pattern,
    sample_pixel,
)
from .rowcol import RowColNoiseModel, apply_rowcol_noise, estimate_rowcol_model

__version__ = "0.1.0"

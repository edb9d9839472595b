"""Film grain toolchain: analysis, parameter coding, synthesis, metrics."""

from .frame_io import VideoFormat, Frame, read_y4m, write_y4m, read_raw, write_raw
from .sei import (
    FgcParams,
    IntervalModel,
    Interval,
    encode_sei,
    decode_sei,
    validate,
    read_sidecar,
    write_sidecar,
)
from .patterns import GrainPatternDb, build_database, cutoff_index, load_database, save_database
from .synthesis import (
    SynthesisConfig,
    BlendReport,
    select_interval,
    grain_block,
    scale_and_shift,
    deblock_grain,
    blend_frame,
    synthesize_sequence,
)
from .analysis import (
    DenoiseConfig,
    AnalysisConfig,
    VariancePoints,
    temporal_denoise,
    mask_flat_regions,
    extract_residual,
    measure_variance,
    fit_and_quantize,
    analyze_sequence,
)
from .metrics import MetricReport, psnr, sequence_psnr, grain_sigma

__version__ = "0.1.0"

__all__ = [
    "VideoFormat",
    "Frame",
    "read_y4m",
    "write_y4m",
    "read_raw",
    "write_raw",
    "FgcParams",
    "IntervalModel",
    "Interval",
    "encode_sei",
    "decode_sei",
    "validate",
    "read_sidecar",
    "write_sidecar",
    "GrainPatternDb",
    "build_database",
    "cutoff_index",
    "load_database",
    "save_database",
    "SynthesisConfig",
    "BlendReport",
    "select_interval",
    "grain_block",
    "scale_and_shift",
    "deblock_grain",
    "blend_frame",
    "synthesize_sequence",
    "DenoiseConfig",
    "AnalysisConfig",
    "VariancePoints",
    "temporal_denoise",
    "mask_flat_regions",
    "extract_residual",
    "measure_variance",
    "fit_and_quantize",
    "analyze_sequence",
    "MetricReport",
    "psnr",
    "sequence_psnr",
    "grain_sigma",
    "__version__",
]

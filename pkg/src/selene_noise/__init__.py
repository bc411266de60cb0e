"""selene-noise: compression-noise characterization for stereo disparity
mapping of planetary terrain imagery.

The package simulates the lossy stage of an onboard JPEG-style codec,
synthesizes ground-truth stereo pairs from fractal terrain, matches them
with a sub-pixel correlation matcher, and quantifies the disparity noise the
codec introduces — plus baseline estimators for removing it and a dataset
exporter for training learned estimators externally.
"""

from .codec import (
    SF008S_A,
    QuantTable,
    builtin_table,
    compress_image,
    compression_residual,
    dct8_forward,
    dct8_inverse,
    dequantize,
    load_quant_table,
    quantize,
    resolve_table,
)
from .core import (
    DisparityMap,
    ImageGrid,
    ResidualField,
    SummaryStats,
    read_disparity,
    read_float_raster,
    read_raster,
    summary_stats,
    write_disparity,
    write_float_raster,
    write_raster,
)
from .dataset import (
    PatchRecord,
    PatchSet,
    export_dataset,
    extract_patches,
    split_dataset,
    split_labels,
)
from .denoiser import (
    ElevationModel,
    apply_correction,
    elevation_error,
    gaussian_kernel,
    import_residual_estimate,
    lpf_residual_estimate,
    masked_gaussian_blur,
    null_residual_estimate,
)
from .errors import ContractError, FormatError, SampleRangeError, SeleneNoiseError
from .matcher import MatcherConfig, match_disparity, refine_subpixel
from .residual import (
    AgreementMetrics,
    NormalityDiagnostics,
    agreement,
    agreement_from_arrays,
    disparity_residual,
    normality_diagnostics,
)
from .sweep import (
    EvalReport,
    MethodRow,
    NoiseRow,
    OverallRow,
    SweepConfig,
    render_report,
    run_estimator_eval,
    run_noise_sweep,
)
from .synth import (
    TerrainParams,
    generate_terrain,
    make_shifted_pair,
    power_law_field,
    scale_dn,
    warp_by_disparity,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementMetrics",
    "ContractError",
    "DisparityMap",
    "ElevationModel",
    "EvalReport",
    "FormatError",
    "ImageGrid",
    "MatcherConfig",
    "MethodRow",
    "NoiseRow",
    "NormalityDiagnostics",
    "OverallRow",
    "PatchRecord",
    "PatchSet",
    "QuantTable",
    "ResidualField",
    "SF008S_A",
    "SampleRangeError",
    "SeleneNoiseError",
    "SummaryStats",
    "SweepConfig",
    "TerrainParams",
    "agreement",
    "agreement_from_arrays",
    "apply_correction",
    "builtin_table",
    "compress_image",
    "compression_residual",
    "dct8_forward",
    "dct8_inverse",
    "dequantize",
    "disparity_residual",
    "elevation_error",
    "export_dataset",
    "extract_patches",
    "gaussian_kernel",
    "generate_terrain",
    "import_residual_estimate",
    "load_quant_table",
    "lpf_residual_estimate",
    "make_shifted_pair",
    "masked_gaussian_blur",
    "match_disparity",
    "normality_diagnostics",
    "null_residual_estimate",
    "power_law_field",
    "quantize",
    "read_disparity",
    "read_float_raster",
    "read_raster",
    "refine_subpixel",
    "render_report",
    "resolve_table",
    "run_estimator_eval",
    "run_noise_sweep",
    "scale_dn",
    "split_dataset",
    "split_labels",
    "summary_stats",
    "warp_by_disparity",
    "write_disparity",
    "write_float_raster",
    "write_raster",
]

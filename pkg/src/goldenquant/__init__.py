"""Golden-angle spiral quantizers for the circularly-symmetric complex Gaussian source."""

__version__ = "0.1.0"

from .codebook import (
    GOLDEN_FRACTION,
    Codebook,
    Scheme,
    SourceModel,
    golden_angle,
    load_codebook,
    quantize,
    quantize_batch,
    save_codebook,
    spiral_centroids,
)
from .evaluation import (
    CellStats,
    DistortionReport,
    cell_statistics,
    empirical_entropy,
    mc_distortion,
    papr,
    rd_reference,
)
from .highrate import (
    EntropyModel,
    HighRateDesign,
    RadiusConvention,
    analytic_distortion_hr,
    analytic_entropy_echr,
    analytic_rate_echr,
    analytic_rate_hr,
    build_highrate,
    entropy_model,
    highrate_radius,
    rd_rate,
)
from .lloydmax import Init, LloydMaxState, lm_objective, lm_update, optimize_lloydmax
from .quadrature import QuadratureGrid

__all__ = [
    "GOLDEN_FRACTION", "Codebook", "Scheme", "SourceModel", "golden_angle", "load_codebook",
    "quantize", "quantize_batch", "save_codebook", "spiral_centroids",
    "CellStats", "DistortionReport", "cell_statistics", "empirical_entropy", "mc_distortion",
    "papr", "rd_reference",
    "EntropyModel", "HighRateDesign", "RadiusConvention", "analytic_distortion_hr",
    "analytic_entropy_echr", "analytic_rate_echr", "analytic_rate_hr", "build_highrate",
    "entropy_model", "highrate_radius", "rd_rate",
    "Init", "LloydMaxState", "lm_objective", "lm_update", "optimize_lloydmax", "QuadratureGrid",
]

"""Testing and verification toolkit for masked bipartite Gaussian threshold graphs.

Modules: gaussmodel (calibration and sampling), signedstats (test statistics
and power), fourierweights (signed pattern weights and their expansion),
divergenceoracle (small-matrix distribution cross-checks), sweep (grid
experiments), matio (file formats), cli (command line).
"""

__version__ = "0.1.0"

from .gaussmodel import (
    Calibration,
    ModelParams,
    calibrate,
    compute_tau,
    inner_product_cdf,
    reference_variance,
    sample_er,
    sample_latents,
    sample_observation,
    sample_rgg,
    sample_unknown_mask_model,
)
from .signedstats import (
    STATISTICS,
    TestReport,
    calibrate_null,
    estimate_power,
    evaluate_statistic,
    masked_signed_four_cycles,
    masked_signed_wedges,
    run_test,
    signed_four_cycles,
    signed_wedges,
)
from .sweep import SweepConfig, SweepResult, run_sweep

__all__ = [
    "__version__",
    "Calibration",
    "ModelParams",
    "calibrate",
    "compute_tau",
    "inner_product_cdf",
    "reference_variance",
    "sample_er",
    "sample_latents",
    "sample_observation",
    "sample_rgg",
    "sample_unknown_mask_model",
    "STATISTICS",
    "TestReport",
    "calibrate_null",
    "estimate_power",
    "evaluate_statistic",
    "masked_signed_four_cycles",
    "masked_signed_wedges",
    "run_test",
    "signed_four_cycles",
    "signed_wedges",
    "SweepConfig",
    "SweepResult",
    "run_sweep",
]

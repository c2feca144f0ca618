"""Desk-scale simulator and analysis toolkit for nonlocal double-slit
interference with pseudothermal light.

Monte Carlo speckle ensembles are propagated through two spatially
separated partial apertures whose product forms a double slit; the
normalized intensity correlation g2(x1, x2) between the detector planes
carries the fringe that neither singles profile shows. Closed-form and
quadrature oracles validate the engine, and a nonlinear fitter recovers
the slit geometry from g2 slices.
"""

from .analytic import (
    CoherenceValue,
    FringeMetrics,
    SourceSpec,
    double_slit_transform,
    fringe_metrics,
    g2_model,
    g2_model_curve,
    mean_intensity,
    mean_intensity_quadrature,
    mutual_coherence,
    mutual_coherence_quadrature,
    sinc,
)
from .core import (
    ApertureProfile,
    ApertureShape,
    ComplexField,
    DoubleSlitSpec,
    ExperimentLayout,
    SpatialGrid,
    canonical_aperture_pair,
    sample_double_slit,
)
from .engine import (
    FrameRecord,
    Scenario,
    apply_mask,
    derive_frame_rng,
    fresnel_propagate,
    run_ensemble,
    sample_source_field,
    simulate_frame,
)
from .errors import (
    ArmSymmetryError,
    BroadbandLimitError,
    ConfigError,
    GhostFringeError,
    GridMismatchError,
    GridResolutionError,
    InputDataError,
    NumericValidityError,
    RankDeficiencyError,
    SamplingBoundError,
    UndefinedCorrelationError,
)
from .fitting import FringeFitResult, FringeModelParams, fit, fringe_model, seed_fit
from .stats import CorrelationAccumulator, G2Slice, SiegertReport, g2_slice, merge, siegert_check

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "SpatialGrid", "ComplexField", "ExperimentLayout", "DoubleSlitSpec",
    "ApertureShape", "ApertureProfile", "sample_double_slit", "canonical_aperture_pair",
    # analytic
    "SourceSpec", "CoherenceValue", "FringeMetrics", "sinc", "double_slit_transform",
    "mean_intensity", "mutual_coherence", "g2_model", "g2_model_curve", "fringe_metrics",
    "mutual_coherence_quadrature", "mean_intensity_quadrature",
    # engine
    "Scenario", "FrameRecord", "derive_frame_rng", "sample_source_field",
    "fresnel_propagate", "apply_mask", "simulate_frame", "run_ensemble",
    # stats
    "CorrelationAccumulator", "G2Slice", "SiegertReport", "merge", "g2_slice", "siegert_check",
    # fitting
    "FringeModelParams", "FringeFitResult", "fringe_model", "seed_fit", "fit",
    # errors
    "GhostFringeError", "ConfigError", "InputDataError", "NumericValidityError",
    "GridResolutionError", "SamplingBoundError", "GridMismatchError", "BroadbandLimitError",
    "ArmSymmetryError", "UndefinedCorrelationError", "RankDeficiencyError",
]

"""Scene-based nonuniformity correction from homography-shifted image sequences."""

from .errors import (
    ConfigurationError,
    DegeneratePointError,
    DivergenceError,
    EmptyOverlapError,
    EvaluationError,
    IllConditionedRegistrationError,
    InsufficientOverlapError,
    InternalCheckError,
    InvalidTransformError,
    NormalizationError,
    NucError,
    RegistrationFailureError,
)
from .grid import (
    ConvPlan,
    Homography,
    ImageGrid,
    MomentFields,
    Psf,
    VisibilityMask,
    WarpPlan,
    convolve,
    convolve_adjoint,
    masked_dot,
    masked_moments,
    warp,
    warp_adjoint,
)

__all__ = [
    "ConfigurationError",
    "ConvPlan",
    "DegeneratePointError",
    "DivergenceError",
    "EmptyOverlapError",
    "EvaluationError",
    "Homography",
    "IllConditionedRegistrationError",
    "ImageGrid",
    "InsufficientOverlapError",
    "InternalCheckError",
    "InvalidTransformError",
    "MomentFields",
    "NormalizationError",
    "NucError",
    "Psf",
    "RegistrationFailureError",
    "VisibilityMask",
    "WarpPlan",
    "convolve",
    "convolve_adjoint",
    "masked_dot",
    "masked_moments",
    "warp",
    "warp_adjoint",
]

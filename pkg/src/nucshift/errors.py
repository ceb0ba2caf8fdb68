"""Exception hierarchy shared by all nucshift modules."""


class NucError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(NucError):
    """Inconsistent or out-of-range configuration values."""


class InvalidTransformError(NucError):
    """Homography is singular or otherwise unusable as a warp."""


class EmptyOverlapError(NucError):
    """A warp or pairing produced no valid pixels."""


class RegistrationFailureError(NucError):
    """Template matching could not find a usable shift."""


class InsufficientOverlapError(NucError):
    """Too few valid interior pixels to run Gauss-Newton registration."""


class IllConditionedRegistrationError(NucError):
    """Normal matrix of the registration step is numerically singular."""


class DegeneratePointError(NucError):
    """Projective denominator vanished at a requested point."""


class EvaluationError(NucError):
    """Metric requested on an empty or degenerate pixel set."""


class NormalizationError(NucError):
    """Gain/offset normalization impossible (e.g. non-positive gain mean)."""


class DivergenceError(NucError):
    """Solver produced a non-finite objective."""


class InternalCheckError(NucError):
    """A self-consistency check (e.g. operator/adjoint probe) failed."""

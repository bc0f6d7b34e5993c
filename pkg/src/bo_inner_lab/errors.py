"""Exception types shared across the package."""


class NotPositiveDefiniteError(RuntimeError):
    """Covariance matrix stayed indefinite after the full jitter ladder."""


class DimensionTooLargeError(ValueError):
    """Requested Sobol dimension exceeds the built-in direction-number table."""


class InfeasibleGeometryError(RuntimeError):
    """Multimodal test-function regions could not be placed disjointly."""


class UnequalRunCountsError(ValueError):
    """Subset-mean identities require equal run counts per dataset."""


class ZeroVarianceError(ValueError):
    """Paired differences are identically zero; the t statistic is undefined."""


class InnerSolverFailureError(RuntimeError):
    """Inner solver returned a non-finite candidate or value."""


class ConfigError(ValueError):
    """Invalid case-study configuration; message carries the field path."""

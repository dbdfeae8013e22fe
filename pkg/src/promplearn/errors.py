"""Exception types shared across the package."""


class PrompLearnError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PrompLearnError):
    """A configuration value is outside its valid domain."""


class DegenerateTrajectory(PrompLearnError):
    """Trajectory has fewer than two samples and carries no shape."""


class NonMonotoneTime(PrompLearnError):
    """Timestamps are not strictly increasing."""


class SingularCovariance(PrompLearnError):
    """Covariance stayed non-invertible after the jitter escalation policy."""


class InsufficientDemos(PrompLearnError):
    """A batch estimator needs more demonstrations than it was given."""


class InvalidPrior(PrompLearnError):
    """Normal-inverse-Wishart hyperparameters out of their valid domain."""


class InvalidCount(PrompLearnError):
    """A requested sample count is not a positive integer."""


class InvalidSplit(PrompLearnError):
    """A dataset split does not leave both subsets non-empty."""


class DegenerateReference(PrompLearnError):
    """Reference quantity has zero norm, relative error undefined."""


class FileFormatError(PrompLearnError):
    """A persisted file violates its schema."""

"""Exception types shared across the package."""


class HillcarError(Exception):
    """Base class for all package errors."""


class ConfigError(HillcarError):
    """A run configuration violates an invariant or cannot be parsed."""


class EpisodeFinished(HillcarError):
    """step() was called after the episode terminated; harness logic bug."""


class OutOfTrack(HillcarError):
    """Track geometry queried outside the physical rail."""


class NonFinite(HillcarError):
    """A numeric update produced NaN or infinity; parameters are mis-tuned."""


class CovarianceCollapse(HillcarError):
    """Estimator covariance lost positive definiteness."""


class IndexOutOfRange(HillcarError):
    """A feature index does not fit the weight table; coder/table mismatch."""


class OutputUnwritable(HillcarError):
    """Run artifacts could not be persisted."""


class IllegalTransition(HillcarError):
    """Requested lifecycle transition is not in the transition table."""


class UnknownRun(HillcarError):
    """No run with the requested id."""


class RigBusy(HillcarError):
    """A run is already active; only one may drive the rig at a time."""

"""Exception hierarchy for accelode."""


class AccelodeError(Exception):
    """Base class for all accelode errors."""


class StepSizeUnderflow(AccelodeError):
    """Adaptive integrator cannot meet the tolerance; the problem is
    likely stiff or the solution blows up."""


class NonFiniteState(AccelodeError):
    """The integrated state left the representable range."""


class UnknownModel(AccelodeError, KeyError):
    """Requested model name is not in the catalog."""


class SingularLocalDesign(AccelodeError):
    """Too few points carry kernel weight at some evaluation point, or
    the local design is numerically singular (bandwidth too small)."""


class SingularNormalMatrix(AccelodeError):
    """The normal matrix of the integral estimator is numerically
    singular (unidentifiable design or degenerate smoothing)."""


class OptimizerDiverged(AccelodeError):
    """Derivative-free minimization failed within its iteration budget."""


class SingularJacobian(AccelodeError):
    """The Newton Jacobian of the estimating function is singular or
    too ill-conditioned to invert."""


class NonFiniteUpdate(AccelodeError):
    """The one-step update produced non-finite parameter components."""


class SingularFisher(AccelodeError):
    """The Fisher information matrix could not be inverted."""


class DimensionMismatch(AccelodeError, ValueError):
    """Data dimensions do not match the model."""


class AllBandwidthsFailed(AccelodeError):
    """No bandwidth in the candidate set completed the pipeline."""


class MaxIterationsExceeded(AccelodeError):
    """Levenberg-Marquardt hit the iteration budget without converging.

    Carries the best iterate found so far in ``report``."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class StudyAborted(AccelodeError):
    """More than the tolerated fraction of Monte Carlo replications
    failed."""


class ConfigError(AccelodeError, ValueError):
    """A configuration or data file failed to parse or validate."""

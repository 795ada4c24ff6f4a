"""Exception hierarchy shared by all atomkernel modules."""


class AtomKernelError(Exception):
    """Base class for all library errors."""


class VariantMismatchError(AtomKernelError, ValueError):
    """Points, measures or spaces of different domain variants were combined."""


class SeparationUndefinedError(AtomKernelError, ValueError):
    """Minimum separation requested for fewer than two points."""


class ParameterError(AtomKernelError, ValueError):
    """A model parameter is outside its admissible range."""


class SeparationTooSmallError(AtomKernelError):
    """The certificate interpolation system is singular or ill-conditioned."""


class SeparationConditionViolated(AtomKernelError):
    """The Bargmann separation quantity is too large for a Neumann-series solve."""


class GridTooCoarseError(AtomKernelError, ValueError):
    """A validation grid does not resolve the near regions."""


class InfeasibleError(AtomKernelError):
    """The noise level is smaller than the distance from the data to the model range."""


class ThetaEmptyError(AtomKernelError):
    """No admissible interpolating measurement was found for a sampled sign pattern."""

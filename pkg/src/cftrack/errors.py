"""Exception taxonomy shared by all cftrack modules.

The CLI maps these classes onto distinct exit codes, so raise the most
specific type that applies.
"""


class CftrackError(Exception):
    """Base class for all library errors."""


class InvalidDimensionError(CftrackError):
    """Plane/feature-map dimensions are empty, mismatched, or not divisible."""


class SymmetryViolationError(CftrackError):
    """A spectrum handed to the inverse transform is not the spectrum of a
    real plane (imaginary residue above tolerance)."""


class OracleScaleError(CftrackError):
    """A dense-materialization helper was called beyond its size guard."""


class ConditioningError(CftrackError):
    """A spectral denominator is too close to zero to divide through."""


class DegenerateKernelError(CftrackError):
    """A kernel-weight denominator collapsed below its floor."""


class UnsupportedFeatureError(CftrackError):
    """The requested feature pathway does not apply to this input."""


class UnsupportedConfigError(CftrackError):
    """A configuration outside the implemented envelope (e.g. kernel counts
    other than the supported ones for the simplex weight step)."""


class OutOfFrameError(CftrackError):
    """A bounding box does not intersect the frame it refers to."""


class SequenceError(CftrackError):
    """A sequence source is unreadable or internally inconsistent."""


class PreconditionError(CftrackError):
    """A diagnostic was invoked on an instance violating one of its stated
    hypotheses; the message names the violated hypothesis."""


class NumericalError(CftrackError):
    """Non-finite intermediates or a violated numerical post-condition."""

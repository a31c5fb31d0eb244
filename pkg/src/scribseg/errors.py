"""Exception types shared across the toolkit.

Every failure mode callers are expected to branch on gets its own class;
messages carry the offending values so CLI reports stay actionable.
"""


class ScribsegError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(ScribsegError, ValueError):
    """An argument violates a documented precondition."""


class DimensionMismatchError(InvalidArgumentError):
    """Two grids that must share dims do not."""


class NonFiniteValueError(InvalidArgumentError):
    """A constructor received NaN or infinity."""


class EmptyForegroundError(InvalidArgumentError):
    """A scribble mask has no foreground strokes."""


class EmptyBackgroundError(InvalidArgumentError):
    """A scribble mask has no background strokes."""


class EmptySupervisionError(InvalidArgumentError):
    """A loss over labeled pixels was asked to average over none."""


class EmptyGroundTruthError(InvalidArgumentError):
    """A metric with undefined recall met an all-zero ground truth."""


class DegenerateFeaturesError(InvalidArgumentError):
    """Every feature vector in a field has (near-)zero norm."""


class IsolatedNodeError(ScribsegError):
    """The similarity graph has a node with zero total affinity."""


class GenerationError(ScribsegError):
    """A synthetic scene could not be realized within its spec."""


class TrainingError(ScribsegError):
    """Training aborted; message names the step and offending term."""


class FormatError(ScribsegError):
    """A binary or text artifact does not follow its documented layout."""


class BadMagicError(FormatError):
    """Feature or parameter container with a wrong magic string."""


class VersionMismatchError(FormatError):
    """Container version this reader does not understand."""


class TruncatedPayloadError(FormatError):
    """Container payload shorter or longer than its header promises."""


class MaskValueError(FormatError):
    """A mask file holds a value outside the documented convention."""


class ConfigError(ScribsegError):
    """A key=value config file could not be parsed or validated."""

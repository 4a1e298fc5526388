"""Exception types shared across the toolkit."""


class VesselkitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(VesselkitError):
    """A file violates its declared format; the message names the field."""


class UnsupportedFormatError(VesselkitError):
    """The file is structurally valid but uses an unsupported variant."""


class ParameterError(VesselkitError):
    """An argument is outside its documented range."""


class DegenerateOutputError(VesselkitError):
    """The requested operation would produce an empty or collapsed result."""


class ConsistencyError(VesselkitError):
    """Two inputs that must describe the same object disagree."""


class EmptyClassError(VesselkitError):
    """A mixture class lost all its membership mass."""


class InsufficientScalesError(VesselkitError):
    """Too few usable box sizes for a stable box-counting fit."""


class UndefinedTortuosityError(VesselkitError):
    """Tortuosity is undefined for a closed (start == end) path."""


class IncompleteLandmarkError(VesselkitError):
    """Mandatory landmark labels are missing; carries the missing names."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__("missing mandatory landmarks: " + ", ".join(self.missing))


class AmbiguousSegmentError(VesselkitError):
    """Two landmark pairs resolved to the same trace."""


class UnknownLabelError(VesselkitError):
    """A landmark label is not canonical or references a missing node."""


class GraphEditError(VesselkitError):
    """An edit referenced a trace or node that does not exist."""


class OutOfBoundsError(VesselkitError):
    """Geometry leaves the volume grid; carries the first offending index."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class StageFailure(VesselkitError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")

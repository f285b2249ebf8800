"""Exception hierarchy.

Every error raised for bad input derives from :class:`AtomfuseError`, which
the CLI maps to exit status 1.
"""


class AtomfuseError(ValueError):
    """Base class for input and validation errors."""


class TaxonomyError(AtomfuseError):
    pass


class FormatError(AtomfuseError):
    """A file does not follow its declared format."""


class AlignmentError(AtomfuseError):
    """Score and label matrices disagree on clips or classes."""


class WeightsError(AtomfuseError):
    pass


class ShapeError(AtomfuseError):
    """A tensor has a shape inconsistent with the rest of the model."""

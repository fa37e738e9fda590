"""Exception hierarchy.

Data problems (bad files, wrong shapes, too few samples) derive from
``DataError``; failures of the numerical routines derive from
``NumericalError``. The CLI maps the two families onto distinct exit codes.
"""


class SpectroError(Exception):
    """Base class for all package errors."""


class DataError(SpectroError):
    pass


class NumericalError(SpectroError):
    pass


class FormatError(DataError):
    """Malformed file contents (bad RIFF header, bad grid container...)."""


class UnsupportedFormatError(FormatError):
    """Well-formed file using an encoding we do not read."""


class TooShortError(DataError):
    pass


class ShapeError(DataError, ValueError):
    pass


class InsufficientSampleError(DataError):
    pass


class StaleArtifactError(DataError):
    """Persisted artifact was produced under a different configuration."""


class DegenerateError(NumericalError):
    """Zero trace, empty kept eigenspace, zero GCV denominator and similar."""

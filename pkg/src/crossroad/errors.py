"""Exception hierarchy for the route-prediction pipeline."""


class CrossroadError(Exception):
    """Base class for every error raised by crossroad."""


class InvalidReadingError(CrossroadError, ValueError):
    """A radar frequency reading cannot be turned into a velocity."""


class InvalidParameterError(CrossroadError, ValueError):
    """A numeric parameter is outside its allowed range."""


class CharsetError(CrossroadError, ValueError):
    """Plate text contains a character outside A-Z and 0-9."""


class SegmentationError(CrossroadError, ValueError):
    """A plate image cannot be cut into fixed-stride glyph cells."""


class ParseError(CrossroadError, ValueError):
    """A data file is malformed.

    Attributes:
        line: 1-based line number of the offending line, if known.
    """

    def __init__(self, message: str, line: int | None = None) -> None:
        """Initialize the error.

        Args:
            message: What is wrong.
            line: 1-based line number, prefixed to the message when given.
        """
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateKeyError(ParseError):
    """A keyed data file repeats a key."""


class DegenerateDatasetError(CrossroadError, ValueError):
    """A dataset lacks the classes a learner needs."""


class InvalidInputError(CrossroadError, ValueError):
    """Arguments are inconsistent with each other (e.g. length mismatch)."""


class ConfigurationError(CrossroadError, RuntimeError):
    """A required component was not configured."""

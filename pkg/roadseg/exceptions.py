"""Exception hierarchy shared by every roadseg module."""

from typing import Any, Optional

class MemlaneError(Exception):

    """Base class for every error raised by the road segmentation stack."""

class ShapeError(MemlaneError, ValueError):

    """A tensor or container had the wrong dimensions."""

class ArgumentError(MemlaneError, ValueError):

    """An argument was outside its documented domain."""

class NumericalError(MemlaneError, ArithmeticError):

    """A forward op produced NaN or Inf from finite inputs."""

class GenerationError(MemlaneError):

    """The scene generator could not satisfy the sample invariants."""

    def __init__(self, message: str, params: Any = None, sequence_index: Optional[int] = None) -> None:

        super().__init__(message)
        self.params = params
        self.sequence_index = sequence_index

class FormatError(MemlaneError, ValueError):

    """A persisted file did not match its byte layout."""

class BadMagicError(FormatError):

    pass

class VersionMismatchError(FormatError):

    pass

class TruncatedFileError(FormatError):

    pass

class UnknownParameterError(FormatError):

    pass

class MissingParameterError(FormatError):

    pass

class RunConfigError(MemlaneError, ValueError):

    """A command flag or config file entry could not be used."""

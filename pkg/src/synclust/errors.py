"""Exception hierarchy shared by the toolkit."""


class SynclustError(Exception):
    """Base class for all errors raised by synclust."""


class InvalidInputError(SynclustError, ValueError):
    """Bad argument: wrong dimension, nonpositive radius, unknown cell, ..."""


class ParseError(SynclustError):
    """A data file could not be read or parsed."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class GenerationError(SynclustError):
    """A synthetic dataset spec cannot be realised."""


class IndexCorruptionError(SynclustError, RuntimeError):
    """Grid index disagrees with the positions it is supposed to track."""


class NumericOverflowError(SynclustError, ArithmeticError):
    """A synchronization step produced a non-finite coordinate."""

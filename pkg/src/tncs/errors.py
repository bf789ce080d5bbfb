"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the CLI can map failure classes to
distinct process exit codes: 2 argument, 3 format, 4 I/O, 5 numerical.
"""


class TncsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ArgumentError(TncsError):
    """Invalid argument or violated precondition."""

    exit_code = 2


class StructuralError(ArgumentError):
    """Malformed tensor chain, e.g. mismatched bond dimensions."""


class FormatError(TncsError):
    """Unrecognized or corrupt file content (bad magic, bad version, ...)."""

    exit_code = 3


class DataIOError(TncsError):
    """Truncated payload or otherwise failed read/write."""

    exit_code = 4


class NumericalError(TncsError):
    """Numerical failure (zero-probability events, divergence, ...)."""

    exit_code = 5


class ZeroProbabilityError(NumericalError):
    """A projection hit an outcome of (numerically) zero probability."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class EncodeImpossibleError(ZeroProbabilityError):
    """The image cannot be encoded: some projection has zero probability.

    Signals that the model does not recognize the image at the offending
    pixel.
    """


class InfiniteNLLError(NumericalError):
    """A sample has vanishing likelihood, making the NLL infinite."""

    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class TrainingDivergedError(NumericalError):
    """Training produced a non-finite loss even after step-size retries."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnclassifiableError(NumericalError):
    """Every candidate model assigns the sample zero probability."""

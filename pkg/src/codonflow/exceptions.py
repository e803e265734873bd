"""Exception types shared across the package.

The CLI maps these onto process exit codes: rejected input -> 2,
numeric trouble during training -> 3, verification failures -> 1.
"""


class CodonflowError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CodonflowError):
    """Malformed or rejected user input (sequences, tables, files)."""


class ConfigurationError(CodonflowError):
    """Inconsistent or unknown configuration values."""


class InvalidDesignError(CodonflowError):
    """A codon sequence that does not encode a valid protein (STOP inside, bad length)."""


class IllegalActionError(CodonflowError):
    """An action outside the current mask, or a backstep with no parent."""


class InvariantViolationError(CodonflowError):
    """Internal state that breaks a structural invariant (corrupt prefix, empty mask)."""


class EnumerationCapError(InputError):
    """Design space too large to enumerate; carries the exact size."""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(
            f"design space holds {size} sequences, refusing to enumerate more than {cap}"
        )


class NumericFailureError(CodonflowError):
    """Non-finite loss or gradient."""


class TrainingAbortError(NumericFailureError):
    """Training stopped on a numeric failure; carries the last good checkpoint payload."""

    def __init__(self, message: str, checkpoint=None, checkpoint_path=None):
        self.checkpoint = checkpoint
        self.checkpoint_path = checkpoint_path
        super().__init__(message)


class InsufficientSamplesError(CodonflowError):
    """A metric asked for more distinct samples than available; carries the count."""

    def __init__(self, message: str, available: int):
        self.available = available
        super().__init__(message)


class MetricUndefinedError(CodonflowError):
    """A metric that has no value for the given input (e.g. diversity of one sequence)."""


class GraphConsumedError(CodonflowError):
    """Backward pass requested twice through the same recorded computation."""

"""Exception hierarchy shared by the whole package.

The CLI maps these onto exit codes: configuration problems exit 2,
dataset ingestion problems exit 3, model-file format problems exit 4.
"""


class LogHDError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(LogHDError):
    """Invalid or infeasible configuration (bad spec fields, impossible budgets)."""


class TrainingError(LogHDError):
    """Degenerate training state (empty class, zero-norm prototype or bundle)."""


class IngestionError(LogHDError):
    """Malformed dataset input (ragged rows, NaN values, unknown labels)."""


class FormatError(LogHDError):
    """Corrupt, truncated, or wrong-version model file."""

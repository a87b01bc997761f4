"""Exception hierarchy shared across the package.

CLI exit codes map onto these classes: usage errors exit 2 (handled by
click), DataFormatError exits 3, NumericError exits 4.
"""


class EmbedStabError(Exception):
    """Base class for all package errors."""


class DataFormatError(EmbedStabError):
    """Malformed or inconsistent input data (parsing, widths, non-finite values)."""


class NumericError(EmbedStabError):
    """Numerical failure (non-finite gradients, non-converging searches)."""

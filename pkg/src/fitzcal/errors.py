"""Exception taxonomy shared across the toolkit.

Each exception carries a short machine-readable ``category`` used by the
CLI error prefix and exit-code mapping.
"""


class FitzcalError(Exception):
    category = "error"

    def __init__(self, message, category=None):
        super().__init__(message)
        if category is not None:
            self.category = category


class DataError(FitzcalError):
    """Malformed or inconsistent input data (CLI exit code 2)."""

    category = "data"


class FormatError(DataError):
    """Binary file (FPM1/FBM1/PGM) violates its format contract."""

    category = "format"


class ManifestError(DataError):
    """Manifest CSV is malformed or violates manifest invariants."""

    category = "manifest"


class LeakageError(DataError):
    """A patient id appears in more than one split."""

    category = "leakage"


class ConsistencyError(FitzcalError):
    """Internal self-check failed (CLI exit code 3)."""

    category = "consistency"

"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit-code contract: ConfigError -> 2,
DataError (and subclasses) -> 3.
"""


class AttnsegError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(AttnsegError):
    """Bad or inconsistent run configuration (missing paths, invalid values)."""


class DataError(AttnsegError):
    """Malformed or inconsistent input data."""


class TensorFormatError(DataError):
    """Tensor file violates the binary format contract."""


class ManifestError(DataError):
    """Corpus manifest record violates an invariant."""


class AlignmentError(DataError):
    """Alignment record violates an invariant."""

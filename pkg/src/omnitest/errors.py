"""Exception hierarchy shared by the library and the CLI."""


class OmnitestError(Exception):
    """Base class for all package errors."""


class ValidationError(OmnitestError, ValueError):
    """Invalid user input (p-values out of range, malformed files)."""


class ConfigurationError(OmnitestError):
    """Inconsistent configuration, e.g. a null table built for another m."""


class CapacityError(OmnitestError, MemoryError):
    """A requested build would exceed the configured memory budget."""


class TableFileError(OmnitestError):
    """A null-table cache file could not be decoded."""


class VersionMismatchError(TableFileError):
    pass


class ChecksumError(TableFileError):
    pass


class TruncatedFileError(TableFileError):
    pass


class UnsortedColumnError(TableFileError):
    pass

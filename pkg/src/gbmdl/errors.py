"""Exception types shared across the package."""


class GbmdlError(Exception):
    """Base class for all package-specific errors."""


class DataQualityError(GbmdlError):
    """Input data violates a structural requirement (non-finite values, bad shapes)."""


class CsvParseError(GbmdlError):
    """A CSV input file could not be parsed into a dataset."""


class ConfigurationError(GbmdlError):
    """A run configuration is inconsistent or incomplete."""

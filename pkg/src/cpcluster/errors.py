"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when algorithm parameters violate their constraints."""


class DataFormatError(ValueError):
    """Raised when an input file or record fails validation."""

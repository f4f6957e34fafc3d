"""Exception types shared across the package."""


class CrossPhyError(Exception):
    """Base class for all crossphy errors."""


class DimensionError(CrossPhyError, ValueError):
    """An array had the wrong length or shape."""


class DomainError(CrossPhyError, ValueError):
    """A value was outside its allowed domain (zero seed, oversize payload, ...)."""


class ConfigError(CrossPhyError, ValueError):
    """A configuration was inconsistent or referenced unknown keys."""

class InvalidStateError(RuntimeError):
    """An object is missing data the requested operation needs."""


class ConfigError(ValueError):
    """An experiment configuration is inconsistent or out of range."""

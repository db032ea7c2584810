"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, parameters, or input files."""


class ComputationFault(RuntimeError):
    """A numerical computation failed (pole hit, non-finite state, ...)."""

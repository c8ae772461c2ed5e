"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A run configuration is malformed or missing a required section."""


class DomainError(ValueError):
    """Inputs violate a mathematical precondition of an operation."""


class NumericalError(RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""

"""Exception types shared across the package.

The command-line front end maps these onto exit codes: configuration
problems exit with 2, numerical breakdowns with 3.
"""


class ConfigurationError(ValueError):
    """Invalid configuration, inputs, or file contents."""


class DomainError(ValueError):
    """Parameter/strain combination outside a material model's domain."""


class NumericalError(RuntimeError):
    """A numerical procedure (root solve, quadrature) broke down."""

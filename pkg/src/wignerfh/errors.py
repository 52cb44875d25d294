"""Exception hierarchy shared by all modules."""


class WignerFHError(Exception):
    """Base class for library errors."""


class SpecError(WignerFHError, ValueError):
    """Invalid ensemble or function specification."""


class DomainError(WignerFHError, ValueError):
    """Argument outside the domain of a formula."""


class NumericalError(WignerFHError, ArithmeticError):
    """Non-finite values or failed linear algebra."""


class SingularityError(NumericalError):
    """A denominator vanished (to working tolerance) inside the domain."""


class ConfigError(WignerFHError, ValueError):
    """Malformed experiment configuration."""

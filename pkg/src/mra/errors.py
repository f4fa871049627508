class MRAError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(MRAError, ValueError):
    pass


class DomainError(MRAError, ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FactorizationError(MRAError, ArithmeticError):
    """A matrix stayed non positive definite after the jitter ladder."""

    def __init__(self, message, region=None):
        super().__init__(message)
        self.region = region


class OracleCapError(MRAError, ValueError):
    pass

"""Exception hierarchy shared by every module."""


class HessClipError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(HessClipError, ValueError):
    """A precondition on an argument (shape, sign, range) was violated."""


class DomainError(ContractError):
    """A numeric input lies outside the domain of the operation (NaN, Inf)."""


class ConfigurationError(HessClipError, ValueError):
    """An experiment or schedule configuration is inconsistent or incomplete."""

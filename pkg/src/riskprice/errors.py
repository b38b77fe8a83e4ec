"""Exception types raised across the package."""


class RiskPriceError(Exception):
    """Base class for all errors raised by riskprice."""


class ParameterError(RiskPriceError, ValueError):
    """A constructor or function argument violates its precondition."""


class EvaluationError(RiskPriceError, ArithmeticError):
    """A user-supplied function returned a non-finite value at a support atom."""


class DivergenceError(RiskPriceError, ArithmeticError):
    """The hedge optimizer left the admissible range without finding a minimum."""


class ResourceError(RiskPriceError):
    """A requested grid is larger than the configured node cap."""


class IterationError(RiskPriceError, ArithmeticError):
    """A backward iteration produced a non-finite node value."""


class ConfigError(RiskPriceError):
    """The experiment configuration file is malformed or inconsistent."""

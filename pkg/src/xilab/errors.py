"""Exception hierarchy shared across the package."""


class XiLabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(XiLabError, ValueError):
    """Arguments violate a documented precondition (non-finite data, bad range, ...)."""


class TieError(InvalidInputError):
    """Ties in x encountered under the Reject tie policy."""


class InvalidCdfError(InvalidInputError):
    """A supplied CDF produced values outside [0, 1] or failed its sanity checks."""


class NumericError(XiLabError):
    """A numeric procedure (quadrature, ...) failed to reach its tolerance."""


class ConfigError(XiLabError):
    """An experiment configuration is invalid or inconsistent."""

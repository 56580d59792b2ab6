"""Exceptions for dailyyield."""


class YieldError(Exception):
    """Base exception for everything that can go wrong when estimating daily yields."""

    pass


class DomainError(YieldError, ValueError):
    """Exception used for when an input lies outside the domain of an operation."""

    pass


class ConfigError(YieldError):
    """Exception used for when a configuration (grid, simulation settings) is invalid."""

    pass


class UsageError(YieldError):
    """Exception used for when an operation is called with arguments it does not support."""

    pass


class SingularityError(YieldError):
    """Exception used for when a least squares design matrix is rank deficient."""

    pass


class MissingFactorError(YieldError):
    """Exception used for when a correction factor cannot be looked up for a bin."""

    pass


class PoleError(YieldError):
    """Exception used for when a rational factor has a nonpositive denominator."""

    pass


class DegenerateFitError(YieldError):
    """Exception used for when a diagnostic regression has no variation to work with."""

    pass


class DataFormatError(YieldError):
    """Exception used for when a records CSV or model file cannot be parsed."""

    pass

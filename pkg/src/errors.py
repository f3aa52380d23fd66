"""
Takagi Lab Errors
Exception hierarchy shared by the library modules and the CLI.
"""


class TakagiLabError(Exception):
    """Base class for every error raised by takagi-lab."""


class DomainError(TakagiLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class CertifiedPrecisionError(TakagiLabError):
    """A baker step or series would read a digit the register does not hold."""


class AnalysisError(TakagiLabError):
    """A threshold expression has no sign change in its bracket."""


class SamplingError(TakagiLabError):
    """A sample fell outside the certified binning support."""


class ConfigError(TakagiLabError, ValueError):
    """A run configuration violates its invariants."""

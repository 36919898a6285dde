"""Exception hierarchy and process exit codes"""


class NodalCensusError(Exception):
    """Base class for all errors raised by the lab"""

    exit_code = 1


class DomainError(NodalCensusError, ValueError):
    """Argument outside the mathematical domain of an operation"""

    exit_code = 2


class UnsupportedDegreeError(DomainError):
    """Degree the basis cannot be built for"""


class DimensionError(DomainError):
    """Coefficient vector of the wrong length"""


class ConfigurationError(NodalCensusError):
    """Invalid parameter combination or resolution"""

    exit_code = 3


class ResourceError(NodalCensusError):
    """Requested grid exceeds the configured cell budget"""

    exit_code = 4


class StatisticsError(NodalCensusError):
    """Too few trials for the requested statistic"""

    exit_code = 5


class SchemaError(NodalCensusError):
    """Stored run records are truncated, tampered or of another format version"""

    exit_code = 6


class OutputError(NodalCensusError):
    """Output path cannot be written"""

    exit_code = 7


class UnknownExperimentError(NodalCensusError):
    """Experiment name not recognised"""

    exit_code = 8


CHECK_FAILED_EXIT_CODE = 10

from enum import IntEnum


class ExitCode(IntEnum):
    """Stable process exit codes of the CLI"""
    OK = 0
    INTERNAL = 1
    USAGE = 2
    INFEASIBLE = 3
    ITERATION_CAP = 4
    IO_ERROR = 5
    CONFIG_ERROR = 6
    NUMERICAL = 7


class AmbcError(Exception):
    """Base exception of the package"""
    exit_code = ExitCode.INTERNAL
    message = "Internal error"

    def __init__(self, message=None, exit_code=None):
        if message:
            self.message = message
        if exit_code is not None:
            self.exit_code = exit_code
        super().__init__(self.message)


class ValidationError(AmbcError):
    exit_code = ExitCode.CONFIG_ERROR
    message = "Invalid input"


class ConfigError(AmbcError):
    exit_code = ExitCode.CONFIG_ERROR
    message = "Configuration could not be parsed"


class DimensionError(AmbcError):
    exit_code = ExitCode.CONFIG_ERROR
    message = "Array dimensions do not match"


class StorageError(AmbcError):
    exit_code = ExitCode.IO_ERROR
    message = "Could not read or write a file"


class InfeasibleError(AmbcError):
    exit_code = ExitCode.INFEASIBLE
    message = "Problem instance is infeasible"


class IterationCapError(AmbcError):
    exit_code = ExitCode.ITERATION_CAP
    message = "Iteration cap reached before convergence"


class NumericalError(AmbcError):
    exit_code = ExitCode.NUMERICAL
    message = "Numerical failure in a solver"


class MonotonicityError(AmbcError):
    exit_code = ExitCode.INTERNAL
    message = "Objective sequence decreased"

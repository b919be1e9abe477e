# Error Handling module
"""
Exception hierarchy shared by the simulation library and the command line.

Library code raises these; only the CLI handlers catch them and translate
them into exit codes (see EXIT_CODES and exit_code_for).
"""


class SimulationError(Exception):
    """Base class for every error raised by this project."""


# ==== INVALID INPUTS ====
class InvalidOperandError(SimulationError, ValueError):
    """An operand does not fit the operation (length, dimension, type)."""


class DimensionMismatchError(InvalidOperandError):
    pass


class NonHermitianError(InvalidOperandError):
    pass


class NotRealRepresentableError(InvalidOperandError):
    pass


class NotAnEigenstateError(InvalidOperandError):
    pass


class InvalidParameterError(SimulationError, ValueError):
    """A scalar parameter or configuration value is out of range."""


class UnsupportedSizeError(InvalidParameterError):
    pass


class StateSpecError(InvalidParameterError):
    """A state specification string could not be parsed."""

    def __init__(self, message: str, offset: int = 0, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at offset {offset})")


class ConfigError(InvalidParameterError):
    """A config or plan file is malformed."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = path or "<config>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


class SpectrumFileError(InvalidParameterError):
    pass


# ==== NUMERICAL FAILURES ====
class NumericalError(SimulationError, ArithmeticError):
    """A numerical procedure failed or produced an inconsistent result."""


class ConvergenceError(NumericalError):
    pass


class SingularMitigationError(NumericalError):
    pass


class InconsistentSystemError(NumericalError):
    pass


class StepTooLargeError(NumericalError):
    pass


class DegenerateKrylovError(NumericalError):
    pass


class RealnessViolationError(NumericalError):
    pass


class NoConvergenceError(NumericalError):
    """No QLanczos candidate passed the uncertainty filter."""

    def __init__(self, message: str, best_delta_e: float, records=None):
        self.best_delta_e = best_delta_e
        self.records = list(records or [])
        super().__init__(f"{message} (best delta_e = {best_delta_e:.6g})")


class MissingLevelsError(NumericalError):
    """The assembled spectrum does not cover every basis dimension."""

    def __init__(self, message: str, covered_energies=None, expected: int = 0):
        self.covered_energies = list(covered_energies or [])
        self.expected = expected
        covered = ", ".join(f"{e:.6f}" for e in self.covered_energies)
        super().__init__(
            f"{message}: {len(self.covered_energies)} of {expected} levels covered [{covered}]")


# ==== EXIT CODES ====
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3


def exit_code_for(error: BaseException) -> int:
    """
    Map an exception to the process exit code used by the CLI.

    Args:
        error (BaseException): The raised error.

    Returns:
        int: 2 for validation problems, 3 for convergence/coverage failures, 1 otherwise.
    """
    if isinstance(error, (NoConvergenceError, MissingLevelsError)):
        return EXIT_NO_CONVERGENCE
    if isinstance(error, (InvalidParameterError, InvalidOperandError)):
        return EXIT_VALIDATION
    return EXIT_FAILURE

"""Exception hierarchy.  Every error carries the CLI exit code it maps to."""


class LyapError(Exception):
    exit_code = 1


class ParseError(LyapError):
    """Lexical, grammar, unknown-identifier or arity error in an expression."""

    exit_code = 2

    def __init__(self, message, line=None, column=None, where=None):
        self.message = message
        self.line = line
        self.column = column
        self.where = where
        if line is not None:
            message = f"{line}:{column}: {message}"
        if where:
            message = f"{where}:{message}" if line is not None else f"{where}: {message}"
        super().__init__(message)


class SchemaError(LyapError):
    exit_code = 2

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(LyapError):
    exit_code = 3


class DomainError(NumericalError):
    """Evaluation left the domain of a function (log, sqrt, division)."""

    def __init__(self, message, subexpression=None):
        self.subexpression = subexpression
        if subexpression is not None:
            message = f"{message} in '{subexpression}'"
        super().__init__(message)


class SingularMatrixError(NumericalError):
    pass


class EigenvalueError(NumericalError):
    pass


class NewtonError(NumericalError):
    def __init__(self, message, history=()):
        self.history = list(history)
        super().__init__(message)


class TrackingError(NumericalError):
    pass


class PreconditionError(LyapError):
    exit_code = 4


class EquilibriumResidualError(PreconditionError):
    pass


class NoCriticalPairError(PreconditionError):
    pass


class ExtraCriticalEigenvalueError(PreconditionError):
    pass


class ResonanceError(PreconditionError):
    pass


class OrderError(PreconditionError):
    pass


class ProblemIOError(LyapError):
    exit_code = 5

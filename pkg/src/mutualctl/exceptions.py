"""Exception hierarchy shared by all modules."""


class MutualControlError(Exception):
    """Base class for errors raised by mutualctl."""


class DomainError(MutualControlError, ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(MutualControlError, ValueError):
    """A mathematical hypothesis required by the operation does not hold."""


class SemigroupOverflowError(MutualControlError, OverflowError):
    """e^{-tA} produced non-finite entries; the horizon is too long for A."""


class ExpressionSyntaxError(MutualControlError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ExpressionEvaluationError(MutualControlError, ArithmeticError):
    def __init__(self, message, component=None):
        if component is not None:
            message = f"component {component + 1}: {message}"
        super().__init__(message)
        self.component = component


class BlowUpError(MutualControlError, ArithmeticError):
    def __init__(self, node):
        super().__init__(f"integration produced a non-finite state at node {node}")
        self.node = node


class ConfigurationError(MutualControlError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

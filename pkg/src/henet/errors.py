"""Exception types shared across the package."""


class HenetError(Exception):
    """Base class for all package errors."""


class InsufficientData(HenetError, ValueError):
    pass


class IllConditioned(HenetError, ArithmeticError):
    pass


class DegreeLimitExceeded(HenetError, ValueError):
    pass


class CyclicPlan(HenetError, ValueError):
    pass


class UnknownIdentifier(HenetError, NameError):
    pass


class ExpressionSyntaxError(HenetError, SyntaxError):
    """Parse failure; ``offset`` is the byte offset into the source text."""

    def __init__(self, message, text, offset):
        super().__init__(f"{message} at offset {offset}")
        self.msg = message
        self.text = text
        self.offset = offset


class NonFinite(HenetError, ArithmeticError):
    pass


class Diverged(HenetError, ArithmeticError):
    pass


class MalformedRow(HenetError, ValueError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class ShapeMismatch(HenetError, ValueError):
    pass


class DomainError(HenetError, ValueError):
    pass


class ContextMismatch(HenetError, ValueError):
    pass


class LevelExhausted(HenetError, RuntimeError):
    pass


class OddIntervals(HenetError, ValueError):
    pass

"""Exceptions raised while parsing, running and compiling GTDL rules."""


class GtdlSyntaxError(ValueError):
    """Raised for malformed rule text.

    Attributes:
        line: 1-based line of the offending token.
        column: 1-based column of the offending token.
    """

    def __init__(self, message: str, line: int = 1, column: int = 1) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class GtdlRuntimeError(RuntimeError):
    """Raised when the interpreter cannot step, e.g. on ``halt``."""


class GtdlCompileError(ValueError):
    """Raised when an input universe does not cover a rule's inputs."""


class GtdlWiringError(ValueError):
    """Raised for dangling flag reads, channel clashes and self-reads."""

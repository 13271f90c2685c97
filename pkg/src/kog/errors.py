from __future__ import annotations

Pos = tuple[int, int] | None


class KogError(Exception):
    pass


class ParseError(KogError):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        super().__init__(self.render())

    def render(self, filename: str = "<input>") -> str:
        text = f"{filename}:{self.line}:{self.column}: parse error: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


class TypeCheckError(KogError):
    """A static error, tagged with the typing rule (or well-formedness label) that failed."""

    def __init__(self, rule: str, message: str, pos: Pos = None):
        self.rule = rule
        self.message = message
        self.pos = pos
        super().__init__(f"{rule}: {message}")

    def render(self, filename: str = "<input>") -> str:
        line, col = self.pos if self.pos else (0, 0)
        return f"{filename}:{line}:{col}: {self.rule}: {self.message}"

    def to_json(self) -> dict:
        line, col = self.pos if self.pos else (0, 0)
        return {"rule": self.rule, "message": self.message, "line": line, "column": col}

    def __eq__(self, other):
        return (
            isinstance(other, TypeCheckError)
            and (self.rule, self.message, self.pos) == (other.rule, other.message, other.pos)
        )

    def __hash__(self):
        return hash((self.rule, self.message, self.pos))


class UndeclaredName(KogError, LookupError):
    pass


class NoSuchMethod(KogError, LookupError):
    pass


class AmbiguousSignature(KogError):
    pass


class IllegalTransition(KogError):
    pass

"""Source spans and diagnostics shared by the front end and validators."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True, order=True)
class Span:
    """Half-open region of the source text, 1-based lines and columns."""

    line: int
    col: int
    end_line: int
    end_col: int

    @staticmethod
    def point(line: int, col: int) -> "Span":
        return Span(line, col, line, col + 1)

    def merge(self, other: "Span") -> "Span":
        lo = min((self.line, self.col), (other.line, other.col))
        hi = max((self.end_line, self.end_col), (other.end_line, other.end_col))
        return Span(lo[0], lo[1], hi[0], hi[1])


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: Span
    severity: str = "error"

    def render(self) -> str:
        return f"{self.span.line}:{self.span.col}: {self.severity}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "message": self.message,
            "severity": self.severity,
            "line": self.span.line,
            "col": self.span.col,
            "end_line": self.span.end_line,
            "end_col": self.span.end_col,
        }


class SpecError(Exception):
    """Raised when a spec cannot be parsed or validated; carries diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics))


@dataclass
class DiagnosticSink:
    """Accumulates diagnostics during a pass."""

    items: list[Diagnostic] = field(default_factory=list)

    def error(self, message: str, span: Span) -> None:
        self.items.append(Diagnostic(message, span))

    def __bool__(self) -> bool:
        return bool(self.items)

    def raise_if_any(self) -> None:
        if self.items:
            raise SpecError(self.items)

"""Source locations and diagnostics shared by every compiler stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """1-based position of a token or construct in a spec file."""

    file: str
    line: int
    column: int
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"malformed span {self!r}")


@dataclass(frozen=True)
class Diagnostic:
    span: SourceSpan
    message: str
    severity: str = "error"

    def is_error(self) -> bool:
        return self.severity == "error"

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.column}: {self.severity}: {self.message}"


def format_diagnostics(diags: list[Diagnostic]) -> str:
    """One line per diagnostic, in the order given."""
    if not diags:
        return ""
    return "\n".join(d.render() for d in diags) + "\n"


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.is_error() for d in diags)

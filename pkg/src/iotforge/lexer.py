"""Tokenizer shared by the three specification languages.

Keywords are contextual: the lexer emits plain IDENT tokens and the parser
matches their text, so user names never collide with grammar words.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, SourceSpan

IDENT = "IDENT"
INT = "INT"
FLOAT = "FLOAT"
PUNCT = "PUNCT"  # one of { } ( ) : ; , = -
EOF = "EOF"

_PUNCT_CHARS = "{}():;,=-"


class SpecSyntaxError(Exception):
    """Aborts lexing/parsing; carries the diagnostic to report."""

    def __init__(self, diag: Diagnostic):
        super().__init__(diag.render())
        self.diag = diag


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan

    def is_punct(self, ch: str) -> bool:
        return self.kind == PUNCT and self.text == ch

    def is_word(self, word: str) -> bool:
        return self.kind == IDENT and self.text == word


def tokenize(source: str, file: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    col = 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "/" and source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        span_start = SourceSpan(file, line, col, 1)
        if ch.isalpha():
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            tokens.append(Token(IDENT, text, SourceSpan(file, line, col, len(text))))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            kind = INT
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                kind = FLOAT
            text = source[i:j]
            tokens.append(Token(kind, text, SourceSpan(file, line, col, len(text))))
            col += j - i
            i = j
            continue
        if ch in _PUNCT_CHARS:
            tokens.append(Token(PUNCT, ch, span_start))
            i += 1
            col += 1
            continue
        raise SpecSyntaxError(Diagnostic(span_start, f"unknown character {ch!r}"))
    tokens.append(Token(EOF, "", SourceSpan(file, line, col, 0)))
    return tokens

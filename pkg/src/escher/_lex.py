"""Shared tokenizer for the class, transformer, and object file syntaxes.

Line comments start with ``--`` and run to end of line. Two-hyphen comments
win over a bare minus, so ``a--b`` lexes as ``a`` followed by a comment
(matching the source language the syntax imitates).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_TOKEN_RE = re.compile(
    r"""
    (?P<comment>--[^\n]*)
  | (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<real>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<op>:=|/=|//|<=|>=|->|[:\[\](),;=<>+\-*.])
    """,
    re.VERBOSE,
)

_ESCAPES = {'"': '"', "\\": "\\", "n": "\n"}
_REVERSE_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n"}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | REAL | STRING | OP | EOF
    text: str
    line: int
    column: int


def unescape_string(text: str, line: int, column: int) -> str:
    """Decode the payload of a double-quoted literal (quotes included)."""
    body = text[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) or body[i + 1] not in _ESCAPES:
                raise ParseError(f"unknown escape in string literal {text}", line, column)
            out.append(_ESCAPES[body[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def escape_string(value: str) -> str:
    return '"' + "".join(_REVERSE_ESCAPES.get(ch, ch) for ch in value) + '"'


def tokenize(source: str, *, start_line: int = 1) -> list[Token]:
    """Lex ``source`` into tokens, dropping comments and whitespace.

    A trailing EOF token is always appended so parsers can peek safely.
    """
    tokens: list[Token] = []
    line = start_line
    line_start = 0
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "ident":
            tokens.append(Token("IDENT", text, line, col))
        elif kind == "int":
            tokens.append(Token("INT", text, line, col))
        elif kind == "real":
            tokens.append(Token("REAL", text, line, col))
        elif kind == "string":
            tokens.append(Token("STRING", text, line, col))
        else:
            tokens.append(Token("OP", text, line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, len(source) - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with one/two-token lookahead."""

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    def peek(self, ahead: int = 0) -> Token:
        idx = min(self._pos + ahead, len(self._tokens) - 1)
        return self._tokens[idx]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self._pos += 1
        return tok

    def at_op(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text == text

    def at_ident(self, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and (text is None or tok.text == text)

    def expect_op(self, text: str) -> Token:
        tok = self.peek()
        if not self.at_op(text):
            raise ParseError(f"found {tok.text!r}", tok.line, tok.column, expected=repr(text))
        return self.next()

    def expect_ident(self, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT" or (text is not None and tok.text != text):
            what = repr(text) if text else "an identifier"
            raise ParseError(f"found {tok.text!r}", tok.line, tok.column, expected=what)
        return self.next()

    def error(self, message: str, expected: str | None = None) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.column, expected=expected)

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

KEYWORDS = {
    "bus", "module", "param", "shared", "driver", "devnode", "field", "attr", "group",
    "op", "probe", "device", "store", "show", "rw", "ro",
    "let", "if", "else", "switch", "case", "default", "return",
    "lock", "unlock", "alloc", "free", "use", "list_add", "list_del", "list_iter",
    "as", "yield", "true", "false", "null",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[{}()\[\];:,=.<>+\-*/%!])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "kw" | "int" | "string" | "op" | "eof"
    text: str
    line: int
    col: int
    value: object = None


def unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", line, col + i)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        tok_text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "string":
            tokens.append(Token("string", tok_text, line, col, unescape(tok_text[1:-1], line, col)))
        elif kind == "int":
            tokens.append(Token("int", tok_text, line, col, int(tok_text)))
        elif kind == "ident":
            tokens.append(Token("kw" if tok_text in KEYWORDS else "ident", tok_text, line, col))
        elif kind == "op":
            tokens.append(Token("op", tok_text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens

"""Tokenizer for the Verilog subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import E_LEX, E_LITERAL, E_UNSUPPORTED, SyntaxDiagnostic
from .source import SourceFile

KEYWORDS = frozenset(
    """module endmodule input output wire reg integer assign always posedge negedge
    or begin end if else case endcase default for""".split()
)

# Recognised so that the diagnostic can name the construct instead of reporting
# an undeclared identifier.
UNSUPPORTED_KEYWORDS = frozenset(
    """parameter localparam generate endgenerate genvar task endtask function
    endfunction initial casex casez while repeat forever fork join signed inout
    wait disable supply0 supply1 tri wand wor real time event specify endspecify
    primitive endprimitive defparam logic always_ff always_comb always_latch""".split()
)

OPERATORS = sorted(
    """<<< >>> === !== << >> <= >= == != && || ++ -- ~& ~| ~^ ^~ + - * / % & | ^ ~ !
    < > = ? : ; , . ( ) [ ] { } @ #""".split(),
    key=len,
    reverse=True,
)

_WS = re.compile(r"[ \t\r\n\f]+")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_ESCAPED = re.compile(r"\\\S+")
_NUMBER = re.compile(
    r"(?P<size>[0-9][0-9_]*)?\s*'(?P<signed>[sS])?(?P<base>[A-Za-z])\s*(?P<digits>[0-9A-Za-z_?]*)"
    r"|(?P<dec>[0-9][0-9_]*)"
)
_DIGITS = {
    "b": set("01xz?_"),
    "o": set("01234567xz?_"),
    "d": set("0123456789_"),
    "h": set("0123456789abcdefxz?_"),
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, number, op, sysname, eof
    text: str
    offset: int
    line: int
    col: int

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def check_number(text: str) -> str | None:
    """Return an error message if a numeric literal is malformed."""
    m = _NUMBER.fullmatch(text)
    if m is None:
        return f"malformed literal '{text}'"
    if m.group("dec") is not None:
        return None
    base = m.group("base").lower()
    if base not in _DIGITS:
        return f"malformed literal '{text}': unknown base '{m.group('base')}'"
    if m.group("signed"):
        return f"malformed literal '{text}': signed literals are not supported"
    digits = m.group("digits").lower()
    if not digits.strip("_"):
        return f"malformed literal '{text}': missing digits"
    bad = sorted(set(digits) - _DIGITS[base])
    if bad:
        return f"malformed literal '{text}': invalid digit '{bad[0]}' for base '{base}'"
    if m.group("size") is not None and int(m.group("size").replace("_", "")) == 0:
        return f"malformed literal '{text}': zero width"
    return None


def tokenize(src: SourceFile) -> tuple[list[Token], list[SyntaxDiagnostic]]:
    text = src.text
    pos = 0
    n = len(text)
    tokens: list[Token] = []
    diags: list[SyntaxDiagnostic] = []

    def tok(kind: str, start: int, end: int) -> None:
        line, col = src.position(start)
        tokens.append(Token(kind, text[start:end], start, line, col))

    while pos < n:
        m = _WS.match(text, pos)
        if m:
            pos = m.end()
            continue
        if text.startswith("//", pos):
            end = text.find("\n", pos)
            pos = n if end < 0 else end
            continue
        if text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end < 0:
                line, col = src.position(pos)
                diags.append(SyntaxDiagnostic(line, col, E_LEX, "unterminated block comment"))
                break
            pos = end + 2
            continue
        ch = text[pos]
        if ch == "`":
            m = _IDENT.match(text, pos + 1)
            end = m.end() if m else pos + 1
            line, col = src.position(pos)
            diags.append(
                SyntaxDiagnostic(line, col, E_UNSUPPORTED, f"preprocessor directive '{text[pos:end]}' is not supported")
            )
            eol = text.find("\n", pos)
            pos = n if eol < 0 else eol
            continue
        if ch == "$":
            m = _IDENT.match(text, pos + 1)
            end = m.end() if m else pos + 1
            tok("sysname", pos, end)
            pos = end
            continue
        if ch == "\\":
            m = _ESCAPED.match(text, pos)
            line, col = src.position(pos)
            diags.append(SyntaxDiagnostic(line, col, E_UNSUPPORTED, "escaped identifiers are not supported"))
            pos = m.end() if m else pos + 1
            continue
        if ch.isdigit() or ch == "'":
            m = _NUMBER.match(text, pos)
            if m and m.end() > pos:
                end = m.end()
                # An identifier character glued to a decimal (e.g. 4x) is malformed.
                while end < n and (text[end].isalnum() or text[end] == "_"):
                    end += 1
                lit = text[pos:end]
                err = check_number(lit)
                if err:
                    line, col = src.position(pos)
                    diags.append(SyntaxDiagnostic(line, col, E_LITERAL, err))
                tok("number", pos, end)
                pos = end
                continue
        if ch.isalpha() or ch == "_":
            m = _IDENT.match(text, pos)
            assert m is not None
            word = m.group()
            tok("keyword" if word in KEYWORDS else "ident", pos, m.end())
            pos = m.end()
            continue
        for op in OPERATORS:
            if text.startswith(op, pos):
                tok("op", pos, pos + len(op))
                pos += len(op)
                break
        else:
            line, col = src.position(pos)
            diags.append(SyntaxDiagnostic(line, col, E_LEX, f"unexpected character '{ch}'"))
            pos += 1
    line, col = src.position(n)
    tokens.append(Token("eof", "", n, line, col))
    return tokens, diags


def relexes(text: str) -> bool:
    """True when the text yields a token stream without lexical errors."""
    _, diags = tokenize(SourceFile.from_text(text))
    return not any(d.code == E_LEX for d in diags)

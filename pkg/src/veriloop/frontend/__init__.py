"""Lexing, parsing, printing and elaboration of the Verilog subset."""

from __future__ import annotations

from . import ast
from .ast import Design, Module
from .checker import check_module
from .diagnostics import Diagnostic, ElabDiagnostic, SyntaxDiagnostic
from .elaborate import ElaboratedDesign, ElaborationError, Process, Signal, elaborate, try_elaborate
from .parser import choose_top, parse_modules
from .printer import print_design
from .source import SourceFile

__all__ = [
    "Design",
    "Diagnostic",
    "ElabDiagnostic",
    "ElaboratedDesign",
    "ElaborationError",
    "Module",
    "ParseFailure",
    "Process",
    "Signal",
    "SourceFile",
    "SyntaxDiagnostic",
    "ast",
    "elaborate",
    "load",
    "parse",
    "print_design",
    "try_elaborate",
    "try_parse",
]


class ParseFailure(Exception):
    def __init__(self, diagnostics: list[SyntaxDiagnostic]):
        super().__init__("; ".join(f"{d.line}:{d.col} {d.message}" for d in diagnostics[:5]))
        self.diagnostics = diagnostics


def try_parse(src: SourceFile | str, top: str | None = None) -> tuple[Design | None, list[SyntaxDiagnostic]]:
    """Parse and check a source file; returns (design, []) or (None, diagnostics)."""
    if isinstance(src, str):
        src = SourceFile.from_text(src)
    modules, diags, clean = parse_modules(src)
    names: set[str] = set()
    for m in modules:
        if m.name in names:
            diags.append(SyntaxDiagnostic(m.span.line, m.span.col, "E011", f"duplicate module '{m.name}'"))
        names.add(m.name)
        if m.name in clean:
            diags.extend(check_module(m))
    if not modules and not diags:
        diags.append(SyntaxDiagnostic(1, 1, "E001", "no module found"))
    if diags:
        return None, sorted(set(diags))
    return Design(tuple(modules), top or choose_top(modules, src.path)), []


def parse(src: SourceFile | str, top: str | None = None) -> Design:
    design, diags = try_parse(src, top)
    if design is None:
        raise ParseFailure(diags)
    return design


def load(src: SourceFile | str, top: str | None = None) -> ElaboratedDesign:
    """Parse and elaborate in one step."""
    return elaborate(parse(src, top))

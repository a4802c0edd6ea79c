"""Diagnostic records shared by the parser, elaborator and linter."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass
from typing import Iterable, TextIO


@dataclass(frozen=True, order=True)
class Diagnostic:
    line: int
    col: int
    code: str
    message: str
    severity: str = "error"

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps({k: d[k] for k in ("severity", "line", "col", "code", "message")})

    def human(self, path: str = "") -> str:
        prefix = f"{path}:" if path else ""
        return f"{prefix}{self.line}:{self.col}: {self.severity}: [{self.code}] {self.message}"


class SyntaxDiagnostic(Diagnostic):
    pass


class ElabDiagnostic(Diagnostic):
    pass


# Parse / semantic error codes.
E_UNEXPECTED = "E001"
E_MISSING_SEMI = "E002"
E_UNBALANCED = "E003"
E_UNSUPPORTED = "E004"
E_LITERAL = "E005"
E_UNDECLARED = "E006"
E_PROC_TO_WIRE = "E007"
E_CONT_TO_REG = "E008"
E_WIDTH_LIMIT = "E009"
E_PORT_NO_DIR = "E010"
E_DUPLICATE = "E011"
E_FOR_BOUNDS = "E012"
E_ASSIGN_INPUT = "E013"
E_LEX = "E014"

# Elaboration codes.
L_UNKNOWN_MODULE = "L001"
L_UNKNOWN_PORT = "L002"
L_UNCONNECTED = "L003"
L_NO_TOP = "L004"
L_DRIVER_KIND = "L005"
L_BAD_OUTPUT_CONN = "L006"
L_RECURSION = "L007"


def write_diagnostics(
    diags: Iterable[Diagnostic], path: str = "", human: TextIO | None = None, jsonl: TextIO | None = None
) -> None:
    for d in diags:
        if human is not None:
            print(d.human(path), file=human)
        if jsonl is not None:
            print(d.to_json(), file=jsonl)


def emit(diags: Iterable[Diagnostic], path: str = "") -> None:
    write_diagnostics(diags, path, human=sys.stderr, jsonl=sys.stdout)

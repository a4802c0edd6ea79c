"""Per-module declaration and driver checks run as part of ``parse``."""

from __future__ import annotations

from . import ast as A
from .diagnostics import (
    E_ASSIGN_INPUT,
    E_CONT_TO_REG,
    E_DUPLICATE,
    E_PORT_NO_DIR,
    E_PROC_TO_WIRE,
    E_UNDECLARED,
    SyntaxDiagnostic,
)


def _diag(span: A.Span, code: str, msg: str) -> SyntaxDiagnostic:
    return SyntaxDiagnostic(span.line, span.col, code, msg)


def check_module(mod: A.Module) -> list[SyntaxDiagnostic]:
    diags: list[SyntaxDiagnostic] = []
    seen_dir: dict[str, A.Decl] = {}
    seen_kind: dict[str, A.Decl] = {}
    for d in mod.decls():
        for dn in d.names:
            if d.direction is not None:
                if dn.name in seen_dir:
                    diags.append(_diag(dn.span or d.span, E_DUPLICATE, f"duplicate port declaration '{dn.name}'"))
                seen_dir[dn.name] = d
            if d.kind is not None or d.direction is None:
                if dn.name in seen_kind:
                    diags.append(_diag(dn.span or d.span, E_DUPLICATE, f"duplicate declaration of '{dn.name}'"))
                seen_kind[dn.name] = d
    # Non-ANSI headers: every listed port needs a direction, every direction a listing.
    if not mod.ansi:
        header = set(mod.port_names)
        for name in mod.port_names:
            if name not in seen_dir:
                diags.append(_diag(mod.span, E_PORT_NO_DIR, f"port '{name}' has no direction declaration (missing input/output definition)"))
        for name, d in seen_dir.items():
            if name not in header:
                diags.append(_diag(d.span, E_PORT_NO_DIR, f"'{name}' is declared {d.direction} but is not in the port list of '{mod.name}'"))
    else:
        for it in mod.items:
            if isinstance(it, A.Decl) and it.direction is not None:
                diags.append(_diag(it.span, E_PORT_NO_DIR, "port direction declarations are not allowed in a module with an ANSI header"))

    nets = mod.nets()

    def check_reads(expr: A.Expr | None, where: A.Span) -> None:
        if expr is None:
            return
        for _, n in A.walk(expr):
            if isinstance(n, A.Ident) and n.name not in nets:
                diags.append(_diag(n.span if n.span.line else where, E_UNDECLARED, f"undeclared identifier '{n.name}'"))

    def check_target(lhs: A.Expr, procedural: bool, where: A.Span) -> None:
        check_reads(lhs, where)
        for name in A.lvalue_bases(lhs):
            n = nets.get(name)
            if n is None:
                continue
            if n.direction == "input":
                diags.append(_diag(where, E_ASSIGN_INPUT, f"assignment to input port '{name}'"))
            elif procedural and n.kind == "wire":
                diags.append(_diag(where, E_PROC_TO_WIRE, f"procedural assignment to wire '{name}' (declare it 'reg')"))
            elif not procedural and n.kind in ("reg", "integer"):
                diags.append(_diag(where, E_CONT_TO_REG, f"continuous assignment to reg '{name}' (declare it 'wire')"))

    def check_stmt(s: A.Stmt) -> None:
        if isinstance(s, A.Assign):
            check_target(s.lhs, True, s.span)
            check_reads(s.rhs, s.span)
        elif isinstance(s, A.If):
            check_reads(s.cond, s.span)
            check_stmt(s.then)
            if s.else_ is not None:
                check_stmt(s.else_)
        elif isinstance(s, A.Case):
            check_reads(s.subject, s.span)
            for it in s.items:
                for lab in it.labels:
                    check_reads(lab, it.span)
                check_stmt(it.body)
        elif isinstance(s, A.For):
            check_stmt(s.init)
            check_reads(s.cond, s.span)
            check_stmt(s.step)
            check_stmt(s.body)
        elif isinstance(s, A.Block):
            for x in s.stmts:
                check_stmt(x)

    for it in mod.items:
        if isinstance(it, A.ContAssign):
            check_target(it.lhs, False, it.span)
            check_reads(it.rhs, it.span)
        elif isinstance(it, A.Always):
            for si in it.sens:
                if si.name not in nets:
                    diags.append(_diag(si.span, E_UNDECLARED, f"undeclared identifier '{si.name}' in sensitivity list"))
            check_stmt(it.body)
        elif isinstance(it, A.Instance):
            for c in it.conns:
                check_reads(c.expr, c.span)
    return diags

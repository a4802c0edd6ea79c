"""Deterministic pretty-printer. Output re-parses to a structurally equal Design."""

from __future__ import annotations

from . import ast as A
from .parser import BINARY_PREC

INDENT = "    "


def expr_str(e: A.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, A.Number):
        return e.text
    if isinstance(e, A.Ident):
        return e.name
    if isinstance(e, A.Index):
        return f"{expr_str(e.target, 99)}[{expr_str(e.index)}]"
    if isinstance(e, A.PartSelect):
        return f"{expr_str(e.target, 99)}[{expr_str(e.msb)}:{expr_str(e.lsb)}]"
    if isinstance(e, A.Concat):
        return "{" + ", ".join(expr_str(p) for p in e.parts) + "}"
    if isinstance(e, A.Repl):
        return "{" + expr_str(e.count, 99) + expr_str(e.value) + "}"
    if isinstance(e, A.Unary):
        inner = expr_str(e.operand, 98)
        # keep "- -a" from collapsing into a "--" token
        sep = " " if inner[:1] in "+-!~&|^" else ""
        return f"{e.op}{sep}{inner}"
    if isinstance(e, A.Binary):
        prec = BINARY_PREC[e.op]
        s = f"{expr_str(e.left, prec)} {e.op} {expr_str(e.right, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    if isinstance(e, A.Ternary):
        s = f"{expr_str(e.cond, 1)} ? {expr_str(e.if_true)} : {expr_str(e.if_false)}"
        return f"({s})" if parent_prec > 0 else s
    raise TypeError(f"not an expression: {e!r}")


def range_str(r: A.Range | None) -> str:
    return f"[{r.msb}:{r.lsb}]" if r is not None else ""


def decl_head(d: A.Decl) -> str:
    parts = [p for p in (d.direction, d.kind, range_str(d.range)) if p]
    return " ".join(parts)


def declarator_str(dn: A.Declarator) -> str:
    return dn.name + (" " + range_str(dn.array) if dn.array else "")


def assign_str(s: A.Assign) -> str:
    op = "=" if s.blocking else "<="
    return f"{expr_str(s.lhs)} {op} {expr_str(s.rhs)}"


def body_lines(head: str, s: A.Stmt, depth: int) -> list[str]:
    """Statement controlled by ``head``; blocks open on the head line."""
    if isinstance(s, A.Block):
        out = [f"{head} begin"]
        for x in s.stmts:
            out.extend(stmt_lines(x, depth + 1))
        out.append(f"{INDENT * depth}end")
        return out
    return [head] + stmt_lines(s, depth + 1)


def stmt_lines(s: A.Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, A.Assign):
        return [f"{pad}{assign_str(s)};"]
    if isinstance(s, A.Null):
        return [f"{pad};"]
    if isinstance(s, A.Block):
        return _block(s, depth)
    if isinstance(s, A.If):
        out = body_lines(f"{pad}if ({expr_str(s.cond)})", s.then, depth)
        if s.else_ is not None:
            if isinstance(s.else_, A.If):
                chained = stmt_lines(s.else_, depth)
                chained[0] = f"{pad}else {chained[0].lstrip()}"
                out.extend(chained)
            else:
                out.extend(body_lines(f"{pad}else", s.else_, depth))
        return out
    if isinstance(s, A.Case):
        out = [f"{pad}case ({expr_str(s.subject)})"]
        for it in s.items:
            label = "default" if it.is_default else ", ".join(expr_str(x) for x in it.labels)
            if isinstance(it.body, (A.Assign, A.Null)):
                out.append(f"{pad}{INDENT}{label}: {stmt_lines(it.body, 0)[0]}")
            else:
                out.extend(body_lines(f"{pad}{INDENT}{label}:", it.body, depth + 1))
        out.append(f"{pad}endcase")
        return out
    if isinstance(s, A.For):
        head = f"{pad}for ({assign_str(s.init)}; {expr_str(s.cond)}; {assign_str(s.step)})"
        return body_lines(head, s.body, depth)
    raise TypeError(f"not a statement: {s!r}")


def _block(s: A.Block, depth: int) -> list[str]:
    pad = INDENT * depth
    out = [f"{pad}begin"]
    for x in s.stmts:
        out.extend(stmt_lines(x, depth + 1))
    out.append(f"{pad}end")
    return out


def item_lines(it: A.Item) -> list[str]:
    if isinstance(it, A.Decl):
        return [f"{INDENT}{decl_head(it)} {', '.join(declarator_str(d) for d in it.names)};"]
    if isinstance(it, A.ContAssign):
        return [f"{INDENT}assign {expr_str(it.lhs)} = {expr_str(it.rhs)};"]
    if isinstance(it, A.Always):
        if it.star:
            sens = "@(*)"
        else:
            sens = "@(" + " or ".join(f"{s.edge} {s.name}" if s.edge else s.name for s in it.sens) + ")"
        return body_lines(f"{INDENT}always {sens}", it.body, 1)
    if isinstance(it, A.Instance):
        if not it.conns:
            return [f"{INDENT}{it.module} {it.name}();"]
        out = [f"{INDENT}{it.module} {it.name} ("]
        for i, c in enumerate(it.conns):
            sep = "," if i < len(it.conns) - 1 else ""
            expr = expr_str(c.expr) if c.expr is not None else ""
            out.append(f"{INDENT * 2}.{c.port}({expr}){sep}")
        out.append(f"{INDENT});")
        return out
    raise TypeError(f"not a module item: {it!r}")


def module_lines(m: A.Module) -> list[str]:
    if m.ansi and m.port_decls:
        out = [f"module {m.name} ("]
        for i, d in enumerate(m.port_decls):
            sep = "," if i < len(m.port_decls) - 1 else ""
            out.append(f"{INDENT}{decl_head(d)} {', '.join(dn.name for dn in d.names)}{sep}")
        out.append(");")
    elif m.port_names:
        out = [f"module {m.name}({', '.join(m.port_names)});"]
    else:
        out = [f"module {m.name};"]
    for it in m.items:
        out.extend(item_lines(it))
    out.append("endmodule")
    return out


def print_design(design: A.Design) -> str:
    chunks = ["\n".join(module_lines(m)) for m in design.modules]
    return "\n\n".join(chunks) + "\n"

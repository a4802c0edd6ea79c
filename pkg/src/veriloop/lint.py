"""Static warnings, template fixes, and the syntax/warning pre-processing loop."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator

from .frontend import ast as A
from .frontend import print_design, try_parse
from .frontend.diagnostics import Diagnostic
from .frontend.elaborate import try_elaborate
from .frontend.source import SourceFile
from .frontend.widths import const_value, self_width

if TYPE_CHECKING:
    from .agent.backends import RepairBackend

FIXABLE = {"W1", "W2", "W3"}
RESET_NAME = re.compile(r"rst|reset", re.I)


@dataclass(frozen=True)
class Warning:
    code: str
    line: int
    col: int
    message: str
    module: str
    path: A.Path = field(default=(), compare=True)
    fix: tuple[str, str] | None = None  # W3: (edge, signal) to add

    @property
    def fixable(self) -> bool:
        return self.code in FIXABLE

    @property
    def severity(self) -> str:
        return "warning"

    def to_json(self) -> str:
        return json.dumps({"severity": "warning", "line": self.line, "col": self.col, "code": self.code, "message": self.message})

    def human(self, path: str = "") -> str:
        prefix = f"{path}:" if path else ""
        return f"{prefix}{self.line}:{self.col}: warning: [{self.code}] {self.message}"

    def key(self) -> tuple[str, str, A.Path]:
        return (self.code, self.module, self.path)


class NotFixable(ValueError):
    pass


def _stmts_with_paths(node: A.Stmt, path: A.Path, skip_for_control: bool) -> Iterator[tuple[A.Path, A.Stmt]]:
    yield path, node
    if isinstance(node, A.Block):
        for i, s in enumerate(node.stmts):
            yield from _stmts_with_paths(s, path + (("stmts", i),), skip_for_control)
    elif isinstance(node, A.If):
        yield from _stmts_with_paths(node.then, path + (("then", None),), skip_for_control)
        if node.else_ is not None:
            yield from _stmts_with_paths(node.else_, path + (("else_", None),), skip_for_control)
    elif isinstance(node, A.Case):
        for i, it in enumerate(node.items):
            yield from _stmts_with_paths(it.body, path + (("items", i), ("body", None)), skip_for_control)
    elif isinstance(node, A.For):
        if not skip_for_control:
            yield path + (("init", None),), node.init
            yield path + (("step", None),), node.step
        yield from _stmts_with_paths(node.body, path + (("body", None),), skip_for_control)


def _reset_test(cond: A.Expr) -> tuple[str, str] | None:
    """(signal, edge) when ``cond`` tests a reset-named signal."""
    if isinstance(cond, A.Unary) and cond.op in ("!", "~") and isinstance(cond.operand, A.Ident):
        return (cond.operand.name, "negedge") if RESET_NAME.search(cond.operand.name) else None
    if isinstance(cond, A.Ident):
        return (cond.name, "posedge") if RESET_NAME.search(cond.name) else None
    if isinstance(cond, A.Binary) and cond.op in ("==", "!=") and isinstance(cond.left, A.Ident):
        c = const_value(cond.right)
        if c is None or not RESET_NAME.search(cond.left.name):
            return None
        active_high = (c != 0) == (cond.op == "==")
        return cond.left.name, "posedge" if active_high else "negedge"
    return None


def _first_if(body: A.Stmt) -> A.If | None:
    if isinstance(body, A.If):
        return body
    if isinstance(body, A.Block) and body.stmts and isinstance(body.stmts[0], A.If):
        return body.stmts[0]
    return None


def _module_lookup(mod: A.Module):
    nets = mod.nets()

    def lookup(name: str) -> tuple[int, bool]:
        n = nets.get(name)
        return (n.width, n.array is not None) if n else (1, False)

    return nets, lookup


def lint_module(mod: A.Module, mi: int, design: A.Design) -> list[Warning]:
    out: list[Warning] = []
    nets, lookup = _module_lookup(mod)
    driven: set[str] = set()
    read: dict[str, A.Span] = {}

    def note_reads(e: A.Expr | None, span: A.Span) -> None:
        if e is None:
            return
        for _, n in A.walk(e):
            if isinstance(n, A.Ident):
                read.setdefault(n.name, n.span if n.span.line else span)

    def check_width(s: A.Assign | A.ContAssign, path: A.Path) -> None:
        lw = self_width(s.lhs, lookup)
        rw = self_width(s.rhs, lookup, flexible_unsized=True)
        if rw > lw:
            out.append(Warning("W4", s.span.line, s.span.col, f"assignment truncates a {rw}-bit value to {lw} bits", mod.name, path))

    for ii, it in enumerate(mod.items):
        ipath: A.Path = (("modules", mi), ("items", ii))
        if isinstance(it, A.ContAssign):
            driven.update(A.lvalue_bases(it.lhs))
            note_reads(it.rhs, it.span)
            for n in A.lvalue_reads(it.lhs):
                read.setdefault(n, it.span)
            check_width(it, ipath)
        elif isinstance(it, A.Instance):
            sub = design.module(it.module)
            ports = {p.name: p for p in sub.ports} if sub else {}
            for ci, c in enumerate(it.conns):
                p = ports.get(c.port)
                if c.expr is None or p is None:
                    continue
                if p.direction == "output":
                    driven.update(A.lvalue_bases(c.expr))
                else:
                    note_reads(c.expr, c.span)
                cw = self_width(c.expr, lookup, flexible_unsized=True)
                if cw != p.width:
                    out.append(
                        Warning(
                            "W4",
                            c.span.line,
                            c.span.col,
                            f"port '{c.port}' of '{it.name}' is {p.width} bits but the connection is {cw} bits",
                            mod.name,
                            ipath + (("conns", ci),),
                        )
                    )
        elif isinstance(it, A.Always):
            body_path = ipath + (("body", None),)
            for si in it.sens:
                read.setdefault(si.name, si.span)
            for path, s in _stmts_with_paths(it.body, body_path, skip_for_control=it.edge_triggered):
                if isinstance(s, A.Assign):
                    driven.update(A.lvalue_bases(s.lhs))
                    note_reads(s.rhs, s.span)
                    for n in A.lvalue_reads(s.lhs):
                        read.setdefault(n, s.span)
                    check_width(s, path)
                    if it.combinational and not s.blocking:
                        out.append(Warning("W1", s.span.line, s.span.col, "nonblocking assignment in a combinational block", mod.name, path))
                    if it.edge_triggered and s.blocking:
                        out.append(Warning("W2", s.span.line, s.span.col, "blocking assignment in an edge-triggered block", mod.name, path))
                elif isinstance(s, A.If):
                    note_reads(s.cond, s.span)
                elif isinstance(s, A.Case):
                    note_reads(s.subject, s.span)
                    for ci in s.items:
                        for lab in ci.labels:
                            note_reads(lab, ci.span)
                    if s.default is None and not _case_full(s, lookup):
                        out.append(Warning("W6", s.span.line, s.span.col, "case statement without default does not cover every value", mod.name, path))
                elif isinstance(s, A.For):
                    driven.update(A.lvalue_bases(s.init.lhs))
                    note_reads(s.cond, s.span)
                    note_reads(s.init.rhs, s.span)
                    note_reads(s.step.rhs, s.span)
            if it.edge_triggered:
                first = _first_if(it.body)
                test = _reset_test(first.cond) if first is not None else None
                edged = {si.name for si in it.sens if si.edge}
                if test is not None and test[0] not in edged:
                    sig, edge = test
                    out.append(
                        Warning(
                            "W3",
                            it.span.line,
                            it.span.col,
                            f"asynchronous reset '{sig}' is tested but missing from the sensitivity list (add '{edge} {sig}')",
                            mod.name,
                            ipath,
                            (edge, sig),
                        )
                    )
    for name in sorted(read):
        n = nets.get(name)
        if n is None or n.direction == "input" or name in driven:
            continue
        sp = read[name]
        out.append(Warning("W5", sp.line, sp.col, f"signal '{name}' is read but never driven", mod.name, (("modules", mi), ("net", name))))  # type: ignore[arg-type]
    return out


def _case_full(s: A.Case, lookup) -> bool:
    w = max([self_width(s.subject, lookup)] + [self_width(lab, lookup) for it in s.items for lab in it.labels])
    if w > 16:
        return False
    seen = set()
    for it in s.items:
        for lab in it.labels:
            c = const_value(lab)
            if c is None:
                return False
            seen.add(c & ((1 << w) - 1))
    return len(seen) == (1 << w)


def lint(design: A.Design | object) -> list[Warning]:
    d = design.design if hasattr(design, "design") else design
    out: list[Warning] = []
    for mi, mod in enumerate(d.modules):  # type: ignore[union-attr]
        out.extend(lint_module(mod, mi, d))  # type: ignore[arg-type]
    return sorted(out, key=lambda w: (w.line, w.col, w.code, w.message))


def apply_templates(design: A.Design, warns: list[Warning]) -> A.Design:
    """Rewrite each warned node: W1 ``<=``→``=``, W2 ``=``→``<=``, W3 add the missing edge."""
    for w in warns:
        if not w.fixable:
            raise NotFixable(f"{w.code} has no fix template")
    for w in warns:
        node = A.get_at(design, w.path)
        if w.code in ("W1", "W2"):
            if not isinstance(node, A.Assign):
                raise NotFixable(f"{w.code} does not point at an assignment")
            new = dataclasses.replace(node, blocking=(w.code == "W1"))
        else:
            if not isinstance(node, A.Always) or w.fix is None:
                raise NotFixable("W3 does not point at an always block")
            edge, sig = w.fix
            if any(si.name == sig and si.edge for si in node.sens):
                continue
            kept = tuple(si for si in node.sens if si.name != sig)
            new = dataclasses.replace(node, sens=kept + (A.SensItem(edge, sig, node.span),), star=False)
        design = A.replace_at(design, w.path, new)
    return design


# ------------------------------------------------------------ pre-processing


@dataclass
class PreprocessRound:
    round: int
    errors: list[Diagnostic]
    warnings: list[Warning]
    action: str  # clean | agent | templates | none
    agent_calls: int = 0
    detail: str = ""
    patch_errors: list[dict[str, object]] = field(default_factory=list)

    def to_json(self) -> dict[str, object]:
        return {
            "round": self.round,
            "errors": [json.loads(d.to_json()) for d in self.errors],
            "warnings": [json.loads(w.to_json()) for w in self.warnings],
            "action": self.action,
            "agent_calls": self.agent_calls,
            "detail": self.detail,
            "patch_errors": self.patch_errors,
        }


@dataclass
class PreprocessResult:
    design: A.Design
    text: str
    log: list[PreprocessRound]

    @property
    def agent_calls(self) -> int:
        return sum(r.agent_calls for r in self.log)

    @property
    def rounds(self) -> int:
        return len(self.log)

    @property
    def changed(self) -> bool:
        return any(r.action in ("agent", "templates") for r in self.log)


class PreprocessFailed(Exception):
    def __init__(self, diagnostics: list[Diagnostic], log: list[PreprocessRound], text: str):
        super().__init__("; ".join(d.message for d in diagnostics[:3]) or "pre-processing failed")
        self.diagnostics = diagnostics
        self.log = log
        self.text = text


def check_text(text: str, path: str = "<dut>", top: str | None = None) -> tuple[A.Design | None, list[Diagnostic]]:
    """Parse and elaborate; returns (design, errors)."""
    design, diags = try_parse(SourceFile.from_text(text, path), top)
    if design is None:
        return None, list(diags)
    ed, ediags = try_elaborate(design)
    if ed is None:
        return None, list(ediags)
    return design, []


def preprocess(
    src: SourceFile | str,
    agent: "RepairBackend | None",
    max_rounds: int = 5,
    spec_text: str = "",
    top: str | None = None,
    mode: str = "pair",
    damage_repairs: list | None = None,
) -> PreprocessResult:
    """Alternate agent repairs of errors and template fixes of warnings until clean."""
    from .agent import RepairRequest, apply_patchset, request_patchset

    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    if isinstance(src, str):
        src = SourceFile.from_text(src)
    text = src.text
    log: list[PreprocessRound] = []
    for rnd in range(1, max_rounds + 2):
        design, errors = check_text(text, src.path, top)
        warns = lint(design) if design is not None else []
        fixable = [w for w in warns if w.fixable]
        if design is not None and not fixable:
            log.append(PreprocessRound(rnd, [], warns, "clean"))
            return PreprocessResult(design, text, log)
        if rnd > max_rounds:
            break
        if errors:
            calls = 0
            detail = ""
            perrs: list[dict[str, object]] = []
            if agent is not None:
                req = RepairRequest(spec_text, text, "\n".join(d.to_json() for d in errors), list(damage_repairs or []), mode, profile="syntax-fixer")
                ps, calls, detail = request_patchset(agent, req)
                if ps is not None:
                    text, errs = apply_patchset(text, ps)
                    perrs = [e.to_json() for e in errs]
                    if errs:
                        detail = "; ".join(str(e) for e in errs)
            log.append(PreprocessRound(rnd, errors, warns, "agent", calls, detail, perrs))
        else:
            assert design is not None
            design = apply_templates(design, fixable)
            text = print_design(design)
            log.append(PreprocessRound(rnd, [], warns, "templates", 0, ",".join(sorted({w.code for w in fixable}))))
    if design is None:
        raise PreprocessFailed(errors, log, text)
    log.append(PreprocessRound(len(log) + 1, [], warns, "none", 0, "fixable warnings remain"))
    return PreprocessResult(design, text, log)

"""Hierarchy flattening and connection checks.

Every signal of every instance gets a flat dotted path (``u1.sum``); top-level
signals keep their plain names. Port bindings become synthetic continuous
assignments so that downstream passes see a single flat netlist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A
from .diagnostics import (
    L_BAD_OUTPUT_CONN,
    L_DRIVER_KIND,
    L_NO_TOP,
    L_RECURSION,
    L_UNCONNECTED,
    L_UNKNOWN_MODULE,
    L_UNKNOWN_PORT,
    ElabDiagnostic,
)
from .widths import self_width


@dataclass(frozen=True)
class Signal:
    path: str
    msb: int
    lsb: int
    kind: str  # wire | reg | integer
    direction: str  # input | output | internal (only top-level ports are input/output)
    array: A.Range | None = None
    instance: str = ""

    @property
    def width(self) -> int:
        return abs(self.msb - self.lsb) + 1

    @property
    def depth(self) -> int:
        return self.array.width if self.array else 0

    @property
    def array_lo(self) -> int:
        return min(self.array.msb, self.array.lsb) if self.array else 0


@dataclass(frozen=True)
class Process:
    """One flat behavioural unit.

    kind: ``assign`` (continuous assign), ``port`` (port binding), ``comb``
    (level-sensitive always) or ``seq`` (edge-triggered always).
    """

    kind: str
    body: A.Stmt
    sens: tuple[A.SensItem, ...] = ()
    span: A.Span = A.NO_SPAN
    instance: str = ""
    module: str = ""

    @property
    def combinational(self) -> bool:
        return self.kind != "seq"


@dataclass
class ElaboratedDesign:
    design: A.Design
    top: str
    signals: dict[str, Signal]
    processes: list[Process]
    instances: list[tuple[str, str]]  # (path, module name); top is ("", top)
    warnings: list[ElabDiagnostic] = field(default_factory=list)

    @property
    def top_module(self) -> A.Module:
        return self.design.top_module

    @property
    def inputs(self) -> list[Signal]:
        return [self.signals[p.name] for p in self.top_module.ports if p.direction == "input"]

    @property
    def outputs(self) -> list[Signal]:
        return [self.signals[p.name] for p in self.top_module.ports if p.direction == "output"]

    def width_of(self, name: str) -> tuple[int, bool]:
        s = self.signals[name]
        return s.width, s.array is not None

    def expr_width(self, expr: A.Expr) -> int:
        return self_width(expr, self.width_of)

    @property
    def is_combinational(self) -> bool:
        return not any(p.kind == "seq" for p in self.processes)

    def port_signature(self) -> list[tuple[str, str, int]]:
        return [(p.name, p.direction, p.width) for p in self.top_module.ports]


class ElaborationError(Exception):
    def __init__(self, diagnostics: list[ElabDiagnostic]):
        super().__init__("; ".join(d.message for d in diagnostics))
        self.diagnostics = diagnostics


def _is_lvalue(e: A.Expr) -> bool:
    if isinstance(e, A.Ident):
        return True
    if isinstance(e, (A.Index, A.PartSelect)):
        return _is_lvalue(e.target)
    if isinstance(e, A.Concat):
        return all(_is_lvalue(p) for p in e.parts)
    return False


def try_elaborate(design: A.Design, top: str | None = None) -> tuple[ElaboratedDesign | None, list[ElabDiagnostic]]:
    top = top or design.top
    diags: list[ElabDiagnostic] = []
    warnings: list[ElabDiagnostic] = []
    if design.module(top) is None:
        return None, [ElabDiagnostic(1, 1, L_NO_TOP, f"top module '{top}' not found")]
    signals: dict[str, Signal] = {}
    processes: list[Process] = []
    instances: list[tuple[str, str]] = []

    def flatten(mod: A.Module, prefix: str, stack: tuple[str, ...]) -> None:
        instances.append((prefix.rstrip("."), mod.name))
        nets = mod.nets()
        for n in nets.values():
            direction = n.direction if not prefix else "internal"
            signals[prefix + n.name] = Signal(prefix + n.name, n.msb, n.lsb, n.kind, direction, n.array, prefix.rstrip("."))
        ren = (lambda s: prefix + s) if prefix else (lambda s: s)

        def lookup(name: str) -> tuple[int, bool]:
            n = nets.get(name)
            if n is None:
                return 1, False
            return n.width, n.array is not None

        for it in mod.items:
            if isinstance(it, A.ContAssign):
                body = A.Assign(A.map_idents(it.lhs, ren), A.map_idents(it.rhs, ren), True, it.span)
                processes.append(Process("assign", body, (), it.span, prefix.rstrip("."), mod.name))
            elif isinstance(it, A.Always):
                sens = tuple(A.map_idents(s, ren) for s in it.sens)
                kind = "seq" if it.edge_triggered else "comb"
                processes.append(Process(kind, A.map_idents(it.body, ren), sens, it.span, prefix.rstrip("."), mod.name))
            elif isinstance(it, A.Instance):
                sub = design.module(it.module)
                if sub is None:
                    diags.append(ElabDiagnostic(it.span.line, it.span.col, L_UNKNOWN_MODULE, f"instantiation of undeclared module '{it.module}'"))
                    continue
                if sub.name in stack:
                    diags.append(ElabDiagnostic(it.span.line, it.span.col, L_RECURSION, f"recursive instantiation of '{sub.name}'"))
                    continue
                sub_prefix = f"{prefix}{it.name}."
                sub_ports = {p.name: p for p in sub.ports}
                connected: set[str] = set()
                for c in it.conns:
                    p = sub_ports.get(c.port)
                    if p is None:
                        diags.append(
                            ElabDiagnostic(c.span.line, c.span.col, L_UNKNOWN_PORT, f"module '{sub.name}' has no port named '{c.port}'")
                        )
                        continue
                    if c.expr is None:
                        continue
                    connected.add(c.port)
                    cw = self_width(c.expr, lookup, flexible_unsized=True)
                    if cw != p.width:
                        warnings.append(
                            ElabDiagnostic(
                                c.span.line,
                                c.span.col,
                                "W4",
                                f"port '{c.port}' of '{it.name}' is {p.width} bits but the connection is {cw} bits",
                                "warning",
                            )
                        )
                    inner = A.Ident(sub_prefix + c.port, c.span)
                    outer = A.map_idents(c.expr, ren)
                    if p.direction == "input":
                        body = A.Assign(inner, outer, True, c.span)
                    else:
                        if not _is_lvalue(c.expr):
                            diags.append(
                                ElabDiagnostic(c.span.line, c.span.col, L_BAD_OUTPUT_CONN, f"output port '{c.port}' must connect to a net, not an expression")
                            )
                            continue
                        body = A.Assign(outer, inner, True, c.span)
                    processes.append(Process("port", body, (), c.span, prefix.rstrip("."), mod.name))
                for p in sub.ports:
                    if p.direction == "input" and p.name not in connected:
                        diags.append(
                            ElabDiagnostic(it.span.line, it.span.col, L_UNCONNECTED, f"input port '{p.name}' of instance '{it.name}' is unconnected")
                        )
                flatten(sub, sub_prefix, stack + (sub.name,))

    flatten(design.module(top), "", (top,))  # type: ignore[arg-type]

    # One driver kind per signal.
    kinds: dict[str, set[str]] = {}
    first_span: dict[str, A.Span] = {}
    for proc in processes:
        if proc.kind == "seq" or proc.kind == "comb":
            k = "procedural"
            targets = [s.lhs for s in A.iter_stmts(proc.body) if isinstance(s, A.Assign)]
        else:
            k = "continuous" if proc.kind == "assign" else "instance"
            targets = [proc.body.lhs]  # type: ignore[union-attr]
        for t in targets:
            for b in A.lvalue_bases(t):
                kinds.setdefault(b, set()).add(k)
                first_span.setdefault(b, proc.span)
    for name in sorted(kinds):
        if len(kinds[name]) > 1:
            sp = first_span[name]
            diags.append(
                ElabDiagnostic(sp.line, sp.col, L_DRIVER_KIND, f"signal '{name}' has multiple driver kinds: {', '.join(sorted(kinds[name]))}")
            )
    if diags:
        return None, sorted(diags)
    return ElaboratedDesign(design, top, signals, processes, instances, sorted(warnings)), []


def elaborate(design: A.Design, top: str | None = None) -> ElaboratedDesign:
    ed, diags = try_elaborate(design, top)
    if ed is None:
        raise ElaborationError(diags)
    return ed

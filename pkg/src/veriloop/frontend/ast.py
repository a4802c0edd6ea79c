"""AST for the synthesizable Verilog subset.

Nodes are frozen dataclasses. Every node carries a ``span`` that is excluded
from equality, so two designs compare equal when they are structurally equal
regardless of formatting.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Any, Iterator, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int

    def lines(self) -> range:
        return range(self.line, self.end_line + 1)


NO_SPAN = Span(0, 0, 0)


def _span() -> Any:
    return field(default=NO_SPAN, compare=False, repr=False)


class Node:
    span: Span


# ---------------------------------------------------------------- expressions

_SIZED = re.compile(r"(?:(?P<size>[0-9][0-9_]*)\s*)?'(?P<base>[bBoOdDhH])\s*(?P<digits>[0-9a-fA-FxXzZ_?]+)")


@dataclass(frozen=True)
class Number(Node):
    """A literal, kept verbatim so that printing never changes its spelling."""

    text: str
    span: Span = _span()

    @property
    def sized(self) -> bool:
        m = _SIZED.fullmatch(self.text)
        return bool(m and m.group("size"))

    @property
    def based(self) -> bool:
        return "'" in self.text

    @property
    def base(self) -> str:
        m = _SIZED.fullmatch(self.text)
        return m.group("base").lower() if m else "d"

    @property
    def width(self) -> int | None:
        """Declared size; None for unsized literals (32 bits in expressions)."""
        m = _SIZED.fullmatch(self.text)
        if m and m.group("size"):
            return int(m.group("size").replace("_", ""))
        return None

    @property
    def value_xmask(self) -> tuple[int, int]:
        return literal_value(self.text)

    @property
    def value(self) -> int:
        return self.value_xmask[0]


def literal_value(text: str) -> tuple[int, int]:
    """Decode a literal into (value, xmask); z and ? fold into x."""
    m = _SIZED.fullmatch(text)
    if m is None:
        return int(text.replace("_", "")), 0
    base = m.group("base").lower()
    digits = m.group("digits").lower().replace("_", "")
    size = int(m.group("size").replace("_", "")) if m.group("size") else 32
    if base == "d":
        if any(c in "xz?" for c in digits):
            mask = (1 << size) - 1
            return 0, mask
        return int(digits) & ((1 << size) - 1), 0
    bits_per = {"b": 1, "o": 3, "h": 4}[base]
    val = 0
    xm = 0
    for c in digits:
        val <<= bits_per
        xm <<= bits_per
        if c in "xz?":
            xm |= (1 << bits_per) - 1
        else:
            val |= int(c, 16)
    # Verilog extends a leading x digit to the full width.
    ndig = len(digits) * bits_per
    if digits and digits[0] in "xz?" and size > ndig:
        xm |= ((1 << size) - 1) ^ ((1 << ndig) - 1)
    mask = (1 << size) - 1
    return val & mask & ~xm, xm & mask


def format_literal(width: int | None, base: str, value: int) -> str:
    """Spell a known value as a literal in the given base."""
    if width is None:
        return str(value)
    value &= (1 << width) - 1
    if base == "b":
        return f"{width}'b{value:0{width}b}" if width <= 8 else f"{width}'b{value:b}"
    if base == "h":
        return f"{width}'h{value:x}"
    if base == "o":
        return f"{width}'o{value:o}"
    return f"{width}'d{value}"


@dataclass(frozen=True)
class Ident(Node):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Index(Node):
    """Bit select ``a[i]`` or memory word ``mem[i]``."""

    target: "Expr"
    index: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class PartSelect(Node):
    target: "Expr"
    msb: "Expr"
    lsb: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Concat(Node):
    parts: tuple["Expr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Repl(Node):
    count: "Expr"
    value: Concat
    span: Span = _span()


@dataclass(frozen=True)
class Unary(Node):
    op: str
    operand: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Ternary(Node):
    cond: "Expr"
    if_true: "Expr"
    if_false: "Expr"
    span: Span = _span()


Expr = Union[Number, Ident, Index, PartSelect, Concat, Repl, Unary, Binary, Ternary]

# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Assign(Node):
    lhs: Expr
    rhs: Expr
    blocking: bool
    span: Span = _span()


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: "Stmt"
    else_: "Stmt | None" = None
    span: Span = _span()


@dataclass(frozen=True)
class CaseItem(Node):
    labels: tuple[Expr, ...]  # empty for ``default``
    body: "Stmt"
    span: Span = _span()

    @property
    def is_default(self) -> bool:
        return not self.labels


@dataclass(frozen=True)
class Case(Node):
    subject: Expr
    items: tuple[CaseItem, ...]
    span: Span = _span()

    @property
    def default(self) -> CaseItem | None:
        for it in self.items:
            if it.is_default:
                return it
        return None


@dataclass(frozen=True)
class For(Node):
    init: Assign
    cond: Expr
    step: Assign
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Block(Node):
    stmts: tuple["Stmt", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Null(Node):
    span: Span = _span()


Stmt = Union[Assign, If, Case, For, Block, Null]

# --------------------------------------------------------------- module items


@dataclass(frozen=True)
class Range(Node):
    msb: int
    lsb: int
    span: Span = _span()

    @property
    def width(self) -> int:
        return abs(self.msb - self.lsb) + 1


@dataclass(frozen=True)
class Declarator(Node):
    name: str
    array: Range | None = None
    span: Span = _span()


@dataclass(frozen=True)
class Decl(Node):
    """``input``/``output``/``wire``/``reg``/``integer`` declaration."""

    direction: str | None  # "input" | "output" | None
    kind: str | None  # "wire" | "reg" | "integer" | None (implicit wire)
    range: Range | None
    names: tuple[Declarator, ...]
    span: Span = _span()

    @property
    def width(self) -> int:
        if self.kind == "integer":
            return 32
        return self.range.width if self.range else 1


@dataclass(frozen=True)
class ContAssign(Node):
    lhs: Expr
    rhs: Expr
    span: Span = _span()


@dataclass(frozen=True)
class SensItem(Node):
    edge: str | None  # "posedge" | "negedge" | None (level)
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Always(Node):
    star: bool
    sens: tuple[SensItem, ...]
    body: Stmt
    span: Span = _span()

    @property
    def edge_triggered(self) -> bool:
        return any(s.edge for s in self.sens)

    @property
    def combinational(self) -> bool:
        return not self.edge_triggered


@dataclass(frozen=True)
class PortConn(Node):
    port: str
    expr: Expr | None
    span: Span = _span()


@dataclass(frozen=True)
class Instance(Node):
    module: str
    name: str
    conns: tuple[PortConn, ...]
    span: Span = _span()


Item = Union[Decl, ContAssign, Always, Instance]


@dataclass(frozen=True)
class PortDecl:
    """Resolved view of one port (not an AST node)."""

    name: str
    direction: str
    kind: str
    width: int
    msb: int
    lsb: int


@dataclass(frozen=True)
class NetDecl:
    """Resolved view of one declared signal (ports included)."""

    name: str
    direction: str  # input | output | internal
    kind: str  # wire | reg | integer
    msb: int
    lsb: int
    array: Range | None = None

    @property
    def width(self) -> int:
        return abs(self.msb - self.lsb) + 1


@dataclass(frozen=True)
class Module(Node):
    name: str
    ansi: bool
    port_names: tuple[str, ...]  # header order (non-ANSI)
    port_decls: tuple[Decl, ...]  # ANSI header declarations
    items: tuple[Item, ...]
    span: Span = _span()

    def decls(self) -> Iterator[Decl]:
        yield from self.port_decls
        for it in self.items:
            if isinstance(it, Decl):
                yield it

    def nets(self) -> dict[str, NetDecl]:
        """Merge declarations into one record per signal name.

        ``output q; reg q;`` collapses into a single output reg.
        """
        out: dict[str, NetDecl] = {}
        for d in self.decls():
            for dn in d.names:
                prev = out.get(dn.name)
                direction = d.direction or (prev.direction if prev else "internal")
                kind = d.kind or (prev.kind if prev else "wire")
                if prev is not None and d.kind is None:
                    kind = prev.kind
                if d.kind == "integer":
                    msb, lsb = 31, 0
                elif d.range is not None:
                    msb, lsb = d.range.msb, d.range.lsb
                elif prev is not None:
                    msb, lsb = prev.msb, prev.lsb
                else:
                    msb, lsb = 0, 0
                out[dn.name] = NetDecl(dn.name, direction, kind, msb, lsb, dn.array or (prev.array if prev else None))
        return out

    def port_order(self) -> tuple[str, ...]:
        if self.ansi:
            return tuple(dn.name for d in self.port_decls for dn in d.names)
        return self.port_names

    @property
    def ports(self) -> list[PortDecl]:
        nets = self.nets()
        res = []
        for name in self.port_order():
            n = nets.get(name)
            if n is None or n.direction == "internal":
                continue
            res.append(PortDecl(name, n.direction, n.kind, n.width, n.msb, n.lsb))
        return res


@dataclass(frozen=True)
class Design(Node):
    modules: tuple[Module, ...]
    top: str
    span: Span = _span()

    def module(self, name: str) -> Module | None:
        for m in self.modules:
            if m.name == name:
                return m
        return None

    @property
    def top_module(self) -> Module:
        m = self.module(self.top)
        if m is None:
            raise KeyError(self.top)
        return m


# -------------------------------------------------------------- tree utilities

Path = tuple[tuple[str, int | None], ...]


def children(node: Any) -> Iterator[tuple[tuple[str, int | None], Any]]:
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            yield (f.name, None), v
        elif isinstance(v, tuple):
            for i, e in enumerate(v):
                if isinstance(e, Node):
                    yield (f.name, i), e


def walk(node: Any, path: Path = ()) -> Iterator[tuple[Path, Any]]:
    """Pre-order traversal yielding (path, node)."""
    yield path, node
    for step, child in children(node):
        yield from walk(child, path + (step,))


def get_at(root: Any, path: Path) -> Any:
    node = root
    for name, idx in path:
        node = getattr(node, name)
        if idx is not None:
            node = node[idx]
    return node


def replace_at(root: Any, path: Path, new: Any) -> Any:
    """Return a copy of ``root`` with the node at ``path`` replaced."""
    if not path:
        return new
    (name, idx), rest = path[0], path[1:]
    child = getattr(root, name)
    if idx is None:
        return dataclasses.replace(root, **{name: replace_at(child, rest, new)})
    items = list(child)
    items[idx] = replace_at(items[idx], rest, new)
    return dataclasses.replace(root, **{name: tuple(items)})


def identifiers(expr: Any) -> Iterator[str]:
    for _, n in walk(expr):
        if isinstance(n, Ident):
            yield n.name


def lvalue_bases(lhs: Any) -> list[str]:
    """Names written by an assignment target."""
    if isinstance(lhs, Ident):
        return [lhs.name]
    if isinstance(lhs, (Index, PartSelect)):
        return lvalue_bases(lhs.target)
    if isinstance(lhs, Concat):
        out: list[str] = []
        for p in lhs.parts:
            out.extend(lvalue_bases(p))
        return out
    return []


def lvalue_reads(lhs: Any) -> list[str]:
    """Names read while computing an assignment target (e.g. index expressions)."""
    if isinstance(lhs, Index):
        return lvalue_reads(lhs.target) + list(identifiers(lhs.index))
    if isinstance(lhs, PartSelect):
        return lvalue_reads(lhs.target)
    if isinstance(lhs, Concat):
        out: list[str] = []
        for p in lhs.parts:
            out.extend(lvalue_reads(p))
        return out
    return []


def iter_stmts(stmt: Any) -> Iterator[Any]:
    """All statements nested in ``stmt`` (including itself), pre-order."""
    yield stmt
    if isinstance(stmt, Block):
        for s in stmt.stmts:
            yield from iter_stmts(s)
    elif isinstance(stmt, If):
        yield from iter_stmts(stmt.then)
        if stmt.else_ is not None:
            yield from iter_stmts(stmt.else_)
    elif isinstance(stmt, Case):
        for it in stmt.items:
            yield from iter_stmts(it.body)
    elif isinstance(stmt, For):
        yield stmt.init
        yield from iter_stmts(stmt.body)
        yield stmt.step


def map_idents(node: Any, fn: Any) -> Any:
    """Rebuild ``node`` with every identifier name (and sensitivity name) mapped by ``fn``."""
    if isinstance(node, Ident):
        return Ident(fn(node.name), node.span)
    if isinstance(node, SensItem):
        return SensItem(node.edge, fn(node.name), node.span)
    if not isinstance(node, Node):
        return node
    changes = {}
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            changes[f.name] = map_idents(v, fn)
        elif isinstance(v, tuple) and v and isinstance(v[0], Node):
            changes[f.name] = tuple(map_idents(e, fn) for e in v)
    return dataclasses.replace(node, **changes) if changes else node

"""Translate an elaborated design into straight-line Python.

Each signal owns one slot in two parallel lists ``V`` (known bits) and ``X``
(unknown-bit mask); memory words take one slot each. Expressions compile to
assignments over local temporaries following unsigned Verilog width rules:
arithmetic and bitwise operands take the context width, comparison operands
the wider of the two, and logical operands, reductions and shift amounts are
self-determined.

Control flow on an unknown condition is pessimistic: every target the
statement could write becomes all-X. That keeps simulation X-monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..frontend import ast as A
from ..frontend.elaborate import ElaboratedDesign, Process
from ..frontend.widths import COMPARE_OPS, SHIFT_OPS, const_value, is_signed, self_width

LOOP_LIMIT = 1 << 16


class SimCompileError(Exception):
    pass


@dataclass(frozen=True)
class SlotInfo:
    slot: int
    width: int
    depth: int = 0  # 0 for plain vectors
    lo: int = 0  # lowest array index
    lsb: int = 0
    signed: bool = False

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1


@dataclass
class Layout:
    signals: dict[str, SlotInfo] = field(default_factory=dict)
    size: int = 0
    inputs: tuple[str, ...] = ()

    @classmethod
    def of(cls, ed: ElaboratedDesign) -> "Layout":
        lay = cls()
        for name, s in ed.signals.items():
            depth = s.depth
            lay.signals[name] = SlotInfo(lay.size, s.width, depth, s.array_lo, min(s.msb, s.lsb), s.kind == "integer")
            lay.size += max(depth, 1)
        lay.inputs = tuple(s.path for s in ed.inputs)
        return lay

    def initial_x(self) -> list[int]:
        out = [0] * self.size
        for info in self.signals.values():
            for k in range(max(info.depth, 1)):
                out[info.slot + k] = info.mask
        return out

    def lookup(self, name: str) -> tuple[int, bool]:
        info = self.signals[name]
        return info.width, info.depth > 0

    def signed(self, name: str) -> bool:
        info = self.signals.get(name)
        return bool(info and info.signed)


def _m(w: int) -> int:
    return (1 << w) - 1


class _Emitter:
    """Collects generated lines at a moving indentation level."""

    def __init__(self) -> None:
        self.lines: list[str] = []
        self.depth = 1
        self.counter = 0

    def emit(self, line: str) -> None:
        self.lines.append("    " * self.depth + line)

    def tmp(self) -> str:
        self.counter += 1
        return f"t{self.counter}"

    def indent(self) -> "_Indent":
        return _Indent(self)


class _Indent:
    def __init__(self, em: _Emitter) -> None:
        self.em = em

    def __enter__(self) -> None:
        self.em.depth += 1

    def __exit__(self, *exc: object) -> None:
        self.em.depth -= 1


class ExprCompiler:
    def __init__(self, layout: Layout, em: _Emitter) -> None:
        self.layout = layout
        self.em = em

    def width(self, e: A.Expr) -> int:
        return self_width(e, self.layout.lookup)

    def _pair(self, v: str, x: str) -> tuple[str, str]:
        """Bind an expression pair to fresh temporaries unless already atomic."""
        if (v.isidentifier() or v.isdigit()) and (x.isidentifier() or x.isdigit()):
            return v, x
        t = self.em.tmp()
        self.em.emit(f"{t}v = {v}")
        self.em.emit(f"{t}x = {x}")
        return f"{t}v", f"{t}x"

    def truth(self, e: A.Expr) -> str:
        """Compile to a 3-valued truth atom: 1, 0, or 2 for unknown."""
        c = const_value(e)
        if c is not None:
            return "1" if c else "0"
        v, x = self.ev(e, self.width(e))
        t = self.em.tmp()
        if x == "0":
            self.em.emit(f"{t} = 1 if {v} else 0")
        else:
            self.em.emit(f"{t} = 1 if {v} else (2 if {x} else 0)")
        return t

    def ev(self, e: A.Expr, w: int) -> tuple[str, str]:
        """Evaluate ``e`` in a context of width ``w`` (w >= self width)."""
        M = _m(w)
        em = self.em
        if isinstance(e, A.Number):
            v, x = e.value_xmask
            if e.width is None and not e.based and v >= (1 << 32):
                v &= _m(32)
            return str(v & M), str(x & M)
        if isinstance(e, A.Ident):
            info = self.layout.signals.get(e.name)
            if info is None:
                raise SimCompileError(f"unknown signal {e.name}")
            if info.depth:
                raise SimCompileError(f"memory '{e.name}' used without an index")
            t = em.tmp()
            em.emit(f"{t}v = V[{info.slot}]; {t}x = X[{info.slot}]")
            return f"{t}v", f"{t}x"
        if isinstance(e, A.Index):
            return self._index(e)
        if isinstance(e, A.PartSelect):
            m, l = const_value(e.msb), const_value(e.lsb)
            if m is None or l is None:
                raise SimCompileError("part-select bounds must be constant")
            base_v, base_x, lsb = self._base(e.target)
            sh = l - lsb
            pm = _m(abs(m - l) + 1)
            if sh < 0:
                raise SimCompileError("part-select out of range")
            return self._pair(f"({base_v} >> {sh}) & {pm}", f"({base_x} >> {sh}) & {pm}")
        if isinstance(e, A.Concat):
            vs, xs, off = [], [], 0
            for p in reversed(e.parts):
                pw = self.width(p)
                pv, px = self.ev(p, pw)
                vs.append(f"({pv} << {off})" if off else pv)
                if px != "0":
                    xs.append(f"({px} << {off})" if off else px)
                off += pw
            return self._pair(" | ".join(vs), " | ".join(xs) or "0")
        if isinstance(e, A.Repl):
            n = const_value(e.count)
            if n is None or n < 1:
                raise SimCompileError("replication count must be a positive constant")
            iw = self.width(e.value)
            k = sum(1 << (i * iw) for i in range(n))
            pv, px = self.ev(e.value, iw)
            return self._pair(f"{pv} * {k}", f"{px} * {k}" if px != "0" else "0")
        if isinstance(e, A.Unary):
            return self._unary(e, w, M)
        if isinstance(e, A.Binary):
            return self._binary(e, w, M)
        if isinstance(e, A.Ternary):
            c = self.truth(e.cond)
            tv, tx = self.ev(e.if_true, w)
            fv, fx = self.ev(e.if_false, w)
            t = em.tmp()
            em.emit(f"if {c} == 1: {t}v = {tv}; {t}x = {tx}")
            em.emit(f"elif {c} == 0: {t}v = {fv}; {t}x = {fx}")
            em.emit(f"else: {t}x = {tx} | {fx} | ({tv} ^ {fv}); {t}v = {tv} & ~{t}x")
            return f"{t}v", f"{t}x"
        raise SimCompileError(f"cannot simulate {type(e).__name__}")

    def _base(self, target: A.Expr) -> tuple[str, str, int]:
        """Value pair for a select target plus the lsb offset of its range."""
        if isinstance(target, A.Ident):
            info = self.layout.signals[target.name]
            if not info.depth:
                t = self.em.tmp()
                self.em.emit(f"{t}v = V[{info.slot}]; {t}x = X[{info.slot}]")
                return f"{t}v", f"{t}x", info.lsb
        v, x = self.ev(target, self.width(target))
        return v, x, 0

    def _index(self, e: A.Index) -> tuple[str, str]:
        em = self.em
        tgt = e.target
        if isinstance(tgt, A.Ident) and self.layout.signals[tgt.name].depth:
            info = self.layout.signals[tgt.name]
            c = const_value(e.index)
            if c is not None:
                k = c - info.lo
                if 0 <= k < info.depth:
                    t = em.tmp()
                    em.emit(f"{t}v = V[{info.slot + k}]; {t}x = X[{info.slot + k}]")
                    return f"{t}v", f"{t}x"
                return "0", str(info.mask)
            iv, ix = self.ev(e.index, self.width(e.index))
            t = em.tmp()
            cond = f"not {ix} and " if ix != "0" else ""
            em.emit(f"{t}k = {iv} - {info.lo}")
            em.emit(f"if {cond}0 <= {t}k < {info.depth}: {t}v = V[{info.slot} + {t}k]; {t}x = X[{info.slot} + {t}k]")
            em.emit(f"else: {t}v = 0; {t}x = {info.mask}")
            return f"{t}v", f"{t}x"
        bv, bx, lsb = self._base(tgt)
        bw = self.width(tgt) if not isinstance(tgt, A.Ident) else self.layout.signals[tgt.name].width
        c = const_value(e.index)
        if c is not None:
            p = c - lsb
            if 0 <= p < bw:
                return self._pair(f"({bv} >> {p}) & 1", f"({bx} >> {p}) & 1")
            return "0", "1"
        iv, ix = self.ev(e.index, self.width(e.index))
        t = em.tmp()
        cond = f"not {ix} and " if ix != "0" else ""
        em.emit(f"{t}p = {iv} - {lsb}")
        em.emit(f"if {cond}0 <= {t}p < {bw}: {t}v = ({bv} >> {t}p) & 1; {t}x = ({bx} >> {t}p) & 1")
        em.emit(f"else: {t}v = 0; {t}x = 1")
        return f"{t}v", f"{t}x"

    def _unary(self, e: A.Unary, w: int, M: int) -> tuple[str, str]:
        em = self.em
        op = e.op
        if op == "+":
            return self.ev(e.operand, w)
        if op == "~":
            v, x = self.ev(e.operand, w)
            if x == "0":
                return self._pair(f"{M} ^ {v}", "0")
            return self._pair(f"({M} ^ {v}) & ~{x}", x)
        if op == "-":
            v, x = self.ev(e.operand, w)
            if x == "0":
                return self._pair(f"(-{v}) & {M}", "0")
            t = em.tmp()
            em.emit(f"if {x}: {t}v = 0; {t}x = {M}")
            em.emit(f"else: {t}v = (-{v}) & {M}; {t}x = 0")
            return f"{t}v", f"{t}x"
        if op == "!":
            c = self.truth(e.operand)
            t = em.tmp()
            em.emit(f"{t}v = 1 if {c} == 0 else 0; {t}x = 1 if {c} == 2 else 0")
            return f"{t}v", f"{t}x"
        ow = self.width(e.operand)
        v, x = self.ev(e.operand, ow)
        t = em.tmp()
        if op == "&":
            em.emit(f"{t}z = {_m(ow)} & ~({v} | {x})")
            em.emit(f"{t}v = 0 if {t}z or {x} else 1; {t}x = 0 if {t}z else (1 if {x} else 0)")
        elif op == "|":
            em.emit(f"{t}v = 1 if {v} else 0; {t}x = 0 if {v} else (1 if {x} else 0)")
        elif op == "^":
            em.emit(f"{t}x = 1 if {x} else 0; {t}v = 0 if {x} else ({v}).bit_count() & 1")
        else:
            raise SimCompileError(f"unary operator {op}")
        return f"{t}v", f"{t}x"

    def _binary(self, e: A.Binary, w: int, M: int) -> tuple[str, str]:
        em = self.em
        op = e.op
        if op in ("&&", "||"):
            a = self.truth(e.left)
            b = self.truth(e.right)
            t = em.tmp()
            if op == "&&":
                em.emit(f"if {a} == 0 or {b} == 0: {t}v = 0; {t}x = 0")
                em.emit(f"elif {a} == 1 and {b} == 1: {t}v = 1; {t}x = 0")
            else:
                em.emit(f"if {a} == 1 or {b} == 1: {t}v = 1; {t}x = 0")
                em.emit(f"elif {a} == 0 and {b} == 0: {t}v = 0; {t}x = 0")
            em.emit(f"else: {t}v = 0; {t}x = 1")
            return f"{t}v", f"{t}x"
        if op in COMPARE_OPS:
            cw = max(self.width(e.left), self.width(e.right))
            a, ax = self.ev(e.left, cw)
            b, bx = self.ev(e.right, cw)
            py = {"==": "==", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}[op]
            anyx = " or ".join(x for x in (ax, bx) if x != "0")
            t = em.tmp()
            if op not in ("==", "!=") and is_signed(e.left, self.layout.signed) and is_signed(e.right, self.layout.signed):
                half = 1 << (cw - 1)
                a, b = self._pair(f"({a} ^ {half}) - {half}", "0")[0], self._pair(f"({b} ^ {half}) - {half}", "0")[0]
            if not anyx:
                em.emit(f"{t}v = 1 if {a} {py} {b} else 0; {t}x = 0")
                return f"{t}v", f"{t}x"
            if op in ("==", "!="):
                # differing known bits decide the result even when other bits are X
                hit, miss = ("0", "1") if op == "==" else ("1", "0")
                em.emit(f"if not ({anyx}): {t}v = 1 if {a} {py} {b} else 0; {t}x = 0")
                em.emit(f"elif ({a} ^ {b}) & ~({ax} | {bx}): {t}v = {hit}; {t}x = 0")
                em.emit(f"else: {t}v = 0; {t}x = 1")
                _ = miss
            else:
                em.emit(f"if {anyx}: {t}v = 0; {t}x = 1")
                em.emit(f"else: {t}v = 1 if {a} {py} {b} else 0; {t}x = 0")
            return f"{t}v", f"{t}x"
        if op in SHIFT_OPS:
            a, ax = self.ev(e.left, w)
            b, bx = self.ev(e.right, self.width(e.right))
            t = em.tmp()
            pre = ""
            if bx != "0":
                em.emit(f"if {bx}: {t}v = 0; {t}x = {M}")
                pre = "el"
            if op == "<<":
                em.emit(f"{pre}if {b} >= {w}: {t}v = 0; {t}x = 0")
                em.emit(f"else: {t}v = ({a} << {b}) & {M}; {t}x = ({ax} << {b}) & {M}")
            else:
                em.emit(f"{pre}if {b} >= {w}: {t}v = 0; {t}x = 0")
                em.emit(f"else: {t}v = {a} >> {b}; {t}x = {ax} >> {b}")
            return f"{t}v", f"{t}x"
        a, ax = self.ev(e.left, w)
        b, bx = self.ev(e.right, w)
        anyx = " or ".join(x for x in (ax, bx) if x != "0")
        if op == "&":
            if not anyx:
                return self._pair(f"{a} & {b}", "0")
            t = em.tmp()
            em.emit(f"{t}x = ({ax} | {bx}) & ~((~{a} & ~{ax}) | (~{b} & ~{bx})) & {M}; {t}v = {a} & {b}")
            return f"{t}v", f"{t}x"
        if op == "|":
            if not anyx:
                return self._pair(f"{a} | {b}", "0")
            t = em.tmp()
            em.emit(f"{t}v = {a} | {b}; {t}x = ({ax} | {bx}) & ~{t}v")
            return f"{t}v", f"{t}x"
        if op == "^":
            if not anyx:
                return self._pair(f"{a} ^ {b}", "0")
            t = em.tmp()
            em.emit(f"{t}x = {ax} | {bx}; {t}v = ({a} ^ {b}) & ~{t}x")
            return f"{t}v", f"{t}x"
        if op in ("+", "-", "*"):
            expr = f"({a} {op} {b}) & {M}"
            if not anyx:
                return self._pair(expr, "0")
            t = em.tmp()
            em.emit(f"if {anyx}: {t}v = 0; {t}x = {M}")
            em.emit(f"else: {t}v = {expr}; {t}x = 0")
            return f"{t}v", f"{t}x"
        if op in ("/", "%"):
            py = "//" if op == "/" else "%"
            t = em.tmp()
            em.emit(f"if {anyx + ' or ' if anyx else ''}{b} == 0: {t}v = 0; {t}x = {M}")
            em.emit(f"else: {t}v = {a} {py} {b}; {t}x = 0")
            return f"{t}v", f"{t}x"
        raise SimCompileError(f"binary operator {op}")


def stmt_targets(s: A.Stmt) -> list[tuple[str, bool]]:
    """(base signal, blocking) for every assignment nested in ``s``."""
    out: list[tuple[str, bool]] = []
    for st in A.iter_stmts(s):
        if isinstance(st, A.Assign):
            for b in A.lvalue_bases(st.lhs):
                if (b, st.blocking) not in out:
                    out.append((b, st.blocking))
    return out


class ProcessCompiler(ExprCompiler):
    """Statements of one process. ``nba`` selects queued nonblocking writes."""

    def __init__(self, layout: Layout, em: _Emitter, nba: bool) -> None:
        super().__init__(layout, em)
        self.nba = nba

    def _write(self, slot: str, m: int | str, v: str, x: str, queued: bool, whole: bool) -> None:
        em = self.em
        if queued:
            em.emit(f"Q.append(({slot}, {m}, {v}, {x}))")
        elif whole:
            em.emit(f"V[{slot}] = {v}; X[{slot}] = {x}")
        else:
            em.emit(f"V[{slot}] = (V[{slot}] & ~{m}) | {v}; X[{slot}] = (X[{slot}] & ~{m}) | {x}")

    def _all_x(self, name: str, queued: bool) -> None:
        info = self.layout.signals[name]
        for k in range(max(info.depth, 1)):
            self._write(str(info.slot + k), info.mask, "0", str(info.mask), queued, True)

    def store(self, lhs: A.Expr, v: str, x: str, w: int, queued: bool) -> None:
        """Write the low bits of (v, x), evaluated at width ``w``, into ``lhs``."""
        em = self.em
        if isinstance(lhs, A.Ident):
            info = self.layout.signals[lhs.name]
            if info.depth:
                raise SimCompileError(f"assignment to whole memory '{lhs.name}'")
            if w > info.width:
                v, x = self._pair(f"{v} & {info.mask}", f"{x} & {info.mask}" if x != "0" else "0")
            self._write(str(info.slot), info.mask, v, x, queued, True)
            return
        if isinstance(lhs, A.Concat):
            off = 0
            for p in reversed(lhs.parts):
                pw = self.width(p)
                pm = _m(pw)
                pv, px = self._pair(f"({v} >> {off}) & {pm}", f"({x} >> {off}) & {pm}" if x != "0" else "0")
                self.store(p, pv, px, pw, queued)
                off += pw
            return
        if isinstance(lhs, A.PartSelect):
            m, l = const_value(lhs.msb), const_value(lhs.lsb)
            if m is None or l is None or not isinstance(lhs.target, A.Ident):
                raise SimCompileError("unsupported part-select target")
            info = self.layout.signals[lhs.target.name]
            sh = l - info.lsb
            pw = abs(m - l) + 1
            pm = _m(pw) << sh
            pv, px = self._pair(f"({v} << {sh}) & {pm}", f"({x} << {sh}) & {pm}" if x != "0" else "0")
            self._write(str(info.slot), pm, pv, px, queued, pm == info.mask)
            return
        if isinstance(lhs, A.Index):
            tgt = lhs.target
            if isinstance(tgt, A.Ident) and self.layout.signals[tgt.name].depth:
                info = self.layout.signals[tgt.name]
                sv, sx = (v, x)
                if w > info.width:
                    sv, sx = self._pair(f"{v} & {info.mask}", f"{x} & {info.mask}" if x != "0" else "0")
                c = const_value(lhs.index)
                if c is not None:
                    k = c - info.lo
                    if 0 <= k < info.depth:
                        self._write(str(info.slot + k), info.mask, sv, sx, queued, True)
                    return
                iv, ix = self.ev(lhs.index, self.width(lhs.index))
                t = em.tmp()
                em.emit(f"{t}k = {iv} - {info.lo}")
                if ix != "0":
                    em.emit(f"if {ix}:")
                    with em.indent():
                        self._all_x(tgt.name, queued)
                    em.emit(f"elif 0 <= {t}k < {info.depth}:")
                else:
                    em.emit(f"if 0 <= {t}k < {info.depth}:")
                with em.indent():
                    self._write(f"{info.slot} + {t}k", info.mask, sv, sx, queued, True)
                return
            if isinstance(tgt, A.Ident):
                info = self.layout.signals[tgt.name]
                c = const_value(lhs.index)
                if c is not None:
                    p = c - info.lsb
                    if 0 <= p < info.width:
                        bv, bx = self._pair(f"({v} & 1) << {p}", f"({x} & 1) << {p}" if x != "0" else "0")
                        self._write(str(info.slot), 1 << p, bv, bx, queued, info.width == 1)
                    return
                iv, ix = self.ev(lhs.index, self.width(lhs.index))
                t = em.tmp()
                em.emit(f"{t}p = {iv} - {info.lsb}")
                if ix != "0":
                    em.emit(f"if {ix}:")
                    with em.indent():
                        self._all_x(tgt.name, queued)
                    em.emit(f"elif 0 <= {t}p < {info.width}:")
                else:
                    em.emit(f"if 0 <= {t}p < {info.width}:")
                with em.indent():
                    self._write(str(info.slot), f"(1 << {t}p)", f"(({v} & 1) << {t}p)", f"(({x} & 1) << {t}p)", queued, False)
                return
            if isinstance(tgt, A.Index) and isinstance(tgt.target, A.Ident):
                # bit of a memory word: read-modify-write of the word
                word = tgt
                wv, wx = self.ev(word, self.width(word))
                info = self.layout.signals[tgt.target.name]
                c = const_value(lhs.index)
                if c is None:
                    raise SimCompileError("memory word bit-select index must be constant")
                if not 0 <= c < info.width:
                    return
                nv, nx = self._pair(f"({wv} & ~{1 << c}) | (({v} & 1) << {c})", f"({wx} & ~{1 << c}) | (({x} & 1) << {c})")
                self.store(word, nv, nx, info.width, queued)
                return
        raise SimCompileError(f"unsupported assignment target {type(lhs).__name__}")

    def assign(self, s: A.Assign) -> None:
        lw = self.width(s.lhs)
        w = max(lw, self.width(s.rhs))
        v, x = self.ev(s.rhs, w)
        queued = self.nba and not s.blocking
        self.store(s.lhs, v, x, w, queued)

    def pessimize(self, stmts: list[A.Stmt]) -> None:
        seen: set[tuple[str, bool]] = set()
        for s in stmts:
            for name, blocking in stmt_targets(s):
                key = (name, self.nba and not blocking)
                if key not in seen:
                    seen.add(key)
                    self._all_x(*key)
        if not seen:
            self.em.emit("pass")

    def stmt(self, s: A.Stmt) -> None:
        em = self.em
        if isinstance(s, A.Assign):
            self.assign(s)
        elif isinstance(s, A.Null):
            em.emit("pass")
        elif isinstance(s, A.Block):
            if not s.stmts:
                em.emit("pass")
            for x in s.stmts:
                self.stmt(x)
        elif isinstance(s, A.If):
            c = self.truth(s.cond)
            em.emit(f"if {c} == 1:")
            with em.indent():
                self.stmt(s.then)
            em.emit(f"elif {c} == 0:")
            with em.indent():
                if s.else_ is not None:
                    self.stmt(s.else_)
                else:
                    em.emit("pass")
            em.emit("else:")
            with em.indent():
                self.pessimize([s.then] + ([s.else_] if s.else_ is not None else []))
        elif isinstance(s, A.Case):
            self.case(s)
        elif isinstance(s, A.For):
            self.assign(s.init)
            t = em.tmp()
            em.emit(f"for {t} in range({LOOP_LIMIT}):")
            with em.indent():
                c = self.truth(s.cond)
                em.emit(f"if {c} != 1: break")
                self.stmt(s.body)
                self.assign(s.step)
            em.emit("else:")
            with em.indent():
                em.emit("raise LoopLimit()")
        else:
            raise SimCompileError(f"cannot simulate statement {type(s).__name__}")

    def case(self, s: A.Case) -> None:
        em = self.em
        cw = max([self.width(s.subject)] + [self.width(lab) for it in s.items for lab in it.labels])
        sv, sx = self.ev(s.subject, cw)
        conds: list[str] = []
        for it in s.items:
            if it.is_default:
                conds.append("")
                continue
            parts = []
            for lab in it.labels:
                lv, lx = self.ev(lab, cw)
                parts.append(f"{sv} == {lv}" + (f" and {lx} == 0" if lx != "0" else ""))
            conds.append(" or ".join(f"({p})" for p in parts))
        first = True
        if sx != "0":
            em.emit(f"if {sx}:")
            with em.indent():
                self.pessimize([it.body for it in s.items])
            first = False
        for it, cond in zip(s.items, conds):
            if it.is_default:
                continue
            em.emit(f"{'if' if first else 'elif'} {cond}:")
            first = False
            with em.indent():
                self.stmt(it.body)
        d = s.default
        if d is not None:
            if first:
                self.stmt(d.body)
            else:
                em.emit("else:")
                with em.indent():
                    self.stmt(d.body)


# ------------------------------------------------------------ dependency analysis


def expr_reads(e: A.Expr | None) -> set[str]:
    return set(A.identifiers(e)) if e is not None else set()


def exposed_reads(s: A.Stmt, written: frozenset[str] = frozenset()) -> tuple[set[str], frozenset[str]]:
    """(signals read before being fully written, signals definitely written after)."""
    if isinstance(s, A.Assign):
        reads = expr_reads(s.rhs) | set(A.lvalue_reads(s.lhs))
        if not isinstance(s.lhs, A.Ident):
            # partial writes leave the rest of the vector live
            reads |= set(A.lvalue_bases(s.lhs))
        out = written | {s.lhs.name} if isinstance(s.lhs, A.Ident) else written
        return reads - written, out
    if isinstance(s, A.Block):
        reads: set[str] = set()
        for x in s.stmts:
            r, written = exposed_reads(x, written)
            reads |= r
        return reads, written
    if isinstance(s, A.If):
        reads = expr_reads(s.cond) - written
        r1, w1 = exposed_reads(s.then, written)
        if s.else_ is not None:
            r2, w2 = exposed_reads(s.else_, written)
        else:
            r2, w2 = set(), written
        return reads | r1 | r2, w1 & w2
    if isinstance(s, A.Case):
        reads = expr_reads(s.subject) - written
        outs: list[frozenset[str]] = []
        for it in s.items:
            for lab in it.labels:
                reads |= expr_reads(lab) - written
            r, w = exposed_reads(it.body, written)
            reads |= r
            outs.append(w)
        if s.default is None:
            outs.append(written)
        res = outs[0]
        for w in outs[1:]:
            res = res & w
        return reads, res
    if isinstance(s, A.For):
        r0, w0 = exposed_reads(s.init, written)
        reads = r0 | (expr_reads(s.cond) - w0)
        r1, w1 = exposed_reads(s.body, w0)
        r2, _ = exposed_reads(s.step, w1)
        return reads | r1 | r2, w0
    return set(), written


def process_writes(p: Process) -> set[str]:
    return {b for st in A.iter_stmts(p.body) if isinstance(st, A.Assign) for b in A.lvalue_bases(st.lhs)}


def count_assignments(p: Process) -> int:
    return sum(1 for st in A.iter_stmts(p.body) if isinstance(st, A.Assign))


def schedule(procs: list[Process]) -> list[list[int]]:
    """Strongly connected components of the combinational processes in topological order.

    A component with one process is returned as ``[i]`` and is acyclic unless
    the process reads something it writes; cyclic components get ``[-1, ...]``
    as a marker prefix.
    """
    n = len(procs)
    reads = [exposed_reads(p.body)[0] for p in procs]
    writes = [process_writes(p) for p in procs]
    writers: dict[str, list[int]] = {}
    for i, ws in enumerate(writes):
        for s in ws:
            writers.setdefault(s, []).append(i)
    succ: list[list[int]] = [[] for _ in range(n)]
    for j in range(n):
        for s in sorted(reads[j]):
            for i in writers.get(s, []):
                if j not in succ[i]:
                    succ[i].append(j)
    # Tarjan, iterative
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work.pop()
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on.add(v)
            recurse = False
            for k in range(pi, len(succ[v])):
                w = succ[v][k]
                if w not in index:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    comps.reverse()  # Tarjan emits sinks first
    out = []
    for comp in comps:
        cyclic = len(comp) > 1 or comp[0] in succ[comp[0]]
        out.append(([-1] if cyclic else []) + comp)
    return out


# ------------------------------------------------------------------ the model


@dataclass
class CompiledModel:
    layout: Layout
    settle: Callable[[list[int], list[int]], None]
    seq_blocks: list[Callable[..., None]]
    seq_sens: list[list[tuple[int, str]]]  # per block: (slot, edge)
    source: str
    comb_assignments: int

    @property
    def sens_slots(self) -> list[int]:
        return sorted({s for blk in self.seq_sens for s, _ in blk})


class CombLoopDetected(Exception):
    pass


class LoopLimit(Exception):
    pass


def compile_design(ed: ElaboratedDesign) -> CompiledModel:
    layout = Layout.of(ed)
    comb = [p for p in ed.processes if p.kind != "seq"]
    seq = [p for p in ed.processes if p.kind == "seq"]
    n_assign = sum(count_assignments(p) for p in comb)
    n_iter = max(2, 2 * n_assign)

    em = _Emitter()
    chunks = ["def settle(V, X):"]
    for comp in schedule(comb):
        if comp[0] == -1:
            members = comp[1:]
            slots = sorted(
                {layout.signals[s].slot + k for i in members for s in process_writes(comb[i]) for k in range(max(layout.signals[s].depth, 1))}
            )
            sl = ", ".join(str(s) for s in slots)
            em.depth = 1
            em.emit(f"for _sweep in range({n_iter}):")
            em.depth = 2
            em.emit(f"_before = [(V[k], X[k]) for k in ({sl},)]")
            pc = ProcessCompiler(layout, em, nba=False)
            for i in members:
                pc.stmt(comb[i].body)
            em.emit(f"if _before == [(V[k], X[k]) for k in ({sl},)]: break")
            em.depth = 1
            em.emit("else:")
            em.emit(f"    raise CombLoopDetected('combinational logic did not settle within {n_iter} sweeps')")
        else:
            em.depth = 1
            ProcessCompiler(layout, em, nba=False).stmt(comb[comp[0]].body)
    em.depth = 1
    em.emit("return")
    chunks.extend(em.lines)

    seq_names = []
    seq_sens: list[list[tuple[int, str]]] = []
    for j, p in enumerate(seq):
        em2 = _Emitter()
        em2.counter = em.counter
        ProcessCompiler(layout, em2, nba=True).stmt(p.body)
        em.counter = em2.counter
        name = f"seq_{j}"
        seq_names.append(name)
        chunks.append(f"def {name}(V, X, Q):")
        chunks.extend(em2.lines)
        chunks.append("    return")
        sens = []
        for si in p.sens:
            if si.edge is None:
                continue
            info = layout.signals[si.name]
            sens.append((info.slot, si.edge))
        seq_sens.append(sens)

    source = "\n".join(chunks) + "\n"
    ns: dict[str, object] = {"CombLoopDetected": CombLoopDetected, "LoopLimit": LoopLimit}
    exec(compile(source, f"<sim:{ed.top}>", "exec"), ns)
    return CompiledModel(
        layout,
        ns["settle"],  # type: ignore[arg-type]
        [ns[n] for n in seq_names],  # type: ignore[misc]
        seq_sens,
        source,
        n_assign,
    )


def compile_expr(expr: A.Expr, layout: Layout) -> Callable[[list[int] | tuple[int, ...], list[int] | tuple[int, ...]], tuple[int, int]]:
    """A standalone evaluator ``f(V, X) -> (value, xmask)`` at the expression's own width."""
    em = _Emitter()
    ec = ExprCompiler(layout, em)
    v, x = ec.ev(expr, ec.width(expr))
    em.emit(f"return {v}, {x}")
    source = "def f(V, X):\n" + "\n".join(em.lines) + "\n"
    ns: dict[str, object] = {}
    exec(compile(source, "<expr>", "exec"), ns)
    return ns["f"]  # type: ignore[return-value]

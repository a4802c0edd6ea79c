"""Self-determined expression widths (unsigned Verilog rules)."""

from __future__ import annotations

from typing import Callable

from . import ast as A

COMPARE_OPS = {"==", "!=", "<", "<=", ">", ">="}
LOGIC_OPS = {"&&", "||"}
ARITH_OPS = {"+", "-", "*", "/", "%", "&", "|", "^"}
SHIFT_OPS = {"<<", ">>"}

# lookup(name) -> (width, is_array)
Lookup = Callable[[str], tuple[int, bool]]


def const_value(e: A.Expr) -> int | None:
    """Fold a constant expression made of literals; None when not constant."""
    if isinstance(e, A.Number):
        v, x = e.value_xmask
        return None if x else v
    if isinstance(e, A.Unary) and e.op in ("-", "+"):
        v = const_value(e.operand)
        return None if v is None else (-v if e.op == "-" else v)
    if isinstance(e, A.Binary) and e.op in ("+", "-", "*"):
        a, b = const_value(e.left), const_value(e.right)
        if a is None or b is None:
            return None
        return a + b if e.op == "+" else a - b if e.op == "-" else a * b
    return None


def self_width(e: A.Expr, lookup: Lookup, flexible_unsized: bool = False) -> int:
    """Width of ``e`` in a self-determined context.

    With ``flexible_unsized`` an unsized decimal counts as its minimal bit
    length (how linters avoid flagging ``count + 1``).
    """
    w = lambda x: self_width(x, lookup, flexible_unsized)  # noqa: E731
    if isinstance(e, A.Number):
        if e.width is not None:
            return e.width
        if flexible_unsized and not e.based:
            return max(1, e.value.bit_length())
        return 32
    if isinstance(e, A.Ident):
        return lookup(e.name)[0]
    if isinstance(e, A.Index):
        if isinstance(e.target, A.Ident) and lookup(e.target.name)[1]:
            return lookup(e.target.name)[0]
        return 1
    if isinstance(e, A.PartSelect):
        m, l = const_value(e.msb), const_value(e.lsb)
        if m is None or l is None:
            return 1
        return abs(m - l) + 1
    if isinstance(e, A.Concat):
        return sum(w(p) for p in e.parts)
    if isinstance(e, A.Repl):
        n = const_value(e.count) or 0
        return n * w(e.value)
    if isinstance(e, A.Unary):
        if e.op in ("~", "-", "+"):
            return w(e.operand)
        return 1
    if isinstance(e, A.Binary):
        if e.op in ARITH_OPS:
            return max(w(e.left), w(e.right))
        if e.op in SHIFT_OPS:
            return w(e.left)
        return 1
    if isinstance(e, A.Ternary):
        return max(w(e.if_true), w(e.if_false))
    raise TypeError(f"not an expression: {e!r}")


def is_signed(e: A.Expr, signed_name: Callable[[str], bool]) -> bool:
    """Signedness under Verilog rules: integers and unsized decimals are signed,
    and one unsigned operand makes the whole expression unsigned."""
    if isinstance(e, A.Number):
        return not e.based
    if isinstance(e, A.Ident):
        return signed_name(e.name)
    if isinstance(e, A.Unary):
        return e.op in ("-", "+", "~") and is_signed(e.operand, signed_name)
    if isinstance(e, A.Binary):
        if e.op in ARITH_OPS:
            return is_signed(e.left, signed_name) and is_signed(e.right, signed_name)
        if e.op in SHIFT_OPS:
            return is_signed(e.left, signed_name)
        return False
    if isinstance(e, A.Ternary):
        return is_signed(e.if_true, signed_name) and is_signed(e.if_false, signed_name)
    return False


def lvalue_width(e: A.Expr, lookup: Lookup) -> int:
    return self_width(e, lookup)

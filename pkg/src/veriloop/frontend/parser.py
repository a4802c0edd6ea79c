"""Recursive-descent parser with statement-level error recovery.

The parser resynchronises at ``;`` and at block terminators so that one run
reports as many independent syntax errors as it can.
"""

from __future__ import annotations

from pathlib import PurePath

from . import ast as A
from .diagnostics import (
    E_FOR_BOUNDS,
    E_MISSING_SEMI,
    E_UNBALANCED,
    E_UNEXPECTED,
    E_UNSUPPORTED,
    E_WIDTH_LIMIT,
    SyntaxDiagnostic,
)
from .lexer import UNSUPPORTED_KEYWORDS, Token, tokenize
from .source import SourceFile

BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4,
    "&": 5,
    "==": 6,
    "!=": 6,
    "<": 7,
    "<=": 7,
    ">": 7,
    ">=": 7,
    "<<": 8,
    ">>": 8,
    "+": 9,
    "-": 9,
    "*": 10,
    "/": 10,
    "%": 10,
}
UNARY_OPS = {"+", "-", "!", "~", "&", "|", "^"}
UNSUPPORTED_OPS = {"===", "!==", "<<<", ">>>", "~&", "~|", "~^", "^~", "++", "--"}
ITEM_STARTERS = {"input", "output", "wire", "reg", "integer", "assign", "always", "endmodule", "module"}
STMT_STARTERS = {"begin", "if", "case", "for", "end", "endcase", "else", "default"}
_BLOCK_TERMINATORS = {
    "function": "endfunction",
    "task": "endtask",
    "generate": "endgenerate",
    "specify": "endspecify",
    "primitive": "endprimitive",
}
MAX_WIDTH = 64


class ParseError(Exception):
    def __init__(self, diag: SyntaxDiagnostic):
        super().__init__(diag.message)
        self.diag = diag


class Parser:
    def __init__(self, src: SourceFile):
        self.src = src
        self.tokens, self.diags = tokenize(src)
        self.pos = 0
        self.module_ok = True

    # ---------------------------------------------------------------- helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    @property
    def prev(self) -> Token:
        return self.tokens[self.pos - 1] if self.pos else self.tokens[0]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "keyword")

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, code: str = E_UNEXPECTED, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(SyntaxDiagnostic(t.line, t.col, code, message))

    def report(self, err: ParseError) -> None:
        self.diags.append(err.diag)
        self.module_ok = False

    def describe(self, t: Token) -> str:
        return "end of file" if t.kind == "eof" else f"'{t.text}'"

    def expect(self, text: str) -> Token:
        if self.at(text):
            return self.advance()
        raise self.error(f"expected '{text}' but found {self.describe(self.tok)}")

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind == "ident":
            return self.advance()
        if t.kind == "ident" or t.text in UNSUPPORTED_KEYWORDS:
            raise self.error(f"unsupported keyword '{t.text}'", E_UNSUPPORTED)
        raise self.error(f"expected {what} but found {self.describe(t)}")

    def expect_semi(self) -> None:
        if self.at(";"):
            self.advance()
            return
        p = self.prev
        t = self.tok
        diag = SyntaxDiagnostic(p.line, p.col + len(p.text), E_MISSING_SEMI, f"missing ';' before {self.describe(t)}")
        # A following token on a new line (or one that opens a new statement)
        # is taken as the start of the next construct: virtual semicolon.
        if t.line > p.line or t.text in ITEM_STARTERS or t.text in STMT_STARTERS or t.kind == "eof":
            self.report(ParseError(diag))
            return
        raise ParseError(diag)

    def span_from(self, start: Token) -> A.Span:
        return A.Span(start.line, start.col, max(self.prev.line, start.line))

    def sync_stmt(self) -> None:
        start = self.pos
        while self.tok.kind != "eof":
            if self.at(";"):
                self.advance()
                return
            if self.tok.text in ("end", "endcase", "endmodule") and self.tok.kind == "keyword":
                if self.pos == start and self.tok.text != "endmodule":
                    self.advance()
                return
            self.advance()

    def sync_item(self) -> None:
        while self.tok.kind != "eof":
            if self.at(";"):
                self.advance()
                return
            if self.tok.kind == "keyword" and self.tok.text in ITEM_STARTERS:
                return
            self.advance()

    # ----------------------------------------------------------------- source

    def parse_source(self) -> list[A.Module]:
        modules = []
        while self.tok.kind != "eof":
            if self.at("module"):
                modules.append(self.parse_module())
            else:
                t = self.tok
                if t.text in UNSUPPORTED_KEYWORDS:
                    self.report(self.error(f"unsupported construct '{t.text}'", E_UNSUPPORTED))
                else:
                    self.report(self.error(f"expected 'module' but found {self.describe(t)}"))
                while self.tok.kind != "eof" and not self.at("module"):
                    self.advance()
        return modules

    def parse_module(self) -> A.Module:
        start = self.expect("module")
        self.module_ok = True
        name = self.expect_ident("module name").text
        ansi = False
        port_names: list[str] = []
        port_decls: list[A.Decl] = []
        try:
            if self.at("#"):
                raise self.error("module parameters are not supported", E_UNSUPPORTED)
            if self.at("("):
                self.advance()
                if not self.at(")"):
                    if self.tok.text in ("input", "output"):
                        ansi = True
                        port_decls = self.parse_ansi_ports()
                    else:
                        port_names.append(self.expect_ident("port name").text)
                        while self.at(","):
                            self.advance()
                            if self.tok.text in ("input", "output"):
                                raise self.error("mixed ANSI and non-ANSI port list")
                            port_names.append(self.expect_ident("port name").text)
                self.expect(")")
            self.expect_semi()
        except ParseError as e:
            self.report(e)
            self.sync_item()
        items: list[A.Item] = []
        while not self.at("endmodule"):
            if self.tok.kind == "eof" or self.at("module"):
                self.report(self.error(f"missing 'endmodule' for module '{name}'", E_UNBALANCED))
                return A.Module(name, ansi, tuple(port_names), tuple(port_decls), tuple(items), self.span_from(start))
            try:
                item = self.parse_item()
                if item is not None:
                    items.append(item)
            except ParseError as e:
                self.report(e)
                self.sync_item()
        self.expect("endmodule")
        return A.Module(name, ansi, tuple(port_names), tuple(port_decls), tuple(items), self.span_from(start))

    def parse_ansi_ports(self) -> list[A.Decl]:
        decls: list[A.Decl] = []
        while True:
            start = self.tok
            if self.tok.text in ("input", "output"):
                direction = self.advance().text
                kind = None
                if self.tok.text in ("wire", "reg"):
                    kind = self.advance().text
                elif self.tok.text == "integer":
                    raise self.error("integer ports are not supported", E_UNSUPPORTED)
                rng = self.parse_range() if self.at("[") else None
                if rng is not None:
                    self.check_range(rng, start)
                names = [A.Declarator(self.expect_ident("port name").text, None, self.span_from(self.prev))]
                decls.append(A.Decl(direction, kind, rng, tuple(names), self.span_from(start)))
            else:
                # continuation of the previous group: ``input a, b``
                t = self.expect_ident("port name")
                if not decls:
                    raise self.error("port declaration without direction", tok=t)
                last = decls[-1]
                decls[-1] = A.Decl(
                    last.direction,
                    last.kind,
                    last.range,
                    last.names + (A.Declarator(t.text, None, self.span_from(t)),),
                    A.Span(last.span.line, last.span.col, t.line),
                )
            if self.at(","):
                self.advance()
                continue
            return decls

    def parse_range(self) -> A.Range:
        start = self.expect("[")
        msb = self.parse_const_int()
        self.expect(":")
        lsb = self.parse_const_int()
        self.expect("]")
        return A.Range(msb, lsb, self.span_from(start))

    def parse_const_int(self) -> int:
        t = self.tok
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
            t = self.tok
        if t.kind != "number":
            if t.kind == "ident":
                raise self.error(f"range bound '{t.text}' must be an integer constant (parameters are not supported)", E_UNSUPPORTED)
            raise self.error(f"expected integer constant but found {self.describe(t)}")
        self.advance()
        v = A.Number(t.text).value
        return -v if neg else v

    # ------------------------------------------------------------------ items

    def parse_item(self) -> A.Item | None:
        t = self.tok
        if t.kind == "keyword":
            if t.text in ("input", "output", "wire", "reg", "integer"):
                return self.parse_decl()
            if t.text == "assign":
                return self.parse_cont_assign()
            if t.text == "always":
                return self.parse_always()
            if t.text in ("end", "endcase"):
                self.advance()
                raise self.error(f"'{t.text}' without matching 'begin'" if t.text == "end" else "'endcase' without 'case'", E_UNBALANCED, tok=t)
            raise self.error(f"unexpected {self.describe(t)} in module body", tok=t)
        if t.kind == "ident" and t.text in UNSUPPORTED_KEYWORDS:
            self.skip_unsupported()
            return None
        if t.kind == "ident":
            nxt = self.peek()
            if nxt.kind == "ident" or (nxt.kind == "op" and nxt.text == "#"):
                return self.parse_instance()
            if t.text in ("inout",):
                raise self.error("inout ports are not supported", E_UNSUPPORTED)
            raise self.error(f"unknown keyword or misplaced identifier '{t.text}'", E_UNSUPPORTED if nxt.kind != "op" else E_UNEXPECTED)
        raise self.error(f"unexpected {self.describe(t)} in module body")

    def skip_unsupported(self) -> None:
        t = self.advance()
        self.report(self.error(f"unsupported construct '{t.text}'", E_UNSUPPORTED, tok=t))
        term = _BLOCK_TERMINATORS.get(t.text)
        if term is not None:
            while self.tok.kind != "eof" and self.tok.text != term and not self.at("endmodule"):
                self.advance()
            if self.tok.text == term:
                self.advance()
            return
        if t.text in ("initial", "always_ff", "always_comb", "always_latch"):
            saved = self.diags[:]
            try:
                if self.at("@"):
                    self.parse_sensitivity()
                self.parse_stmt()
            except ParseError:
                self.diags[:] = saved
                self.sync_stmt()
            return
        self.sync_item()

    def parse_decl(self) -> A.Decl:
        start = self.tok
        direction = None
        kind = None
        if self.tok.text in ("input", "output"):
            direction = self.advance().text
        if self.tok.text in ("wire", "reg", "integer"):
            kind = self.advance().text
        if direction == "input" and kind == "reg":
            raise self.error("input port cannot be declared 'reg'", tok=self.prev)
        rng = None
        if self.at("["):
            if kind == "integer":
                raise self.error("integer declarations take no range")
            rng = self.parse_range()
        names = [self.parse_declarator(direction)]
        while self.at(","):
            self.advance()
            names.append(self.parse_declarator(direction))
        self.expect_semi()
        decl = A.Decl(direction, kind, rng, tuple(names), self.span_from(start))
        if rng is not None:
            self.check_range(rng, start)
        return decl

    def check_range(self, rng: A.Range, start: Token) -> None:
        if rng.msb < rng.lsb or rng.lsb < 0:
            self.report(
                ParseError(SyntaxDiagnostic(rng.span.line, rng.span.col, E_WIDTH_LIMIT, f"range [{rng.msb}:{rng.lsb}] must satisfy msb >= lsb >= 0"))
            )
        elif rng.width > MAX_WIDTH:
            self.report(
                ParseError(SyntaxDiagnostic(rng.span.line, rng.span.col, E_WIDTH_LIMIT, f"width {rng.width} exceeds the {MAX_WIDTH}-bit limit"))
            )

    def parse_declarator(self, direction: str | None) -> A.Declarator:
        t = self.expect_ident("signal name")
        arr = None
        if self.at("["):
            if direction is not None:
                raise self.error("array ports are not supported", E_UNSUPPORTED)
            arr = self.parse_range()
            if arr.width > 4096:
                self.report(ParseError(SyntaxDiagnostic(arr.span.line, arr.span.col, E_WIDTH_LIMIT, "array depth exceeds 4096")))
        if self.at("="):
            raise self.error("declaration initialisers are not supported", E_UNSUPPORTED)
        return A.Declarator(t.text, arr, self.span_from(t))

    def parse_cont_assign(self) -> A.ContAssign:
        start = self.expect("assign")
        if self.at("#"):
            raise self.error("delays are not supported", E_UNSUPPORTED)
        lhs = self.parse_lvalue()
        self.expect("=")
        rhs = self.parse_expr()
        if self.at(","):
            raise self.error("multiple assignments in one 'assign' are not supported", E_UNSUPPORTED)
        self.expect_semi()
        return A.ContAssign(lhs, rhs, self.span_from(start))

    def parse_sensitivity(self) -> tuple[bool, tuple[A.SensItem, ...]]:
        self.expect("@")
        if self.at("*"):
            self.advance()
            return True, ()
        self.expect("(")
        if self.at("*"):
            self.advance()
            self.expect(")")
            return True, ()
        items = [self.parse_sens_item()]
        while self.at("or") or self.at(","):
            self.advance()
            items.append(self.parse_sens_item())
        self.expect(")")
        return False, tuple(items)

    def parse_sens_item(self) -> A.SensItem:
        start = self.tok
        edge = None
        if self.tok.text in ("posedge", "negedge"):
            edge = self.advance().text
        name = self.expect_ident("signal in sensitivity list").text
        return A.SensItem(edge, name, self.span_from(start))

    def parse_always(self) -> A.Always:
        start = self.expect("always")
        if not self.at("@"):
            raise self.error("'always' without an event control is not supported", E_UNSUPPORTED)
        star, sens = self.parse_sensitivity()
        body = self.parse_stmt()
        return A.Always(star, sens, body, self.span_from(start))

    def parse_instance(self) -> A.Instance:
        start = self.tok
        mod = self.advance().text
        if self.at("#"):
            raise self.error("parameter overrides are not supported", E_UNSUPPORTED)
        name = self.expect_ident("instance name").text
        self.expect("(")
        conns: list[A.PortConn] = []
        if not self.at(")"):
            conns.append(self.parse_conn())
            while self.at(","):
                self.advance()
                conns.append(self.parse_conn())
        self.expect(")")
        self.expect_semi()
        return A.Instance(mod, name, tuple(conns), self.span_from(start))

    def parse_conn(self) -> A.PortConn:
        start = self.tok
        if not self.at("."):
            raise self.error("positional port connections are not supported; use .port(expr)", E_UNSUPPORTED)
        self.advance()
        port = self.expect_ident("port name").text
        self.expect("(")
        expr = None if self.at(")") else self.parse_expr()
        self.expect(")")
        return A.PortConn(port, expr, self.span_from(start))

    # ------------------------------------------------------------- statements

    def parse_stmt(self) -> A.Stmt:
        t = self.tok
        if self.at("begin"):
            return self.parse_block()
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_stmt_recover()
            els = None
            if self.at("else"):
                self.advance()
                els = self.parse_stmt_recover()
            return A.If(cond, then, els, self.span_from(t))
        if self.at("case"):
            return self.parse_case()
        if self.at("for"):
            return self.parse_for()
        if self.at(";"):
            self.advance()
            return A.Null(self.span_from(t))
        if self.at("#"):
            raise self.error("delays are not supported", E_UNSUPPORTED)
        if t.kind == "sysname":
            raise self.error(f"system task '{t.text}' is not supported", E_UNSUPPORTED)
        if t.kind == "ident" and t.text in UNSUPPORTED_KEYWORDS:
            raise self.error(f"unsupported construct '{t.text}'", E_UNSUPPORTED)
        if t.kind == "keyword" and t.text not in ("begin", "if", "case", "for"):
            raise self.error(f"unexpected {self.describe(t)}; expected a statement")
        return self.parse_assign_stmt(require_semi=True)

    def parse_stmt_recover(self) -> A.Stmt:
        start = self.tok
        try:
            return self.parse_stmt()
        except ParseError as e:
            self.report(e)
            self.sync_stmt()
            return A.Null(self.span_from(start))

    def parse_assign_stmt(self, require_semi: bool) -> A.Assign:
        start = self.tok
        lhs = self.parse_lvalue()
        if self.at("="):
            blocking = True
        elif self.at("<="):
            blocking = False
        elif self.tok.text in ("++", "--"):
            raise self.error(f"operator '{self.tok.text}' is not supported", E_UNSUPPORTED)
        else:
            raise self.error(f"expected '=' or '<=' but found {self.describe(self.tok)}")
        self.advance()
        if self.at("#"):
            raise self.error("delays are not supported", E_UNSUPPORTED)
        rhs = self.parse_expr()
        if require_semi:
            self.expect_semi()
        return A.Assign(lhs, rhs, blocking, self.span_from(start))

    def parse_block(self) -> A.Block:
        start = self.expect("begin")
        if self.at(":"):
            raise self.error("named blocks are not supported", E_UNSUPPORTED)
        stmts: list[A.Stmt] = []
        while not self.at("end"):
            if self.tok.kind == "eof" or self.at("endmodule") or self.at("endcase"):
                self.report(self.error(f"unbalanced begin/end: 'begin' at line {start.line} has no matching 'end'", E_UNBALANCED))
                return A.Block(tuple(stmts), self.span_from(start))
            if self.at("always") or self.at("assign"):
                self.report(self.error(f"unbalanced begin/end: 'begin' at line {start.line} has no matching 'end'", E_UNBALANCED))
                return A.Block(tuple(stmts), self.span_from(start))
            stmts.append(self.parse_stmt_recover())
        self.expect("end")
        return A.Block(tuple(stmts), self.span_from(start))

    def parse_case(self) -> A.Case:
        start = self.expect("case")
        self.expect("(")
        subject = self.parse_expr()
        self.expect(")")
        items: list[A.CaseItem] = []
        while not self.at("endcase"):
            if self.tok.kind == "eof" or self.at("endmodule") or self.at("end"):
                self.report(self.error(f"'case' at line {start.line} has no matching 'endcase'", E_UNBALANCED))
                return A.Case(subject, tuple(items), self.span_from(start))
            it_start = self.tok
            try:
                if self.at("default"):
                    self.advance()
                    if self.at(":"):
                        self.advance()
                    labels: tuple[A.Expr, ...] = ()
                else:
                    ls = [self.parse_expr()]
                    while self.at(","):
                        self.advance()
                        ls.append(self.parse_expr())
                    self.expect(":")
                    labels = tuple(ls)
            except ParseError as e:
                self.report(e)
                self.sync_stmt()
                continue
            body = self.parse_stmt_recover()
            items.append(A.CaseItem(labels, body, self.span_from(it_start)))
        self.expect("endcase")
        return A.Case(subject, tuple(items), self.span_from(start))

    def parse_for(self) -> A.For:
        start = self.expect("for")
        self.expect("(")
        init = self.parse_assign_stmt(require_semi=False)
        self.expect(";")
        cond = self.parse_expr()
        self.expect(";")
        step = self.parse_assign_stmt(require_semi=False)
        self.expect(")")
        body = self.parse_stmt_recover()
        node = A.For(init, cond, step, body, self.span_from(start))
        self.check_for(node, start)
        return node

    def check_for(self, node: A.For, start: Token) -> None:
        def bad(msg: str) -> None:
            self.report(ParseError(SyntaxDiagnostic(start.line, start.col, E_FOR_BOUNDS, msg)))

        if not (isinstance(node.init.lhs, A.Ident) and isinstance(node.init.rhs, A.Number)):
            return bad("for-loop initialiser must assign an integer constant to the loop variable")
        var = node.init.lhs.name
        c = node.cond
        if not (
            isinstance(c, A.Binary)
            and c.op in ("<", "<=", ">", ">=", "!=")
            and isinstance(c.left, A.Ident)
            and c.left.name == var
            and isinstance(c.right, A.Number)
        ):
            return bad("for-loop condition must compare the loop variable with an integer constant")
        s = node.step
        if not (
            isinstance(s.lhs, A.Ident)
            and s.lhs.name == var
            and isinstance(s.rhs, A.Binary)
            and s.rhs.op in ("+", "-")
            and isinstance(s.rhs.left, A.Ident)
            and s.rhs.left.name == var
            and isinstance(s.rhs.right, A.Number)
        ):
            return bad("for-loop step must be 'var = var +/- constant'")

    # ------------------------------------------------------------ expressions

    def parse_lvalue(self) -> A.Expr:
        t = self.tok
        if self.at("{"):
            self.advance()
            parts = [self.parse_lvalue()]
            while self.at(","):
                self.advance()
                parts.append(self.parse_lvalue())
            self.expect("}")
            return A.Concat(tuple(parts), self.span_from(t))
        if t.kind != "ident":
            if t.kind == "keyword":
                raise self.error(f"unexpected keyword '{t.text}'; expected an assignment target")
            raise self.error(f"expected an assignment target but found {self.describe(t)}")
        if t.text in UNSUPPORTED_KEYWORDS:
            raise self.error(f"unsupported construct '{t.text}'", E_UNSUPPORTED)
        self.advance()
        return self.parse_selects(A.Ident(t.text, self.span_from(t)), t)

    def parse_selects(self, base: A.Expr, start: Token) -> A.Expr:
        while self.at("["):
            self.advance()
            first = self.parse_expr()
            if self.at(":"):
                self.advance()
                second = self.parse_expr()
                self.expect("]")
                base = A.PartSelect(base, first, second, self.span_from(start))
            else:
                if self.tok.text in ("+:", "-:"):
                    raise self.error("indexed part-selects are not supported", E_UNSUPPORTED)
                self.expect("]")
                base = A.Index(base, first, self.span_from(start))
        return base

    def parse_expr(self) -> A.Expr:
        start = self.tok
        cond = self.parse_binary(1)
        if self.at("?"):
            self.advance()
            a = self.parse_expr()
            self.expect(":")
            b = self.parse_expr()
            return A.Ternary(cond, a, b, self.span_from(start))
        return cond

    def parse_binary(self, min_prec: int) -> A.Expr:
        start = self.tok
        left = self.parse_unary()
        while True:
            t = self.tok
            if t.kind == "op" and t.text in UNSUPPORTED_OPS:
                raise self.error(f"operator '{t.text}' is not supported", E_UNSUPPORTED)
            prec = BINARY_PREC.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.parse_binary(prec + 1)
            left = A.Binary(t.text, left, right, self.span_from(start))

    def parse_unary(self) -> A.Expr:
        t = self.tok
        if t.kind == "op" and t.text in UNARY_OPS:
            self.advance()
            operand = self.parse_unary()
            return A.Unary(t.text, operand, self.span_from(t))
        if t.kind == "op" and t.text in UNSUPPORTED_OPS:
            raise self.error(f"operator '{t.text}' is not supported", E_UNSUPPORTED)
        return self.parse_primary()

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return A.Number(t.text, self.span_from(t))
        if t.kind == "ident":
            if t.text in UNSUPPORTED_KEYWORDS:
                raise self.error(f"unsupported construct '{t.text}'", E_UNSUPPORTED)
            self.advance()
            if self.at("("):
                raise self.error(f"function call '{t.text}(...)' is not supported", E_UNSUPPORTED)
            return self.parse_selects(A.Ident(t.text, self.span_from(t)), t)
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.at("{"):
            self.advance()
            first = self.parse_expr()
            if self.at("{"):
                self.advance()
                parts = [self.parse_expr()]
                while self.at(","):
                    self.advance()
                    parts.append(self.parse_expr())
                self.expect("}")
                inner = A.Concat(tuple(parts), self.span_from(t))
                self.expect("}")
                return A.Repl(first, inner, self.span_from(t))
            parts = [first]
            while self.at(","):
                self.advance()
                parts.append(self.parse_expr())
            self.expect("}")
            return A.Concat(tuple(parts), self.span_from(t))
        if t.kind == "sysname":
            raise self.error(f"system function '{t.text}' is not supported", E_UNSUPPORTED)
        raise self.error(f"expected an expression but found {self.describe(t)}")


def choose_top(modules: list[A.Module], path: str) -> str:
    if not modules:
        return ""
    stem = PurePath(path).stem
    names = [m.name for m in modules]
    if stem in names:
        return stem
    used = {it.module for m in modules for it in m.items if isinstance(it, A.Instance)}
    for n in names:
        if n not in used:
            return n
    return names[0]


def parse_modules(src: SourceFile) -> tuple[list[A.Module], list[SyntaxDiagnostic], set[str]]:
    """Syntax-only parse. Returns modules, diagnostics and names of modules that parsed cleanly."""
    p = Parser(src)
    modules: list[A.Module] = []
    clean: set[str] = set()
    while p.tok.kind != "eof":
        if p.at("module"):
            before = len(p.diags)
            m = p.parse_module()
            modules.append(m)
            if len(p.diags) == before:
                clean.add(m.name)
        else:
            t = p.tok
            if t.text in UNSUPPORTED_KEYWORDS:
                p.report(p.error(f"unsupported construct '{t.text}'", E_UNSUPPORTED))
            else:
                p.report(p.error(f"expected 'module' but found {p.describe(t)}"))
            while p.tok.kind != "eof" and not p.at("module"):
                p.advance()
    # Lexer diagnostics on a module's lines invalidate it as well.
    return modules, p.diags, clean

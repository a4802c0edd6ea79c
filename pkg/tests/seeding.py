"""Seeded-warning corpus: golden designs with blocking/nonblocking and sensitivity defects injected."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from veriloop import corpus
from veriloop.frontend import ast as A, parse, print_design
from veriloop.lint import RESET_NAME


@dataclass(frozen=True)
class Seeded:
    name: str
    codes: frozenset[str]
    text: str
    golden: A.Design


def _assign_paths(stmt: A.Stmt, path: A.Path):
    """Procedural assignments outside for-loop headers."""
    if isinstance(stmt, A.Assign):
        yield path, stmt
    elif isinstance(stmt, A.Block):
        for i, s in enumerate(stmt.stmts):
            yield from _assign_paths(s, path + (("stmts", i),))
    elif isinstance(stmt, A.If):
        yield from _assign_paths(stmt.then, path + (("then", None),))
        if stmt.else_ is not None:
            yield from _assign_paths(stmt.else_, path + (("else_", None),))
    elif isinstance(stmt, A.Case):
        for i, it in enumerate(stmt.items):
            yield from _assign_paths(it.body, path + (("items", i), ("body", None)))
    elif isinstance(stmt, A.For):
        yield from _assign_paths(stmt.body, path + (("body", None),))


def _flip(design: A.Design, path: A.Path, always: A.Always, blocking: bool) -> A.Design:
    for sub, node in _assign_paths(always.body, ()):
        design = A.replace_at(design, path + (("body", None),) + sub, dataclasses.replace(node, blocking=blocking))
    return design


def _drop_reset_edge(design: A.Design, path: A.Path, always: A.Always) -> A.Design | None:
    kept = tuple(si for si in always.sens if not (si.edge and RESET_NAME.search(si.name)))
    if len(kept) == len(always.sens) or not kept:
        return None
    return A.replace_at(design, path, dataclasses.replace(always, sens=kept))


def seeded_variants(name: str) -> list[Seeded]:
    """One variant per defect kind present in the module, plus one combining all of them."""
    g = parse(corpus.get(name).text, name)
    out: list[Seeded] = []
    combined, codes = g, set()
    for path, node in list(A.walk(g)):
        if not isinstance(node, A.Always):
            continue
        if node.edge_triggered:
            nb = [a for _, a in _assign_paths(node.body, ()) if not a.blocking]
            if nb:
                out.append(Seeded(name, frozenset({"W2"}), print_design(_flip(g, path, node, True)), g))
                combined = _flip(combined, path, A.get_at(combined, path), True)
                codes.add("W2")
            dropped = _drop_reset_edge(g, path, node)
            if dropped is not None:
                out.append(Seeded(name, frozenset({"W3"}), print_design(dropped), g))
                combined = _drop_reset_edge(combined, path, A.get_at(combined, path))
                codes.add("W3")
        elif any(a.blocking for _, a in _assign_paths(node.body, ())):
            out.append(Seeded(name, frozenset({"W1"}), print_design(_flip(g, path, node, False)), g))
            combined = _flip(combined, path, A.get_at(combined, path), False)
            codes.add("W1")
    if len(codes) > 1:
        out.append(Seeded(name, frozenset(codes), print_design(combined), g))
    return out


def seeded_corpus() -> list[Seeded]:
    return [s for n in corpus.names() for s in seeded_variants(n)]

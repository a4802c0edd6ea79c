"""Mutation-based benchmark generation.

Each mutant carries exactly one rewrite of one AST node, is classified as a
syntax or functional error, and is kept only if the default test suite
actually observes it.
"""

from __future__ import annotations

import dataclasses
import difflib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .agent.patch import _norm_snippet, find_all, normalize
from .frontend import ast as A
from .frontend import parse, print_design
from .frontend.elaborate import ElaboratedDesign, elaborate
from .frontend.widths import const_value, self_width
from .lint import check_text
from .sim import CombLoopDetected, LoopLimit, SimCompileError
from .testbench import PortContractViolation, default_stimulus, run_verify

KINDS = (
    "TypeMisuse",
    "BitwidthMisuse",
    "OperatorMisuse",
    "VariableNameMisuse",
    "ValueMisuse",
    "WrongJudgmentValue",
    "WrongSensitivity",
    "PortMismatch",
)

OPERATOR_SWAPS = {
    "+": "-", "-": "+",
    "&": "|", "|": "&",
    "==": "!=", "!=": "==",
    "<": "<=", "<=": "<",
    ">": ">=", ">=": ">",
    "<<": ">>", ">>": "<<",
    "&&": "||", "||": "&&",
}
COMPARISONS = {"<", "<=", ">", ">=", "==", "!="}

DEFAULT_PLAN = {
    "TypeMisuse": 1,
    "BitwidthMisuse": 1,
    "OperatorMisuse": 2,
    "VariableNameMisuse": 2,
    "ValueMisuse": 2,
    "WrongJudgmentValue": 1,
    "WrongSensitivity": 1,
    "PortMismatch": 1,
}
ATTEMPTS_PER_MUTANT = 12


class EquivalentMutant(Exception):
    """The rewrite is not observable under the default suite."""


class UnclassifiableMutant(Exception):
    """The mutant could not be simulated to a verdict (combinational loop, runaway loop, port change)."""


@dataclass(frozen=True)
class MutationOp:
    kind: str
    path: A.Path  # location of the rewritten node inside the Design
    new: A.Node
    line: int
    label: str = ""


@dataclass
class Mutant:
    id: str
    module: str
    family: str
    kind: str
    cls: str  # syntax | functional
    line: int
    before: str
    after: str
    base_text: str
    text: str
    label: str = ""
    pass_rate: float | None = None

    def manifest_entry(self) -> dict[str, object]:
        return {
            "id": self.id,
            "module": self.module,
            "family": self.family,
            "kind": self.kind,
            "class": self.cls,
            "line": self.line,
            "before": self.before,
            "after": self.after,
            "path": f"mutants/{self.id}.v",
            "label": self.label,
        }


# ------------------------------------------------------------------- sites


def _module_paths(design: A.Design) -> Iterator[tuple[A.Path, A.Module]]:
    for i, m in enumerate(design.modules):
        yield (("modules", i),), m


def _lookup(mod: A.Module):
    nets = mod.nets()

    def lookup(name: str) -> tuple[int, bool]:
        n = nets.get(name)
        return (n.width, n.array is not None) if n else (1, False)

    return nets, lookup


def _top_ports(design: A.Design) -> set[str]:
    return {p.name for p in design.top_module.ports}


def _walk_items(mod: A.Module, mpath: A.Path) -> Iterator[tuple[A.Path, A.Node]]:
    for i, it in enumerate(mod.items):
        yield from A.walk(it, mpath + (("items", i),))


def _type_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        for field_name, decls in (("port_decls", mod.port_decls), ("items", mod.items)):
            for i, d in enumerate(decls):
                if not isinstance(d, A.Decl) or d.direction == "input" or d.kind == "integer":
                    continue
                if d.direction is not None:
                    new_kind = None if d.kind == "reg" else "reg"
                elif d.kind in ("reg", "wire"):
                    new_kind = "wire" if d.kind == "reg" else "reg"
                else:
                    continue
                label = f"{d.kind or 'implicit wire'} -> {new_kind or 'implicit wire'}"
                yield MutationOp("TypeMisuse", mpath + ((field_name, i),), dataclasses.replace(d, kind=new_kind), d.span.line, label)


def _width_sites(design: A.Design) -> Iterable[MutationOp]:
    top_ports = _top_ports(design)
    for mpath, mod in _module_paths(design):
        is_top = mod.name == design.top
        for field_name, decls in (("port_decls", mod.port_decls), ("items", mod.items)):
            for i, d in enumerate(decls):
                if not isinstance(d, A.Decl) or d.range is None or d.kind == "integer":
                    continue
                if is_top and any(dn.name in top_ports for dn in d.names):
                    continue  # top-level ports define the verification contract
                r = d.range
                if r.width < 2:
                    continue
                msb = r.msb - 1 if r.msb > r.lsb else r.msb + 1
                new = dataclasses.replace(d, range=dataclasses.replace(r, msb=msb))
                yield MutationOp("BitwidthMisuse", mpath + ((field_name, i),), new, d.span.line, f"[{r.msb}:{r.lsb}] -> [{msb}:{r.lsb}]")


def _operator_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        for path, node in _walk_items(mod, mpath):
            if isinstance(node, A.Binary) and node.op in OPERATOR_SWAPS:
                new_op = OPERATOR_SWAPS[node.op]
                yield MutationOp("OperatorMisuse", path, dataclasses.replace(node, op=new_op), node.span.line, f"{node.op} -> {new_op}")


def _read_idents(node: A.Node, path: A.Path) -> Iterator[tuple[A.Path, A.Ident]]:
    """Identifier uses in read position (assignment targets and instance ports excluded)."""
    if isinstance(node, A.Ident):
        yield path, node
        return
    if isinstance(node, (A.Instance, A.Decl, A.SensItem)):
        return
    for (name, idx), child in A.children(node):
        if name == "lhs" and isinstance(node, (A.Assign, A.ContAssign)):
            continue
        if isinstance(node, A.For) and name in ("init", "step"):
            continue
        yield from _read_idents(child, path + ((name, idx),))


def _name_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        nets = mod.nets()
        for i, it in enumerate(mod.items):
            for path, ident in _read_idents(it, mpath + (("items", i),)):
                n = nets.get(ident.name)
                if n is None or n.array is not None:
                    continue
                for other in nets.values():
                    if other.name == ident.name or other.array is not None or other.width != n.width:
                        continue
                    if (other.kind == "integer") != (n.kind == "integer"):
                        continue
                    new = dataclasses.replace(ident, name=other.name)
                    yield MutationOp("VariableNameMisuse", path, new, ident.span.line, f"{ident.name} -> {other.name}")


def _compare_operands(mod: A.Module, mpath: A.Path) -> set[A.Path]:
    out = set()
    for path, node in _walk_items(mod, mpath):
        if isinstance(node, A.Binary) and node.op in COMPARISONS:
            for side in ("left", "right"):
                if isinstance(getattr(node, side), A.Number):
                    out.add(path + ((side, None),))
    return out


def _value_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        judged = _compare_operands(mod, mpath)
        for path, node in _walk_items(mod, mpath):
            if not isinstance(node, A.Number) or not node.sized or path in judged:
                continue
            v, x = node.value_xmask
            if x:
                continue
            nv = 1 if v == 0 else 0
            text = A.format_literal(node.width, node.base, nv)
            yield MutationOp("ValueMisuse", path, dataclasses.replace(node, text=text), node.span.line, f"{node.text} -> {text}")


def _perturb(n: A.Number) -> A.Number | None:
    c = const_value(n)
    if c is None:
        return None
    w = n.width
    cand = [2 * c + 1, c + 1, c - 1]
    for v in cand:
        if v >= 0 and (w is None or v < (1 << w)) and v != c:
            text = A.format_literal(w, n.base, v) if n.based else str(v)
            return dataclasses.replace(n, text=text)
    return None


def _judgment_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        for path in sorted(_compare_operands(mod, mpath)):
            n = A.get_at(design, path)
            new = _perturb(n)
            if new is not None:
                yield MutationOp("WrongJudgmentValue", path, new, n.span.line, f"{n.text} -> {new.text}")


def _sensitivity_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        for i, it in enumerate(mod.items):
            if isinstance(it, A.Always) and it.edge_triggered and len(it.sens) >= 2:
                for k, si in enumerate(it.sens):
                    rest = it.sens[:k] + it.sens[k + 1 :]
                    label = f"drop '{si.edge + ' ' if si.edge else ''}{si.name}'"
                    yield MutationOp("WrongSensitivity", mpath + (("items", i),), dataclasses.replace(it, sens=rest), it.span.line, label)


def _port_sites(design: A.Design) -> Iterable[MutationOp]:
    for mpath, mod in _module_paths(design):
        _, lookup = _lookup(mod)
        for i, it in enumerate(mod.items):
            if not isinstance(it, A.Instance):
                continue
            ipath = mpath + (("items", i),)
            conns = list(it.conns)
            widths = [self_width(c.expr, lookup) if c.expr is not None else None for c in conns]
            for a in range(len(conns)):
                for b in range(a + 1, len(conns)):
                    if widths[a] is None or widths[a] != widths[b] or conns[a].expr == conns[b].expr:
                        continue
                    new_conns = list(conns)
                    new_conns[a] = dataclasses.replace(conns[a], expr=conns[b].expr)
                    new_conns[b] = dataclasses.replace(conns[b], expr=conns[a].expr)
                    yield MutationOp(
                        "PortMismatch", ipath, dataclasses.replace(it, conns=tuple(new_conns)), conns[a].span.line,
                        f"swap .{conns[a].port} and .{conns[b].port}",
                    )
            for a, c in enumerate(conns):
                if isinstance(c.expr, A.Concat) and len(c.expr.parts) >= 2:
                    new_conns = list(conns)
                    new_conns[a] = dataclasses.replace(c, expr=dataclasses.replace(c.expr, parts=c.expr.parts[1:]))
                    yield MutationOp("PortMismatch", ipath, dataclasses.replace(it, conns=tuple(new_conns)), c.span.line, f"narrow .{c.port}")


_ENUMERATORS = {
    "TypeMisuse": _type_sites,
    "BitwidthMisuse": _width_sites,
    "OperatorMisuse": _operator_sites,
    "VariableNameMisuse": _name_sites,
    "ValueMisuse": _value_sites,
    "WrongJudgmentValue": _judgment_sites,
    "WrongSensitivity": _sensitivity_sites,
    "PortMismatch": _port_sites,
}


def enumerate_sites(design: A.Design | ElaboratedDesign, kind: str) -> list[MutationOp]:
    d = design.design if isinstance(design, ElaboratedDesign) else design
    try:
        fn = _ENUMERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown mutation kind {kind!r}") from None
    return list(fn(d))


# ------------------------------------------------------------------ inject


def _unique_hunk(base: str, mutated: str) -> tuple[int, str, str]:
    """(first changed line, before snippet, after snippet); context grows until ``after`` is unique."""
    a, b = base.splitlines(), mutated.splitlines()
    sm = difflib.SequenceMatcher(a=a, b=b, autojunk=False)
    ops = [op for op in sm.get_opcodes() if op[0] != "equal"]
    if not ops:
        raise EquivalentMutant("rewrite produced identical text")
    i1, i2, j1, j2 = ops[0][1], ops[-1][2], ops[0][3], ops[-1][4]
    norm, _ = normalize(mutated)
    up = down = 0
    while True:
        lo_a, hi_a = max(0, i1 - up), min(len(a), i2 + down)
        lo_b, hi_b = max(0, j1 - up), min(len(b), j2 + down)
        after = "\n".join(b[lo_b:hi_b])
        if after.strip() and len(find_all(norm, _norm_snippet(after))) == 1:
            return j1 + 1, "\n".join(a[lo_a:hi_a]), after
        if lo_b == 0 and hi_b == len(b):
            return j1 + 1, "\n".join(a[lo_a:hi_a]), after
        if up <= down:
            up += 1
        else:
            down += 1


def inject(
    design: A.Design | ElaboratedDesign,
    op: MutationOp,
    mutant_id: str = "",
    family: str = "",
    golden: ElaboratedDesign | None = None,
) -> Mutant:
    """Apply one rewrite and classify it; raises EquivalentMutant for unobservable rewrites."""
    d = design.design if isinstance(design, ElaboratedDesign) else design
    base_text = print_design(d)
    text = print_design(A.replace_at(d, op.path, op.new))
    line, before, after = _unique_hunk(base_text, text)
    mdesign, errors = check_text(text, f"{mutant_id or 'mutant'}.v", d.top)
    m = Mutant(mutant_id, d.top, family, op.kind, "syntax", line, before, after, base_text, text, op.label)
    if mdesign is None:
        return m
    if golden is None:
        golden = elaborate(d, d.top)
    try:
        ed = elaborate(mdesign, d.top)
        rep = run_verify(ed, golden, default_stimulus(golden))
    except (CombLoopDetected, LoopLimit, SimCompileError, PortContractViolation) as exc:
        raise UnclassifiableMutant(f"{type(exc).__name__}: {exc}") from exc
    if rep.passed:
        raise EquivalentMutant(f"{op.kind} at line {op.line} ({op.label}) is not observable")
    m.cls = "functional"
    m.pass_rate = rep.pass_rate
    return m


# --------------------------------------------------------------- benchmark


@dataclass
class BenchmarkSet:
    mutants: list[Mutant]
    plan: dict[str, int]
    seed: int
    sites: dict[str, dict[str, int]] = field(default_factory=dict)  # module -> kind -> site count
    families: dict[str, str] = field(default_factory=dict)  # module -> family
    golden: dict[str, str] = field(default_factory=dict)  # module -> reference text

    def manifest(self) -> list[dict[str, object]]:
        return [m.manifest_entry() for m in self.mutants]

    def matrix(self) -> dict[str, dict[str, int | None]]:
        """family x kind -> mutant count, None where no module of the family offers a site."""
        out: dict[str, dict[str, int | None]] = {}
        for mod, fam in sorted(self.families.items()):
            row = out.setdefault(fam, {k: None for k in KINDS})
            for k in KINDS:
                if self.sites.get(mod, {}).get(k):
                    row[k] = row[k] or 0
        for m in self.mutants:
            row = out.setdefault(m.family, {k: None for k in KINDS})
            row[m.kind] = (row[m.kind] or 0) + 1
        return out

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        (out / "mutants").mkdir(parents=True, exist_ok=True)
        (out / "golden").mkdir(parents=True, exist_ok=True)
        for m in self.mutants:
            (out / "mutants" / f"{m.id}.v").write_text(m.text)
        for mod, text in sorted(self.golden.items()):
            (out / "golden" / f"{mod}.v").write_text(text)
        (out / "benchmark.json").write_text(json.dumps(self.manifest(), indent=2) + "\n")
        meta = {"plan": self.plan, "seed": self.seed, "sites": self.sites, "families": self.families}
        (out / "plan.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return out / "benchmark.json"

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkSet":
        p = Path(path)
        root = p.parent if p.is_file() else p
        entries = json.loads((root / "benchmark.json").read_text())
        meta_p = root / "plan.json"
        meta = json.loads(meta_p.read_text()) if meta_p.exists() else {"plan": {}, "seed": 0, "sites": {}, "families": {}}
        golden = {f.stem: f.read_text() for f in sorted((root / "golden").glob("*.v"))}
        mutants = []
        for e in entries:
            text = (root / e["path"]).read_text()
            base = golden.get(e["module"], "")
            mutants.append(
                Mutant(e["id"], e["module"], e.get("family", ""), e["kind"], e["class"], e["line"], e["before"], e["after"], base, text, e.get("label", ""))
            )
        return cls(mutants, meta["plan"], meta["seed"], meta["sites"], meta["families"], golden)


def build_benchmark(
    corpus: Iterable[tuple[str, str, str]] | None = None,
    plan: dict[str, int] | None = None,
    seed: int = 0,
) -> BenchmarkSet:
    """Seeded selection of up to ``plan[kind]`` mutants per kind per module.

    ``corpus`` yields ``(module name, family, source text)``; the bundled
    reference designs are used when omitted.
    """
    if corpus is None:
        from . import corpus as bundled

        corpus = [(e.name, e.family, e.text) for e in bundled.entries()]
    plan = dict(DEFAULT_PLAN if plan is None else plan)
    bench = BenchmarkSet([], plan, seed)
    for name, family, text in corpus:
        design = parse(text, name)
        golden = elaborate(design, name)
        bench.families[name] = family
        bench.golden[name] = print_design(design)
        bench.sites[name] = {}
        for kind in KINDS:
            sites = enumerate_sites(design, kind)
            bench.sites[name][kind] = len(sites)
            want = plan.get(kind, 0)
            if not sites or want <= 0:
                continue
            rng = random.Random(f"{seed}:{name}:{kind}")
            order = list(range(len(sites)))
            rng.shuffle(order)
            got = 0
            for k in order[: want * ATTEMPTS_PER_MUTANT]:
                mid = f"{name}-{kind}-{got + 1}"
                try:
                    m = inject(design, sites[k], mid, family, golden)
                except (EquivalentMutant, UnclassifiableMutant):
                    continue
                bench.mutants.append(m)
                got += 1
                if got >= want:
                    break
    bench.mutants.sort(key=lambda m: m.id)
    return bench

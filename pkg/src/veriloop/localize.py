"""Mismatch extraction, dataflow graphs and time-aware dynamic slicing.

Traversal states are ``(signal, cycle, phase)``. Phase ``post`` is the
value after the cycle's clock edge, ``pre`` the settled value just before
it. A register read at ``pre`` of cycle t is the register's ``post`` value
of cycle t-1, which is where the traversal steps back in time.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .frontend import ast as A
from .frontend.elaborate import ElaboratedDesign
from .sim import Trace, UnknownSignal, compile_expr
from .testbench import VerifyReport

SLICE_TIMES = 8  # mismatch cycles sliced per signal
DEPTH_LIMIT = 32  # register crossings per traversal
MAX_REPORTED_TIMES = 16
DEFAULT_TH = 2


class MalformedLog(ValueError):
    pass


# ------------------------------------------------------------------ err_chk


def err_chk(log: Iterable[str] | str, trace: Trace) -> tuple[list[int], list[str], dict[int, dict[str, str]]]:
    """Mismatch times, mismatching signals and input values at each mismatch time."""
    lines = log.splitlines() if isinstance(log, str) else list(log)
    times: set[int] = set()
    first_fail: dict[str, tuple[int, int]] = {}
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLog(f"line {n}: not JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or "kind" not in rec:
            raise MalformedLog(f"line {n}: record without 'kind'")
        if rec["kind"] == "summary":
            if "pass_rate" not in rec:
                raise MalformedLog(f"line {n}: summary without pass_rate")
            continue
        if rec["kind"] != "check":
            raise MalformedLog(f"line {n}: unknown record kind {rec['kind']!r}")
        try:
            t, sig, ok = int(rec["time"]), str(rec["signal"]), rec["pass"]
            rec["expected"], rec["actual"]
        except (KeyError, TypeError, ValueError):
            raise MalformedLog(f"line {n}: check record missing fields") from None
        if not isinstance(ok, bool):
            raise MalformedLog(f"line {n}: 'pass' must be a boolean")
        if not ok:
            times.add(t)
            first_fail.setdefault(sig, (t, n))
    mt = sorted(times)
    ms = sorted(first_fail, key=lambda s: first_fail[s])
    iv: dict[int, dict[str, str]] = {}
    for t in mt:
        iv[t] = {name: trace.query(name, t).to_bin() for name in trace.layout.inputs}
    return mt, ms, iv


# --------------------------------------------------------------------- DFG


@dataclass(frozen=True)
class Guard:
    """Branch condition of an edge: an ``if`` arm or one ``case`` item."""

    kind: str  # if | case
    expr: A.Expr  # condition or case subject
    branch: int  # if: 1 then / 0 else; case: item index, -1 when no label matched
    labels: tuple[tuple[A.Expr, ...], ...] = ()  # case: labels of every item (empty = default)
    line: int = 0


@dataclass(frozen=True)
class Edge:
    dst: str
    src: str | None  # None for constant sources
    line: int
    kind: str  # data | guard | event (always header) | decl (declaration)
    seq: bool
    guards: tuple[Guard, ...] = ()
    in_loop: bool = False


@dataclass
class Dfg:
    root: str
    nodes: set[str] = field(default_factory=set)
    edges: list[Edge] = field(default_factory=list)

    def into(self, node: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node]

    def lines(self) -> set[int]:
        out = {e.line for e in self.edges}
        out.update(g.line for e in self.edges for g in e.guards)
        return out

    def combinational_acyclic(self) -> bool:
        adj: dict[str, set[str]] = {}
        for e in self.edges:
            if not e.seq and e.src is not None and e.kind == "data" and not e.in_loop:
                adj.setdefault(e.src, set()).add(e.dst)
        state: dict[str, int] = {}

        def visit(n: str) -> bool:
            state[n] = 1
            for m in adj.get(n, ()):
                s = state.get(m, 0)
                if s == 1 or (s == 0 and not visit(m)):
                    return False
            state[n] = 2
            return True

        return all(state.get(n, 0) == 2 or visit(n) for n in list(adj))


def _reads(e: A.Expr) -> list[str]:
    return list(dict.fromkeys(A.identifiers(e)))


def _process_edges(body: A.Stmt, seq: bool, header: int = 0) -> list[Edge]:
    out: list[Edge] = []
    if seq and header:
        out.extend(Edge(dst, None, header, "event", True) for dst in _targets(body))

    def walk(s: A.Stmt | None, guards: tuple[Guard, ...], loop: bool) -> None:
        if s is None or isinstance(s, A.Null):
            return
        if isinstance(s, A.Assign):
            srcs = _reads(s.rhs) + [r for r in A.lvalue_reads(s.lhs)]
            for dst in A.lvalue_bases(s.lhs):
                for src in dict.fromkeys(srcs) or [None]:
                    out.append(Edge(dst, src, s.span.line, "data", seq, guards, loop))
            return
        if isinstance(s, A.Block):
            for x in s.stmts:
                walk(x, guards, loop)
            return
        if isinstance(s, A.If):
            targets = _targets(s)
            for dst in targets:
                for src in _reads(s.cond) or [None]:
                    out.append(Edge(dst, src, s.span.line, "guard", seq, guards, loop))
            walk(s.then, guards + (Guard("if", s.cond, 1, line=s.span.line),), loop)
            walk(s.else_, guards + (Guard("if", s.cond, 0, line=s.span.line),), loop)
            return
        if isinstance(s, A.Case):
            labels = tuple(it.labels for it in s.items)
            for dst in _targets(s):
                for src in _reads(s.subject) or [None]:
                    out.append(Edge(dst, src, s.span.line, "guard", seq, guards, loop))
            # with no label matching, every label shaped the outcome
            miss = guards + (Guard("case", s.subject, -1, labels, s.span.line),)
            for it in s.items:
                if it.labels:
                    out.extend(Edge(dst, None, it.span.line, "guard", seq, miss, loop) for dst in _targets(s))
            for k, it in enumerate(s.items):
                g = guards + (Guard("case", s.subject, k, labels, it.span.line),)
                for dst in _targets(it.body):
                    for src in dict.fromkeys(r for lab in it.labels for r in _reads(lab)):
                        out.append(Edge(dst, src, it.span.line, "guard", seq, g, loop))
                walk(it.body, g, loop)
            return
        if isinstance(s, A.For):
            for dst in _targets(s.body):
                for src in _reads(s.cond) + A.lvalue_bases(s.init.lhs):
                    out.append(Edge(dst, src, s.span.line, "guard", seq, guards, True))
            walk(s.init, guards, True)
            walk(s.step, guards, True)
            walk(s.body, guards, True)
            return

    walk(body, (), False)
    return out


def _targets(s: A.Stmt | None) -> list[str]:
    out: list[str] = []
    if s is None:
        return out
    for st in A.iter_stmts(s):
        if isinstance(st, A.Assign):
            out.extend(A.lvalue_bases(st.lhs))
    return list(dict.fromkeys(out))


def _all_edges(ed: ElaboratedDesign) -> dict[str, list[Edge]]:
    cached = getattr(ed, "_dfg_edges", None)
    if cached is None:
        cached = {}
        for p in ed.processes:
            for e in _process_edges(p.body, p.kind == "seq", p.span.line):
                cached.setdefault(e.dst, []).append(e)
        for path, mname in ed.instances:
            mod = ed.design.module(mname)
            if mod is None:
                continue
            prefix = path + "." if path else ""
            for d in mod.decls():
                for dn in d.names:
                    name = prefix + dn.name
                    if name in ed.signals and not (not path and d.direction == "input"):
                        cached.setdefault(name, []).append(Edge(name, None, d.span.line, "decl", False))
        ed._dfg_edges = cached  # type: ignore[attr-defined]
    return cached


def build_dfg(design: ElaboratedDesign, signal: str) -> Dfg:
    """Backward-reachable def-use graph of ``signal`` (through registers and instance ports)."""
    if signal not in design.signals:
        raise UnknownSignal(signal)
    by_dst = _all_edges(design)
    g = Dfg(signal, {signal})
    work = deque([signal])
    while work:
        n = work.popleft()
        for e in by_dst.get(n, ()):
            g.edges.append(e)
            if e.src is not None and e.src not in g.nodes:
                g.nodes.add(e.src)
                work.append(e.src)
    return g


def static_slice(dfg: Dfg) -> set[int]:
    return dfg.lines()


# ------------------------------------------------------------ dynamic slice


class _GuardEval:
    def __init__(self, trace: Trace):
        self.layout = trace.layout
        self.fns: dict[int, Callable] = {}
        self.keep: list[A.Expr] = []

    def value(self, e: A.Expr, snap) -> tuple[int, int] | None:
        f = self.fns.get(id(e))
        if f is None:
            try:
                f = compile_expr(e, self.layout)
            except Exception:  # noqa: BLE001 - unevaluable guard: treat as unknown
                f = lambda V, X: None  # noqa: E731
            self.fns[id(e)] = f
            self.keep.append(e)
        return f(*snap)

    def taken(self, g: Guard, snap) -> bool:
        """False only when the guard provably selected a different branch."""
        if g.kind == "if":
            r = self.value(g.expr, snap)
            if r is None or r[1]:
                return True
            return (r[0] != 0) == bool(g.branch)
        subj = self.value(g.expr, snap)
        if subj is None or subj[1]:
            return True
        matched = None
        for k, labels in enumerate(g.labels):
            for lab in labels:
                lv = self.value(lab, snap)
                if lv is None or lv[1]:
                    return True
                if lv[0] == subj[0]:
                    matched = k
                    break
            if matched is not None:
                break
        if g.branch == -1:
            return matched is None
        if matched is not None:
            return matched == g.branch
        return not g.labels[g.branch]


def dynamic_slice(
    design: ElaboratedDesign,
    dfg: Dfg,
    mt: Sequence[int],
    trace: Trace,
    file: str = "dut.v",
) -> list[tuple[str, int]]:
    """Lines on executed paths into ``dfg.root`` at the given cycles, most frequent first."""
    freq, _ = slice_counts(dfg, mt, trace)
    return [(file, ln) for ln in _ordered(freq)]


def _ordered(freq: Counter[int]) -> list[int]:
    return [ln for ln, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))]


def slice_counts(dfg: Dfg, mt: Sequence[int], trace: Trace) -> tuple[Counter[int], list[str]]:
    """Per-line visit counts (one per mismatch cycle) and the signals reached, in discovery order."""
    if trace.pres is None:
        raise ValueError("dynamic slicing needs a trace with pre-edge snapshots")
    for t in mt:
        if t < 0 or t > trace.horizon:
            raise_beyond(t, trace)
    by_dst: dict[str, list[Edge]] = {}
    for e in dfg.edges:
        by_dst.setdefault(e.dst, []).append(e)
    seq_driven = {e.dst for e in dfg.edges if e.seq}
    inputs = set(trace.layout.inputs)
    ev = _GuardEval(trace)
    freq: Counter[int] = Counter()
    discovered: list[str] = []
    for t0 in mt:
        lines: set[int] = set()
        seen: set[tuple[str, int, str]] = set()
        work = deque([(dfg.root, t0, "post")])
        while work:
            state = work.popleft()
            if state in seen:
                continue
            seen.add(state)
            sig, t, phase = state
            if sig in inputs or t < 0:
                continue
            if sig not in discovered:
                discovered.append(sig)
            if sig in seq_driven:
                if phase == "pre":
                    if t - 1 >= 0 and t0 - (t - 1) <= DEPTH_LIMIT:
                        work.append((sig, t - 1, "post"))
                    continue
                snap, nxt = trace.pres[t], (t, "pre")
            else:
                snap = trace.posts[t] if phase == "post" else trace.pres[t]
                nxt = (t, phase)
            assigned = False
            for e in by_dst.get(sig, ()):
                if e.kind != "decl" and e.seq != (sig in seq_driven):
                    continue
                if not e.in_loop and not all(ev.taken(g, snap) for g in e.guards):
                    continue
                assigned = assigned or e.kind == "data"
                lines.add(e.line)
                lines.update(g.line for g in e.guards)
                if e.src is not None:
                    work.append((e.src, *nxt))
            if not assigned and t - 1 >= 0 and t0 - (t - 1) <= DEPTH_LIMIT:
                # nothing executed: the value was held from the previous cycle
                work.append((sig, t - 1, "post"))
        freq.update(lines)
    return freq, discovered


def raise_beyond(t: int, trace: Trace) -> None:
    from .sim import TimeBeyondHorizon

    raise TimeBeyondHorizon(f"time {t} outside 0..{trace.horizon}")


# ------------------------------------------------------------------ ErrInfo


@dataclass
class ErrInfo:
    mode: str  # MS | SL
    mismatch_signals: list[str]
    mismatch_times: list[int]
    input_values: dict[int, dict[str, str]]
    suspicious_lines: list[tuple[str, int]] = field(default_factory=list)

    def to_json(self) -> dict[str, object]:
        times = self.mismatch_times[:MAX_REPORTED_TIMES]
        inputs: dict[str, dict[str, str]] = {}
        for t in times:
            for name, val in self.input_values.get(t, {}).items():
                inputs.setdefault(name, {})[str(t)] = val
        return {
            "mode": self.mode,
            "signals": list(self.mismatch_signals),
            "times": times,
            "inputs": inputs,
            "lines": [[f, ln] for f, ln in self.suspicious_lines],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, d: dict) -> "ErrInfo":
        iv: dict[int, dict[str, str]] = {}
        for name, per in d.get("inputs", {}).items():
            for t, val in per.items():
                iv.setdefault(int(t), {})[name] = val
        return cls(d["mode"], list(d["signals"]), list(d["times"]), iv, [(f, int(ln)) for f, ln in d.get("lines", [])])


def fetch_err_info(
    design: ElaboratedDesign,
    report: VerifyReport,
    iter: int,
    th: int = DEFAULT_TH,
    file: str = "dut.v",
) -> ErrInfo:
    """MS mode below the threshold, SL mode (slices plus signal expansion) from it on."""
    if iter < 1 or th < 1:
        raise ValueError("iter and th must be >= 1")
    mt, ms, iv = err_chk(report.log, report.trace)
    if iter < th or not ms:
        return ErrInfo("MS", ms, mt, iv)
    failing: dict[str, list[int]] = {}
    for m in report.mismatches:
        failing.setdefault(m.signal, [])
        if m.time not in failing[m.signal]:
            failing[m.signal].append(m.time)
    freq: Counter[int] = Counter()
    found: list[str] = []
    for sig in ms:
        dfg = build_dfg(design, sig)
        times = sorted(failing.get(sig, mt))[:SLICE_TIMES]
        counts, reached = slice_counts(dfg, times, report.trace)
        freq.update(counts)
        found.extend(r for r in reached if r not in found)
    lines = [(file, ln) for ln in _ordered(freq)]
    inputs = set(report.trace.layout.inputs)
    expanded = list(ms)
    for s in found:
        if s not in expanded and s not in inputs and design.signals[s].kind != "integer":
            expanded.append(s)
    return ErrInfo("SL", expanded, mt, iv, lines)

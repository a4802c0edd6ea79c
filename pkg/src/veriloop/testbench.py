"""Differential testbench: stimulus generation, golden-vs-DUT scoreboard, L_UVM log.

The golden design is simulated live under the same stimulus as the DUT and
each top-level output is checked once per post-reset cycle.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator

from .frontend import print_design
from .frontend.elaborate import ElaboratedDesign
from .sim import Cycle, Simulator, Trace, Value, get_model, matches
from .sim.values import bin_str

EXHAUSTIVE_LIMIT = 14
DEFAULT_SEQUENCES = 8
DEFAULT_CYCLES = 256
EXTENDED_SEQUENCES = 32
EXTENDED_CYCLES = 1024
EXTENDED_SEED_OFFSET = 1000

_CLOCK_RE = re.compile(r"^(clk|clock)(_?i(n)?)?$|_clk$|^clk_", re.I)
_RESET_RE = re.compile(r"rst|reset", re.I)
_ACTIVE_LOW_RE = re.compile(r"(n|_n|_b|_l)$", re.I)


class ExhaustiveTooLarge(ValueError):
    pass


class PortContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class PortRoles:
    clock: str | None
    reset: str | None
    reset_active: int  # level that asserts reset
    data: tuple[tuple[str, int], ...]  # (name, width) of every other input

    @property
    def data_bits(self) -> int:
        return sum(w for _, w in self.data)


def port_roles(ed: ElaboratedDesign) -> PortRoles:
    """Identify clock and reset inputs by name (falling back to edge usage for the clock)."""
    ins = [(s.path, s.width) for s in ed.inputs]
    clock = reset = None
    if not ed.is_combinational:
        edge_names = [si.name for p in ed.processes if p.kind == "seq" for si in p.sens if si.edge]
        for name, w in ins:
            if w == 1 and _CLOCK_RE.search(name):
                clock = name
                break
        if clock is None:
            for n in edge_names:
                if any(n == name for name, w in ins if w == 1) and not _RESET_RE.search(n):
                    clock = n
                    break
    for name, w in ins:
        if w == 1 and name != clock and _RESET_RE.search(name):
            reset = name
            break
    active = 0 if reset and _ACTIVE_LOW_RE.search(reset) else 1
    data = tuple((n, w) for n, w in ins if n not in (clock, reset))
    return PortRoles(clock, reset, active, data)


@dataclass(frozen=True)
class Stimulus:
    """Input sequences plus the reset protocol that precedes each of them.

    ``sequences[i][c]`` holds the data-input values of cycle ``c`` in the
    column order of ``roles.data``.
    """

    mode: str
    seed: int
    roles: PortRoles
    sequences: tuple[tuple[tuple[int, ...], ...], ...]
    reset_cycles: int = 1

    @cached_property
    def key(self) -> str:
        h = hashlib.sha1(repr((self.mode, self.seed, self.roles, self.reset_cycles, self.sequences)).encode())
        return h.hexdigest()

    @property
    def cycles(self) -> int:
        return sum(len(s) for s in self.sequences)

    def schedule(self) -> Iterator[Cycle]:
        r = self.roles
        names = [n for n, _ in r.data]
        for seq in self.sequences:
            if r.reset is not None:
                for _ in range(self.reset_cycles):
                    # reset with the clock held low: only asynchronous logic reacts
                    vals = {n: 0 for n in names}
                    vals[r.reset] = r.reset_active
                    if r.clock:
                        vals[r.clock] = 0
                    yield Cycle(vals, None, False)
            for row in seq:
                vals = dict(zip(names, row))
                if r.reset is not None:
                    vals[r.reset] = 1 - r.reset_active
                yield Cycle(vals, r.clock, True)

    def to_json(self) -> dict[str, object]:
        names = [n for n, _ in self.roles.data]
        return {
            "mode": self.mode,
            "seed": self.seed,
            "reset_cycles": self.reset_cycles,
            "sequences": [[dict(zip(names, row)) for row in seq] for seq in self.sequences],
        }


def make_stimulus(
    design: ElaboratedDesign,
    mode: str,
    seed: int = 1,
    cycles: int = DEFAULT_CYCLES,
    sequences: int = DEFAULT_SEQUENCES,
    directed: str | Path | dict | None = None,
    reset_cycles: int = 1,
) -> Stimulus:
    roles = port_roles(design)
    if mode == "exhaustive":
        n = roles.data_bits
        if n > EXHAUSTIVE_LIMIT:
            raise ExhaustiveTooLarge(f"{n} input bits exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}")
        seqs = []
        for pattern in range(1 << n):
            row, off = [], 0
            for _, w in reversed(roles.data):
                row.append((pattern >> off) & ((1 << w) - 1))
                off += w
            seqs.append((tuple(reversed(row)),))
        return Stimulus(mode, seed, roles, tuple(seqs), reset_cycles)
    if mode == "random":
        seqs = []
        for k in range(sequences):
            rng = random.Random(seed + k)
            seqs.append(tuple(tuple(rng.getrandbits(w) for _, w in roles.data) for _ in range(cycles)))
        return Stimulus(mode, seed, roles, tuple(seqs), reset_cycles)
    if mode == "directed":
        if directed is None:
            raise ValueError("directed mode needs a sequence file")
        data = directed if isinstance(directed, dict) else json.loads(Path(directed).read_text())
        seqs = []
        for seq in data["sequences"]:
            rows = []
            for cyc in seq:
                unknown = set(cyc) - {n for n, _ in roles.data}
                if unknown:
                    raise ValueError(f"directed stimulus drives unknown inputs {sorted(unknown)}")
                rows.append(tuple(int(cyc.get(n, 0)) for n, _ in roles.data))
            seqs.append(tuple(rows))
        return Stimulus(mode, seed, roles, tuple(seqs), int(data.get("reset_cycles", reset_cycles)))
    raise ValueError(f"unknown stimulus mode {mode!r}")


def default_stimulus(golden: ElaboratedDesign, seed: int = 1) -> Stimulus:
    """Exhaustive for small combinational designs, else 8 seeds x 256 random cycles."""
    roles = port_roles(golden)
    if golden.is_combinational and roles.data_bits <= EXHAUSTIVE_LIMIT:
        return make_stimulus(golden, "exhaustive", seed)
    return make_stimulus(golden, "random", seed, DEFAULT_CYCLES, DEFAULT_SEQUENCES)


def extended_stimulus(golden: ElaboratedDesign, seed: int = 1) -> Stimulus:
    """Independent validation suite; random seeds never overlap the default suite's."""
    roles = port_roles(golden)
    if golden.is_combinational and roles.data_bits <= EXHAUSTIVE_LIMIT:
        return make_stimulus(golden, "exhaustive", seed)
    return make_stimulus(golden, "random", seed + EXTENDED_SEED_OFFSET, EXTENDED_CYCLES, EXTENDED_SEQUENCES)


# ---------------------------------------------------------------- scoreboard


@dataclass(frozen=True)
class MismatchRecord:
    time: int
    signal: str
    expected: Value
    actual: Value


@dataclass
class VerifyReport:
    total_checks: int
    passed_checks: int
    mismatches: list[MismatchRecord]
    trace: Trace
    golden_trace: Trace
    outputs: list[str] = field(default_factory=list)
    complete: bool = True  # False when verification stopped at the first mismatch

    @property
    def pass_rate(self) -> float:
        return self.passed_checks / self.total_checks if self.total_checks else 0.0

    @property
    def passed(self) -> bool:
        return self.total_checks > 0 and self.passed_checks == self.total_checks

    @cached_property
    def log(self) -> list[str]:
        """L_UVM: one JSON line per check plus a trailing summary line."""
        out = []
        tr, gt = self.trace, self.golden_trace
        slots = [(o, tr._slot(o)[0], gt._slot(o)[0], tr.width(o)) for o in self.outputs]
        for t in range(len(tr)):
            if not tr.scored[t]:
                continue
            dv, dx = tr.posts[t]
            gv, gx = gt.posts[t]
            for name, ds, gs, w in slots:
                e = (gv[gs], gx[gs])
                a = (dv[ds], dx[ds])
                rec = {
                    "kind": "check",
                    "time": t,
                    "signal": name,
                    "expected": bin_str(e[0], e[1], w),
                    "actual": bin_str(a[0], a[1], w),
                    "pass": matches(e, a),
                }
                out.append(json.dumps(rec))
        out.append(json.dumps({"kind": "summary", "pass_rate": self.pass_rate}))
        return out

    def log_text(self) -> str:
        return "\n".join(self.log) + "\n"


def check_ports(dut: ElaboratedDesign, golden: ElaboratedDesign) -> None:
    a, b = sorted(dut.port_signature()), sorted(golden.port_signature())
    if a != b:
        raise PortContractViolation(f"DUT ports {a} differ from golden ports {b}")


_GOLDEN_CACHE: dict[tuple[str, str], Trace] = {}
_GOLDEN_CACHE_MAX = 256


def design_key(ed: ElaboratedDesign) -> str:
    k = getattr(ed, "_text_key", None)
    if k is None:
        k = hashlib.sha1(print_design(ed.design).encode()).hexdigest()
        ed._text_key = k  # type: ignore[attr-defined]
    return k


def golden_trace(golden: ElaboratedDesign, stim: Stimulus) -> Trace:
    key = (design_key(golden), stim.key)
    tr = _GOLDEN_CACHE.get(key)
    if tr is None:
        tr = Simulator(get_model(golden)).run(stim.schedule())
        if len(_GOLDEN_CACHE) >= _GOLDEN_CACHE_MAX:
            _GOLDEN_CACHE.pop(next(iter(_GOLDEN_CACHE)))
        _GOLDEN_CACHE[key] = tr
    return tr


def run_verify(
    dut: ElaboratedDesign,
    golden: ElaboratedDesign,
    stim: Stimulus,
    cycles: int | None = None,
    stop_at_first: bool = False,
) -> VerifyReport:
    check_ports(dut, golden)
    gt = golden_trace(golden, stim)
    outputs = [s.path for s in golden.outputs]
    horizon = len(gt) if cycles is None else min(cycles, len(gt))
    if dut.design == golden.design:
        # structurally identical source: the DUT trace is the golden trace
        tr = gt
    else:
        tr = _run_dut(dut, stim, gt, outputs, horizon, stop_at_first)
    gslots = [gt._slot(o)[0] for o in outputs]
    dslots = [tr._slot(o)[0] for o in outputs]
    widths = [tr.width(o) for o in outputs]
    total = passed = 0
    mism: list[MismatchRecord] = []
    for t in range(min(horizon, len(tr))):
        if not gt.scored[t]:
            continue
        dv, dx = tr.posts[t]
        gv, gx = gt.posts[t]
        for name, gs, ds, w in zip(outputs, gslots, dslots, widths):
            total += 1
            e = (gv[gs], gx[gs])
            a = (dv[ds], dx[ds])
            if e == a or matches(e, a):
                passed += 1
            else:
                mism.append(MismatchRecord(t, name, Value(w, *e), Value(w, *a)))
    return VerifyReport(total, passed, mism, tr, gt, outputs, complete=len(tr) >= horizon)


def _run_dut(dut: ElaboratedDesign, stim: Stimulus, gt: Trace, outputs: list[str], horizon: int, stop_at_first: bool) -> Trace:
    sim = Simulator(get_model(dut))
    posts, pres, scored = [], [], []
    if stop_at_first:
        gslots = [gt._slot(o)[0] for o in outputs]
        dslots = [sim.layout.signals[o].slot for o in outputs]
    for t, cyc in enumerate(stim.schedule()):
        if t >= horizon:
            break
        pre, post = sim.step(cyc)
        pres.append(pre)
        posts.append(post)
        scored.append(cyc.scored)
        if stop_at_first and cyc.scored:
            gv, gx = gt.posts[t]
            dv, dx = post
            if any(not matches((gv[g], gx[g]), (dv[d], dx[d])) for g, d in zip(gslots, dslots)):
                break
    return Trace(sim.layout, posts, pres, scored)

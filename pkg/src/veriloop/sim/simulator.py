"""Cycle-based runtime over a compiled model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from ..frontend.elaborate import ElaboratedDesign
from .compiler import CombLoopDetected, CompiledModel, compile_design
from .trace import Snapshot, Trace

MAX_EDGE_ROUNDS = 64

# (previous, current) bit states that count as edges; 2 stands for X
_POS = {(0, 1), (0, 2), (2, 1)}
_NEG = {(1, 0), (1, 2), (2, 0)}


@dataclass(frozen=True)
class Cycle:
    """Inputs for one cycle. ``clock`` names the clock input to pulse, if any."""

    inputs: Mapping[str, int]
    clock: str | None = None
    scored: bool = True


class Simulator:
    def __init__(self, model: CompiledModel):
        self.model = model
        self.layout = model.layout
        self.reset()

    def reset(self) -> None:
        self.V = [0] * self.layout.size
        self.X = self.layout.initial_x()
        self.prev = {s: 2 for s in self.model.sens_slots}

    def _bit(self, slot: int) -> int:
        return 2 if self.X[slot] & 1 else self.V[slot] & 1

    def propagate(self) -> None:
        m = self.model
        V, X = self.V, self.X
        m.settle(V, X)
        if not m.seq_blocks:
            return
        for _ in range(MAX_EDGE_ROUNDS):
            cur = {s: self._bit(s) for s in self.prev}
            fired = []
            for j, sens in enumerate(m.seq_sens):
                for slot, edge in sens:
                    pair = (self.prev[slot], cur[slot])
                    if (edge == "posedge" and pair in _POS) or (edge == "negedge" and pair in _NEG):
                        fired.append(j)
                        break
            self.prev = cur
            if not fired:
                return
            Q: list[tuple[int, int, int, int]] = []
            for j in fired:
                m.seq_blocks[j](V, X, Q)
            for slot, mk, v, x in Q:
                V[slot] = (V[slot] & ~mk) | v
                X[slot] = (X[slot] & ~mk) | x
            m.settle(V, X)
        raise CombLoopDetected("edge-triggered logic kept re-triggering itself")

    def poke(self, name: str, value: int) -> None:
        info = self.layout.signals[name]
        self.V[info.slot] = value & info.mask
        self.X[info.slot] = 0

    def peek(self, name: str) -> tuple[int, int]:
        info = self.layout.signals[name]
        return self.V[info.slot], self.X[info.slot]

    def step(self, cyc: Cycle) -> tuple[Snapshot, Snapshot]:
        """Simulate one cycle; returns the (pre-edge, post-cycle) snapshots."""
        sigs = self.layout.signals
        V, X = self.V, self.X
        for name, val in cyc.inputs.items():
            info = sigs[name]
            V[info.slot] = val & info.mask
            X[info.slot] = 0
        if cyc.clock is not None:
            slot = sigs[cyc.clock].slot
            V[slot] = 0
            X[slot] = 0
        self.propagate()
        if cyc.clock is None:
            snap = (tuple(V), tuple(X))
            return snap, snap
        pre = (tuple(V), tuple(X))
        V[slot] = 1
        self.propagate()
        return pre, (tuple(V), tuple(X))

    def run(self, cycles: Iterable[Cycle]) -> Trace:
        posts: list[Snapshot] = []
        pres: list[Snapshot] = []
        scored: list[bool] = []
        for cyc in cycles:
            pre, post = self.step(cyc)
            pres.append(pre)
            posts.append(post)
            scored.append(cyc.scored)
        return Trace(self.layout, posts, pres, scored)


def get_model(ed: ElaboratedDesign) -> CompiledModel:
    """Compile once per elaborated design; the model is cached on the object."""
    m = getattr(ed, "_sim_model", None)
    if m is None:
        m = compile_design(ed)
        ed._sim_model = m  # type: ignore[attr-defined]
    return m


def simulate(design: ElaboratedDesign, stimulus: object, cycles: int | None = None) -> Trace:
    """Run ``stimulus`` (anything with a ``schedule()`` yielding Cycle objects)."""
    sched = list(stimulus.schedule())  # type: ignore[attr-defined]
    if cycles is not None:
        sched = sched[:cycles]
    return Simulator(get_model(design)).run(sched)

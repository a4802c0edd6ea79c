"""Simulation traces: per-cycle snapshots with change-list views, JSON and VCD output."""

from __future__ import annotations

import json
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Iterator

from .values import Value, bin_str

if TYPE_CHECKING:
    from .compiler import Layout

Snapshot = tuple[tuple[int, ...], tuple[int, ...]]


class UnknownSignal(KeyError):
    pass


class TimeBeyondHorizon(IndexError):
    pass


class Trace:
    """Values of every signal after each simulated cycle.

    ``pres`` optionally holds the values just before each cycle's clock edge
    (after inputs settled); slicing uses them to read register sources.
    """

    def __init__(self, layout: "Layout", posts: list[Snapshot], pres: list[Snapshot] | None = None, scored: list[bool] | None = None):
        self.layout = layout
        self.posts = posts
        self.pres = pres
        self.scored = scored if scored is not None else [True] * len(posts)

    @cached_property
    def _index(self) -> dict[str, tuple[int, int]]:
        """trace name -> (slot, width); memory words appear as ``mem[i]``."""
        out: dict[str, tuple[int, int]] = {}
        for name, info in self.layout.signals.items():
            if info.depth:
                for k in range(info.depth):
                    out[f"{name}[{info.lo + k}]"] = (info.slot + k, info.width)
            else:
                out[name] = (info.slot, info.width)
        return out

    @property
    def names(self) -> list[str]:
        return list(self._index)

    @property
    def horizon(self) -> int:
        return len(self.posts) - 1

    def __len__(self) -> int:
        return len(self.posts)

    def _slot(self, signal: str) -> tuple[int, int]:
        try:
            return self._index[signal]
        except KeyError:
            raise UnknownSignal(signal) from None

    def raw(self, signal: str, time: int, pre: bool = False) -> tuple[int, int]:
        slot, _ = self._slot(signal)
        if time < 0 or time > self.horizon:
            raise TimeBeyondHorizon(f"time {time} outside 0..{self.horizon}")
        snaps = self.pres if pre and self.pres is not None else self.posts
        v, x = snaps[time]
        return v[slot], x[slot]

    def query(self, signal: str, time: int) -> Value:
        """Value in effect at ``time`` (the post-cycle value)."""
        v, x = self.raw(signal, time)
        return Value(self._slot(signal)[1], v, x)

    def width(self, signal: str) -> int:
        return self._slot(signal)[1]

    def changes(self, signal: str) -> list[tuple[int, Value]]:
        slot, w = self._slot(signal)
        out: list[tuple[int, Value]] = []
        last: tuple[int, int] | None = None
        for t, (v, x) in enumerate(self.posts):
            cur = (v[slot], x[slot])
            if cur != last:
                out.append((t, Value(w, *cur)))
                last = cur
        return out

    @property
    def signals(self) -> dict[str, list[tuple[int, Value]]]:
        return {n: self.changes(n) for n in self.names}

    # ------------------------------------------------------------------ JSON

    def to_json(self) -> dict[str, list[list[object]]]:
        out: dict[str, list[list[object]]] = {}
        for name in self.names:
            out[name] = [[t, val.to_bin()] for t, val in self.changes(name)]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict[str, list[list[object]]]) -> "Trace":
        from .compiler import Layout, SlotInfo

        lay = Layout()
        horizon = 0
        for name, changes in data.items():
            if not changes:
                continue
            lay.signals[name] = SlotInfo(lay.size, len(str(changes[0][1])))
            lay.size += 1
            horizon = max(horizon, max(int(t) for t, _ in changes))  # type: ignore[call-overload]
        V = [[0] * lay.size for _ in range(horizon + 1)]
        X = [[0] * lay.size for _ in range(horizon + 1)]
        for name, info in lay.signals.items():
            changes = sorted(data[name], key=lambda c: c[0])  # type: ignore[arg-type,return-value]
            for i, (t, bits) in enumerate(changes):
                end = int(changes[i + 1][0]) if i + 1 < len(changes) else horizon + 1  # type: ignore[call-overload]
                val = Value.from_bin(str(bits))
                for k in range(int(t), end):  # type: ignore[call-overload]
                    V[k][info.slot] = val.bits
                    X[k][info.slot] = val.xmask
        posts = [(tuple(v), tuple(x)) for v, x in zip(V, X)]
        return cls(lay, posts)

    @classmethod
    def loads(cls, text: str) -> "Trace":
        return cls.from_json(json.loads(text))


# -------------------------------------------------------------------- VCD


def _vcd_ids() -> Iterator[str]:
    n = 0
    while True:
        k, s = n, ""
        while True:
            s += chr(33 + k % 94)
            k //= 94
            if k == 0:
                break
        yield s
        n += 1


def vcd_text(trace: Trace, module: str = "top") -> str:
    if not len(trace):
        raise ValueError("cannot export an empty trace")
    ids = dict(zip(trace.names, _vcd_ids()))
    lines = ["$timescale 1ns $end", f"$scope module {module} $end"]
    for name, ident in ids.items():
        ref = name.replace(".", "_") if "[" not in name else name.replace(".", "_").replace("[", "(").replace("]", ")")
        lines.append(f"$var wire {trace.width(name)} {ident} {ref} $end")
    lines += ["$upscope $end", "$enddefinitions $end"]
    slots = {n: trace._slot(n) for n in trace.names}
    last: dict[str, tuple[int, int]] = {}
    for t, (v, x) in enumerate(trace.posts):
        recs = []
        for name, (slot, w) in slots.items():
            cur = (v[slot], x[slot])
            if last.get(name) == cur:
                continue
            last[name] = cur
            bits = bin_str(cur[0], cur[1], w)
            recs.append(f"{bits}{ids[name]}" if w == 1 else f"b{bits} {ids[name]}")
        if recs:
            lines.append(f"#{t}")
            lines.extend(recs)
    return "\n".join(lines) + "\n"


def export_vcd(trace: Trace, out: str | Path, module: str = "top") -> None:
    Path(out).write_text(vcd_text(trace, module))

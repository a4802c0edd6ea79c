"""Hit rate and fix rate over repair sessions, as exact fractions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .frontend import load
from .testbench import extended_stimulus, run_verify


class EmptyResultSet(ValueError):
    pass


@dataclass
class SessionRecord:
    """What the metrics need from one repair session."""

    id: str
    final_score: Fraction | float
    final_text: str = ""
    golden_text: str = ""
    top: str | None = None
    seed: int = 1
    fr_pass: bool | None = None  # filled in by the extended-suite check
    extra: dict = field(default_factory=dict)

    @property
    def hr_pass(self) -> bool:
        return self.final_score == 1


def compute_hr(results: Sequence[SessionRecord]) -> Fraction:
    """Share of sessions whose final design passed every session check."""
    if not results:
        raise EmptyResultSet("no sessions")
    return Fraction(sum(1 for r in results if r.hr_pass), len(results))


def extended_check(final_text: str, golden_text: str, top: str | None = None, seed: int = 1) -> bool:
    """Re-verify against the reference under the independent extended suite."""
    try:
        golden = load(golden_text, top)
        dut = load(final_text, golden.top)
        return run_verify(dut, golden, extended_stimulus(golden, seed)).passed
    except Exception:  # noqa: BLE001 - any failure to re-verify counts as not fixed
        return False


def compute_fr(results: Sequence[SessionRecord], oracle_cfg: dict | None = None) -> Fraction:
    """Share of sessions that pass the session checks and the extended suite."""
    if not results:
        raise EmptyResultSet("no sessions")
    cfg = oracle_cfg or {}
    ok = 0
    for r in results:
        if not r.hr_pass:
            continue
        if r.fr_pass is None:
            r.fr_pass = extended_check(r.final_text, r.golden_text, r.top, int(cfg.get("seed", r.seed)))
        ok += bool(r.fr_pass)
    return Fraction(ok, len(results))

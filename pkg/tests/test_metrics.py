from __future__ import annotations

import json
from fractions import Fraction

import pytest

from conftest import ADDER
from veriloop.agent import ScriptedBackend
from veriloop.frontend import load
from veriloop.metrics import EmptyResultSet, SessionRecord, compute_fr, compute_hr, extended_check
from veriloop.orchestrator import run_session
from veriloop.testbench import default_stimulus, extended_stimulus

WIDE = """module wide (
    input [7:0] a,
    input [7:0] b,
    output [8:0] y
);
    assign y = a + b;
endmodule
"""


def _records(passes: list[bool]) -> list[SessionRecord]:
    return [SessionRecord(f"s{i}", Fraction(int(p))) for i, p in enumerate(passes)]


def test_hr_seven_of_ten() -> None:
    assert compute_hr(_records([True] * 7 + [False] * 3)) == Fraction(7, 10)


def test_hr_all_failing() -> None:
    assert compute_hr(_records([False] * 4)) == 0


def test_empty_result_sets() -> None:
    with pytest.raises(EmptyResultSet):
        compute_hr([])
    with pytest.raises(EmptyResultSet):
        compute_fr([])


def test_hand_evaluated_five_sessions() -> None:
    # m = 3 session checks each; a session counts only if all three hold
    cases = [
        (True, True, True),
        (True, True, False),
        (True, True, True),
        (False, False, False),
        (True, True, True),
    ]
    expert = [True, None, False, None, True]  # extended-suite verdicts for HR survivors
    recs = [SessionRecord(f"s{i}", Fraction(sum(c), 3), fr_pass=e) for i, (c, e) in enumerate(zip(cases, expert))]
    assert compute_hr(recs) == Fraction(3, 5)
    assert compute_fr(recs) == Fraction(2, 5)
    assert compute_fr(recs) <= compute_hr(recs)


def test_fr_runs_extended_check_when_missing() -> None:
    good = SessionRecord("ok", 1.0, ADDER, ADDER)
    wrong = SessionRecord("bad", 1.0, ADDER.replace("a + b", "a | b"), ADDER)
    partial = SessionRecord("partial", 0.5, ADDER, ADDER)
    assert compute_fr([good, wrong, partial]) == Fraction(1, 3)
    assert (good.fr_pass, wrong.fr_pass, partial.fr_pass) == (True, False, None)


def test_extended_check_survives_broken_text() -> None:
    assert not extended_check("module broken(", ADDER)


def _unseen_pair() -> tuple[int, int]:
    """An (a, b) input the extended suite applies but the session suite never does."""
    g = load(WIDE)
    names = [n for n, _ in default_stimulus(g).roles.data]
    seen = {tuple(c) for seq in default_stimulus(g).sequences for c in seq}
    for seq in extended_stimulus(g).sequences:
        for c in seq:
            if tuple(c) not in seen:
                d = dict(zip(names, c))
                return d["a"], d["b"]
    raise AssertionError("extended suite is a subset of the session suite")


def test_overfit_repair_passes_hr_and_fails_fr() -> None:
    a, b = _unseen_pair()
    dut = WIDE.replace("a + b", "a - b")
    overfit = f"assign y = ({{a, b}} == 16'h{a:02x}{b:02x}) ? 9'd0 : a + b;"
    agent = ScriptedBackend({1: json.dumps({"correct": [{"wrong": "assign y = a - b;", "right": overfit}]})})
    res = run_session(dut, WIDE, backend=agent)
    assert res.success and res.final_score == 1.0
    rec = SessionRecord("overfit", res.final_score, res.final_text, WIDE)
    assert compute_hr([rec]) == 1
    assert compute_fr([rec]) == 0

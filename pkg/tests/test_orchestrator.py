from __future__ import annotations

import json
from fractions import Fraction

import httpx
import pytest

from conftest import ADDER
from veriloop.agent import NullBackend, RemoteBackend, ScriptedBackend, make_backend
from veriloop.orchestrator import SessionConfig, Version, load_session, run_session, should_rollback

GOLD4 = """module four (
    input a,
    input b,
    output y0,
    output y1,
    output y2,
    output y3
);
    assign y0 = a;
    assign y1 = b;
    assign y2 = a & b;
    assign y3 = a | b;
endmodule
"""
# y2 misses 3 of 4 patterns, y3 misses 2: 11 of 16 checks pass
DUT4 = GOLD4.replace("y2 = a & b", "y2 = a ^ b").replace("y3 = a | b", "y3 = a & b")


def _pair(wrong: str, right: str) -> str:
    return json.dumps({"correct": [{"wrong": wrong, "right": right}]})


def _rollback_agent() -> ScriptedBackend:
    return ScriptedBackend(
        {
            1: _pair("assign y2 = a ^ b;", "assign y2 = a & b;"),  # 14/16
            2: _pair("assign y0 = a;", "assign y0 = ~a;"),  # 10/16, rolled back
            3: _pair("assign y3 = a & b;", "assign y3 = a | b;"),  # applied to v1
        }
    )


def test_should_rollback_examples() -> None:
    assert not should_rollback([0.6], 0.9)
    assert should_rollback([0.6, 0.9], 0.7)
    assert not should_rollback([0.6, 0.9], 0.9)
    with pytest.raises(ValueError):
        should_rollback([], 0.5)


def test_rollback_ignores_rejected_versions() -> None:
    hist = [Version(0, "", 0.5), Version(1, "", 0.9, status="rolled-back")]
    assert not should_rollback(hist, 0.6)


def test_clean_input_succeeds_without_iterations() -> None:
    agent = NullBackend()
    res = run_session(ADDER, ADDER, backend=agent)
    assert res.outcome == "Success" and res.iterations_used == 0
    assert res.stage == "pre-processing" and len(res.history) == 1
    assert res.final_score == 1.0 and agent.calls == 0


def test_operator_mutant_repaired_by_oracle() -> None:
    dut = ADDER.replace("a + b", "a - b")
    res = run_session(dut, ADDER, "A 4-bit adder.", make_backend("oracle", ADDER))
    assert res.outcome == "Success" and res.iterations_used == 1
    assert res.stage == "MS" and "a + b" in res.final_text


def test_rollback_and_damage_repairs() -> None:
    agent = _rollback_agent()
    res = run_session(DUT4, GOLD4, backend=agent, config={"max_iter": 5})
    assert res.outcome == "Success" and res.iterations_used == 3 and res.stage == "SL"
    scores = [Fraction(v.score).limit_denominator(16) for v in res.history]
    assert scores == [Fraction(11, 16), Fraction(14, 16), Fraction(10, 16), Fraction(1)]
    assert [v.status for v in res.history] == ["accepted", "accepted", "rolled-back", "accepted"]
    assert [p.pairs for p in res.damage_repairs] == [(("assign y0 = a;", "assign y0 = ~a;"),)]
    # the third request carries the damage list and works from v1, not v2
    assert "## DAMAGE REPAIRS" in agent.prompts[2] and "## DAMAGE REPAIRS" not in agent.prompts[1]
    assert "assign y0 = a;" in res.final_text and "~a" not in res.final_text


def test_error_info_mode_follows_threshold() -> None:
    res = run_session(DUT4, GOLD4, backend=_rollback_agent(), config={"th": 3})
    modes = [v.errinfo["mode"] for v in res.history[1:]]
    assert modes == ["MS", "MS", "SL"]
    assert res.history[3].errinfo["lines"]


def test_session_persists_and_reloads(tmp_path) -> None:
    res = run_session(DUT4, GOLD4, backend=_rollback_agent(), workdir=tmp_path)
    assert sorted(p.name for p in tmp_path.glob("v*.v")) == ["v0.v", "v1.v", "v2.v", "v3.v"]
    back = load_session(tmp_path)
    assert back.to_json() == res.to_json()
    assert [v.text for v in back.history] == [v.text for v in res.history]


def test_iteration_budget_is_respected() -> None:
    dut = ADDER.replace("a + b", "a - b")
    agent = NullBackend()
    res = run_session(dut, ADDER, backend=agent, config={"max_iter": 3})
    assert res.outcome == "Failure" and res.iterations_used == 3
    assert len(res.history) == 4
    assert agent.calls == 6  # one retry per empty reply
    assert res.final_text == res.history[0].text


def test_preprocess_failure_ends_session() -> None:
    res = run_session(ADDER.replace("a + b;", "a + b"), ADDER, backend=NullBackend(), config={"preprocess_rounds": 2})
    assert res.outcome == "Failure" and res.iterations_used == 0
    assert res.error.startswith("PreprocessFailed")


def test_backend_error_consumes_an_iteration() -> None:
    agent = RemoteBackend("https://llm.invalid/x", "m", transport=httpx.MockTransport(lambda r: httpx.Response(503)))
    res = run_session(ADDER.replace("a + b", "a - b"), ADDER, backend=agent, config={"max_iter": 2})
    assert res.outcome == "Failure" and res.iterations_used == 2
    assert all(v.note.startswith("BackendError") for v in res.history[1:])


def test_unchanged_patch_is_not_scored_again() -> None:
    agent = ScriptedBackend({1: _pair("assign sum = a - b;", "assign sum = a - b;")})
    res = run_session(ADDER.replace("a + b", "a - b"), ADDER, backend=agent, config={"max_iter": 1})
    assert res.history[1].status == "rejected" and res.history[1].score == res.history[0].score


def test_config_validation(tmp_path) -> None:
    for bad in ({"max_iter": 0}, {"th": 0}, {"mode": "diff"}):
        with pytest.raises(ValueError):
            SessionConfig.from_json(bad)
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"max_iter": 7, "mode": "whole-file", "unknown": 1}))
    cfg = SessionConfig.load(f)
    assert (cfg.max_iter, cfg.mode, cfg.th) == (7, "whole-file", 2)
    assert SessionConfig.from_json(cfg.to_json()) == cfg

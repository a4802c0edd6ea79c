from __future__ import annotations

import json

import pytest

from seeding import seeded_corpus
from veriloop.agent import Backend, ScriptedBackend
from veriloop.frontend import ast as A, parse, print_design
from veriloop.lint import NotFixable, PreprocessFailed, apply_templates, lint, preprocess


class RefusingBackend(Backend):
    name = "refusing"

    def _respond(self, req, prompt):  # noqa: ANN001
        raise AssertionError("the agent must not be consulted")


W1_SRC = "module m(input a, output reg y);\n    always @(*) y <= a;\nendmodule\n"
W3_SRC = """module m(input clk, input rstn, input d, output reg q);
    always @(posedge clk) begin
        if (!rstn)
            q <= 1'b0;
        else
            q <= d;
    end
endmodule
"""
W2_SRC = "module m(input clk, input d, output reg q);\n    always @(posedge clk) q = d;\nendmodule\n"


def _codes(src: str) -> list[tuple[str, int]]:
    return [(w.code, w.line) for w in lint(parse(src))]


def test_w1_nonblocking_in_combinational_block() -> None:
    assert _codes(W1_SRC) == [("W1", 2)]


def test_w2_blocking_in_edge_block() -> None:
    assert _codes(W2_SRC) == [("W2", 2)]


def test_w3_missing_reset_edge() -> None:
    assert _codes(W3_SRC) == [("W3", 2)]


def test_w3_level_listed_reset() -> None:
    assert [c for c, _ in _codes(W3_SRC.replace("posedge clk", "posedge clk or rstn"))] == ["W3"]


def test_clean_counter() -> None:
    from veriloop import corpus

    assert lint(parse(corpus.get("counter_8bit").text)) == []


def test_report_only_warnings() -> None:
    w4 = "module m(input [7:0] a, output [3:0] y);\n    assign y = a;\nendmodule\n"
    w5 = "module m(input a, output y);\n    wire n;\n    assign y = a & n;\nendmodule\n"
    w6 = "module m(input [1:0] s, output reg y);\n    always @(*) begin\n        case (s)\n            2'd0: y = 1'b0;\n            2'd1: y = 1'b1;\n        endcase\n    end\nendmodule\n"
    assert [c for c, _ in _codes(w4)] == ["W4"]
    assert [c for c, _ in _codes(w5)] == ["W5"]
    assert "W6" in [c for c, _ in _codes(w6)]
    warns = lint(parse(w4))
    assert not warns[0].fixable
    with pytest.raises(NotFixable):
        apply_templates(parse(w4), warns)


def test_full_case_needs_no_default() -> None:
    src = "module m(input s, output reg y);\n    always @(*) begin\n        case (s)\n            1'b0: y = 1'b0;\n            1'b1: y = 1'b1;\n        endcase\n    end\nendmodule\n"
    assert "W6" not in [c for c, _ in _codes(src)]


def test_w1_template() -> None:
    fixed = apply_templates(parse(W1_SRC), lint(parse(W1_SRC)))
    assert "y = a;" in print_design(fixed)
    assert lint(fixed) == []


def test_empty_warning_list_is_identity() -> None:
    d = parse(W1_SRC)
    assert apply_templates(d, []) == d


def test_w1_and_w3_fixed_in_one_call() -> None:
    src = W3_SRC.replace("endmodule\n", "    reg t;\n    always @(*) t <= d;\nendmodule\n")
    d = parse(src)
    warns = lint(d)
    assert {w.code for w in warns} >= {"W1", "W3"}
    fixed = apply_templates(d, [w for w in warns if w.fixable])
    assert not {w.code for w in lint(fixed)} & {"W1", "W3"}
    assert "always @(posedge clk or negedge rstn)" in print_design(fixed)


def test_templates_touch_only_warned_nodes() -> None:
    for s in seeded_corpus():
        d = parse(s.text, s.name)
        warns = [w for w in lint(d) if w.fixable]
        fixed = apply_templates(d, warns)
        restored = fixed
        for w in warns:
            restored = A.replace_at(restored, w.path, A.get_at(d, w.path))
        assert restored == d, s.name


def test_preprocess_clean_input() -> None:
    from veriloop import corpus

    agent = RefusingBackend()
    res = preprocess(corpus.get("counter_8bit").text, agent)
    assert res.rounds == 1 and res.log[0].action == "clean"
    assert agent.calls == 0


def test_preprocess_missing_semicolon_with_scripted_agent() -> None:
    src = "module m(input a, input b, output y);\n    wire t;\n    assign t = a & b\n    assign y = ~t;\nendmodule\n"
    reply = json.dumps({"correct": [{"wrong": "assign t = a & b", "right": "assign t = a & b;"}]})
    agent = ScriptedBackend({1: reply})
    res = preprocess(src, agent)
    assert agent.calls == 1
    assert [r.action for r in res.log] == ["agent", "clean"]
    assert res.log[0].errors[0].code == "E002"
    assert "syntax" in agent.prompts[0].lower()
    assert "assign t = a & b;" in res.text


def test_preprocess_w1_only_uses_templates() -> None:
    agent = RefusingBackend()
    res = preprocess(W1_SRC, agent)
    assert agent.calls == 0
    assert [r.action for r in res.log] == ["templates", "clean"]


def test_preprocess_exhausts_rounds() -> None:
    src = "module m(input a, output y);\n    assign y = a\nendmodule\n"
    with pytest.raises(PreprocessFailed) as exc:
        preprocess(src, ScriptedBackend({}), max_rounds=2)
    assert exc.value.diagnostics[0].code == "E002"
    assert len(exc.value.log) == 2


def test_preprocess_rejects_zero_rounds() -> None:
    with pytest.raises(ValueError):
        preprocess(W1_SRC, None, max_rounds=0)


def test_agent_economy_over_clean_corpus(corpus_entries) -> None:
    agent = RefusingBackend()
    for e in corpus_entries:
        preprocess(e.text, agent, top=e.name)
    assert agent.calls == 0


def test_warnings_serialise_like_diagnostics() -> None:
    rec = json.loads(lint(parse(W1_SRC))[0].to_json())
    assert {"severity", "line", "col", "code", "message"} <= set(rec)

from __future__ import annotations

import json

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veriloop.agent import (
    BackendError,
    NullBackend,
    OracleBackend,
    OracleMutation,
    PatchSet,
    RemoteBackend,
    RepairRequest,
    ResponseError,
    ScriptedBackend,
    apply_patchset,
    build_prompt,
    diff_pairs,
    make_backend,
    numbered,
    parse_response,
    request_patchset,
)
from veriloop.frontend import parse
from veriloop.localize import ErrInfo

ALU = """module alu (
    input [7:0] a,
    input [7:0] b,
    output reg [8:0] result
);
    always @(*) begin
        result = a - b;
    end
endmodule
"""
FIXED = ALU.replace("a - b", "a + b")
PAIR = '{"correct":[{"wrong":"result = a - b;","right":"result = a + b;"}]}'


def _ms_info() -> str:
    return ErrInfo("MS", ["result"], [3, 7], {3: {"a": "00000001", "b": "00000010"}, 7: {"a": "00000100", "b": "00000000"}}, []).dumps()


def _req(**kw) -> RepairRequest:
    base = dict(spec_text="An 8-bit adder.", dut_text=ALU, err_info=_ms_info())
    base.update(kw)
    return RepairRequest(**base)


# ---------------------------------------------------------------- prompts


def test_prompt_section_order() -> None:
    p = build_prompt(_req(damage_repairs=[PatchSet((("x", "y"),))]))
    heads = ["RTL repair expert", "## SPECIFICATION", "## DUT CODE", "## ERROR INFO", "## DAMAGE REPAIRS", "## OUTPUT FORMAT"]
    pos = [p.index(h) for h in heads]
    assert pos == sorted(pos)


def test_prompt_omits_empty_damage_repairs() -> None:
    assert "DAMAGE REPAIRS" not in build_prompt(_req())


def test_prompt_numbers_dut_lines() -> None:
    p = build_prompt(_req())
    assert numbered(ALU) in p
    assert "\n7 |         result = a - b;\n" in p


def test_ms_error_info_has_no_lines() -> None:
    p = build_prompt(_req())
    info = json.loads(p.split("## ERROR INFO\n")[1].split("\n\n## ")[0])
    assert info["mode"] == "MS" and info["signals"] == ["result"] and info["times"] == [3, 7]
    assert info["lines"] == [] and info["inputs"]["b"]["3"] == "00000010"


def test_prompt_is_deterministic() -> None:
    assert build_prompt(_req()) == build_prompt(_req())


def test_prompt_output_contract_per_mode() -> None:
    assert '"correct"' in build_prompt(_req()).split("## OUTPUT FORMAT")[1]
    assert '"code"' in build_prompt(_req(mode="whole-file")).split("## OUTPUT FORMAT")[1]


def test_prompt_profiles() -> None:
    assert "does not compile" in build_prompt(_req(profile="syntax-fixer"))
    assert "disagree with the reference" in build_prompt(_req())


def test_prompt_requires_dut() -> None:
    with pytest.raises(ValueError):
        build_prompt(_req(dut_text=""))


# --------------------------------------------------------------- responses


def test_parse_pair_response() -> None:
    ps = parse_response(PAIR)
    assert ps.pairs == (("result = a - b;", "result = a + b;"),)
    assert ps.raw == PAIR


def test_fenced_response_matches_bare() -> None:
    wrapped = "Here is the fix:\n```json\n" + PAIR + "\n```\nThe subtraction was wrong."
    assert parse_response(wrapped).pairs == parse_response(PAIR).pairs


def test_prose_wrapped_response() -> None:
    assert parse_response("Sure. " + PAIR + " Done.").pairs == parse_response(PAIR).pairs


@pytest.mark.parametrize(
    ("raw", "kind"),
    [
        ('{"correct":[]}', "EmptyCorrect"),
        ("no json here", "NoJson"),
        ("", "NoJson"),
        ('{"fix": []}', "SchemaViolation"),
        ('{"correct":[{"wrong":"", "right":"x"}]}', "SchemaViolation"),
        ('{"correct":[{"wrong":"a"}]}', "SchemaViolation"),
    ],
)
def test_response_errors(raw: str, kind: str) -> None:
    with pytest.raises(ResponseError) as exc:
        parse_response(raw)
    assert exc.value.kind == kind


def test_whole_file_response() -> None:
    ps = parse_response(json.dumps({"code": FIXED}), "whole-file", ALU)
    assert ps.mode == "whole-file" and ps.pairs == ((ALU, FIXED),)
    with pytest.raises(ResponseError):
        parse_response('{"code": ""}', "whole-file", ALU)


def test_retry_once_with_reminder() -> None:
    agent = ScriptedBackend({1: "I think the bug is on line 7.", 2: PAIR})
    ps, calls, _ = request_patchset(agent, _req())
    assert calls == 2 and ps is not None
    assert "Reply with exactly one JSON object" in agent.prompts[1]
    assert "Reply with exactly one JSON object" not in agent.prompts[0]


def test_two_bad_replies_fail_the_iteration() -> None:
    agent = ScriptedBackend({1: "nope", 2: '{"correct": []}'})
    ps, calls, detail = request_patchset(agent, _req())
    assert ps is None and calls == 2 and "EmptyCorrect" in detail


# ----------------------------------------------------------------- patches


def test_apply_operator_fix_is_one_line_diff() -> None:
    new, errs = apply_patchset(ALU, parse_response(PAIR))
    assert errs == [] and new == FIXED
    changed = [i for i, (x, y) in enumerate(zip(ALU.splitlines(), new.splitlines())) if x != y]
    assert changed == [6]


def test_whitespace_tolerant_match_keeps_indentation() -> None:
    ps = PatchSet((("result   =  a -\tb;", "result = a + b;"),))
    new, errs = apply_patchset(ALU, ps)
    assert errs == [] and new == FIXED


def test_multiline_right_is_reindented() -> None:
    ps = PatchSet((("result = a - b;", "result = a + b;\n  result = result;"),))
    new, _ = apply_patchset(ALU, ps)
    assert "        result = a + b;\n          result = result;\n" in new


def test_no_match() -> None:
    new, errs = apply_patchset(ALU, PatchSet((("result = a * b;", "x"),)))
    assert new == ALU and [(e.kind, e.index) for e in errs] == [("NoMatch", 0)]


def test_ambiguous_match_then_next_pair_still_applied() -> None:
    text = ALU.replace("        result = a - b;\n", "        result = a - b;\n        result = a - b;\n")
    ps = PatchSet((("result = a - b;", "result = a + b;"), ("input [7:0] b,", "input [7:0] b ,")))
    new, errs = apply_patchset(text, ps)
    assert [(e.kind, e.count) for e in errs] == [("AmbiguousMatch", 2)]
    assert "result = a - b;\n        result = a - b;" in new
    assert "input [7:0] b ," in new


def test_unlexable_patch_rejected() -> None:
    new, errs = apply_patchset(ALU, PatchSet((("result = a - b;", "result = \"a + b;"),)))
    assert new == ALU and errs[0].kind == "LexError"


def test_whole_file_patch() -> None:
    new, errs = apply_patchset(ALU, PatchSet(((ALU, FIXED.rstrip("\n")),), mode="whole-file"))
    assert errs == [] and new == FIXED


_word = st.text(alphabet="abcdefgh", min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(st.lists(_word, min_size=3, max_size=12, unique=True), st.data())
def test_patch_locality(words: list[str], data: st.DataObject) -> None:
    lines = [f"    assign {w} = {w}_in;" for w in words]
    text = "\n".join(lines) + "\n"
    k = data.draw(st.integers(0, len(lines) - 1))
    repl = data.draw(_word)
    new, errs = apply_patchset(text, PatchSet(((lines[k].strip(), f"assign {repl} = 1;"),)))
    assert errs == []
    old_l, new_l = text.splitlines(), new.splitlines()
    assert len(old_l) == len(new_l)
    for i, (a, b) in enumerate(zip(old_l, new_l)):
        if i != k:
            assert a == b
    assert new_l[k] == f"    assign {repl} = 1;"


# ---------------------------------------------------------------- backends


def test_scripted_backend_is_keyed_by_call(tmp_path) -> None:
    f = tmp_path / "fx.json"
    f.write_text(json.dumps({"1": "first", "3": {"correct": [{"wrong": "a", "right": "b"}]}}))
    agent = ScriptedBackend(f)
    got = [agent.send(_req()) for _ in range(3)]
    assert got[0] == "first" and got[1] == "" and json.loads(got[2])["correct"][0]["right"] == "b"
    again = ScriptedBackend(f)
    assert [again.send(_req()) for _ in range(3)] == got


def test_null_backend() -> None:
    agent = NullBackend()
    assert json.loads(agent.send(_req())) == {"correct": []}
    assert json.loads(agent.send(_req(mode="whole-file"))) == {"code": ""}


def test_remote_backend_wire_format(monkeypatch) -> None:
    seen: dict[str, object] = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": PAIR}}]})

    monkeypatch.setenv("REPAIR_BACKEND_KEY", "sekrit")
    agent = RemoteBackend("https://llm.invalid/v1/chat/completions", "some-model", transport=httpx.MockTransport(handler))
    assert agent.send(_req()) == PAIR
    body = seen["body"]
    assert seen["auth"] == "Bearer sekrit"
    assert body["model"] == "some-model" and body["temperature"] == 0.0
    assert body["messages"][0]["role"] == "user"
    assert body["messages"][0]["content"] == build_prompt(_req())


def test_remote_backend_errors_become_backend_errors() -> None:
    agent = RemoteBackend("https://llm.invalid/x", "m", transport=httpx.MockTransport(lambda r: httpx.Response(503)))
    with pytest.raises(BackendError):
        agent.send(_req())
    ps, calls, detail = request_patchset(agent, _req())
    assert ps is None and calls == 1 and detail.startswith("BackendError")


def test_oracle_uses_mutation_record() -> None:
    agent = OracleBackend(FIXED, OracleMutation("result = a + b;", "result = a - b;"))
    new, errs = apply_patchset(ALU, parse_response(agent.send(_req())))
    assert errs == [] and new == FIXED


def test_oracle_modes_restore_golden() -> None:
    for mode in ("pair", "whole-file"):
        agent = make_backend("oracle", FIXED)
        ps = parse_response(agent.send(_req(mode=mode)), mode, ALU)
        new, errs = apply_patchset(ALU, ps)
        assert errs == [] and parse(new) == parse(FIXED), mode


def test_diff_pairs_anchor_insertions() -> None:
    dut = "a\nc\n"
    pairs = diff_pairs(dut, "a\nb\nc\n")
    assert pairs == [{"wrong": "c", "right": "b\nc"}]


def test_make_backend_kinds(tmp_path) -> None:
    assert make_backend(None).name == "null"
    assert make_backend({"kind": "scripted", "responses": {"1": "x"}}).name == "scripted"
    assert make_backend({"kind": "remote", "endpoint": "https://llm.invalid"}).name == "remote"
    with pytest.raises(ValueError):
        make_backend("nope")

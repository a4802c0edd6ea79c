from __future__ import annotations

import difflib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import golden
from veriloop import corpus
from veriloop.agent import PatchSet, apply_patchset
from veriloop.errgen import (
    KINDS,
    BenchmarkSet,
    EquivalentMutant,
    UnclassifiableMutant,
    build_benchmark,
    enumerate_sites,
    inject,
)
from veriloop.frontend import ast as A, load, parse, print_design, try_parse
from veriloop.lint import check_text

RESULT = """module r (
    input [7:0] a,
    input [7:0] b,
    output reg [8:0] result
);
    always @(*) begin
        result = a + b;
    end
endmodule
"""

COUNT9 = """module c9 (
    input clk,
    input [8:0] d,
    output [8:0] q
);
    reg [8:0] count;
    always @(posedge clk)
        count <= d;
    assign q = count;
endmodule
"""

POPCOUNT = """module pc (
    input [7:0] d,
    output reg [3:0] cnt
);
    integer i;
    always @(*) begin
        cnt = 4'd0;
        for (i = 0; i < 7; i = i + 1)
            cnt = cnt + d[i];
    end
endmodule
"""

DEAD = """module dd (
    input s,
    input [3:0] a,
    input [3:0] b,
    output reg y
);
    always @(*) begin
        if (s && !s)
            y = a == b;
        else
            y = a[0];
    end
endmodule
"""


def test_combinational_module_has_no_sensitivity_sites() -> None:
    assert enumerate_sites(golden("adder_4bit"), "WrongSensitivity") == []
    assert enumerate_sites(load(RESULT), "WrongSensitivity") == []


def test_operator_site_swaps_plus() -> None:
    ops = enumerate_sites(load(RESULT), "OperatorMisuse")
    assert [(o.label, o.line) for o in ops] == [("+ -> -", 7)]
    assert ops[0].new.op == "-"


def test_width_site_narrows_range() -> None:
    ops = enumerate_sites(load(COUNT9), "BitwidthMisuse")
    assert [o.label for o in ops] == ["[8:0] -> [7:0]"]
    m = inject(load(COUNT9), ops[0], "c9-w")
    assert "reg [7:0] count;" in m.text and m.cls == "functional"


def test_dropping_reg_is_a_syntax_mutant() -> None:
    ops = [o for o in enumerate_sites(load(RESULT), "TypeMisuse") if o.label == "reg -> implicit wire"]
    m = inject(load(RESULT), ops[0], "r-type")
    assert m.cls == "syntax" and m.pass_rate is None
    design, errors = check_text(m.text, "r.v", "r")
    assert design is None and errors


def test_loop_bound_overrun_is_functional() -> None:
    g = load(POPCOUNT)
    (op,) = enumerate_sites(g, "WrongJudgmentValue")
    m = inject(g, op, "pc-j")
    assert op.label == "7 -> 15"
    assert m.cls == "functional" and m.pass_rate is not None and m.pass_rate < 1
    assert m.line == 8 and "i < 15" in m.after


def test_dead_code_mutant_is_discarded() -> None:
    g = load(DEAD)
    op = next(o for o in enumerate_sites(g, "OperatorMisuse") if o.label == "== -> !=")
    with pytest.raises(EquivalentMutant):
        inject(g, op)


def test_value_flip_rule() -> None:
    labels = [o.label for o in enumerate_sites(golden("counter_8bit"), "ValueMisuse")]
    assert labels == ["8'd0 -> 8'd1", "8'd1 -> 8'd0"]


def _shipped(names: list[str], kinds=KINDS, per_kind: int = 3):
    for name in names:
        g = golden(name)
        for kind in kinds:
            for op in enumerate_sites(g, kind)[:per_kind]:
                try:
                    yield op, inject(g, op, f"{name}-{kind}", golden=g)
                except (EquivalentMutant, UnclassifiableMutant):
                    continue


def test_reversibility_restores_base_text() -> None:
    n = 0
    for _, m in _shipped(["counter_8bit", "alu_4bit", "fifo_4x8", "seq_detect"]):
        restored, errs = apply_patchset(m.text, PatchSet(((m.after, m.before),)))
        assert errs == [] and restored == m.base_text, m.id
        n += 1
    assert n >= 20


def test_class_soundness_sample() -> None:
    for _, m in _shipped(["mod10_counter", "regfile", "traffic_light"]):
        design, errors = check_text(m.text, "m.v", m.module)
        if m.cls == "syntax":
            assert design is None and errors
        else:
            assert design is not None and m.pass_rate is not None and m.pass_rate < 1


_SITES = [(n, k, i) for n in ("alu_8bit", "fifo_4x8", "mac_unit", "updown_counter", "arbiter") for k in KINDS for i in range(len(enumerate_sites(golden(n), k)))]


@settings(max_examples=120, deadline=None)
@given(st.sampled_from(_SITES))
def test_single_site(site: tuple[str, str, int]) -> None:
    name, kind, i = site
    base = parse(corpus.get(name).text, name)
    op = enumerate_sites(base, kind)[i]
    mutated = A.replace_at(base, op.path, op.new)
    assert mutated != base
    # putting the original node back undoes the whole difference
    assert A.replace_at(mutated, op.path, A.get_at(base, op.path)) == base
    text = print_design(mutated)
    back, _ = try_parse(text, name)
    if back is not None:
        assert back == mutated
    changed = [ln for ln in difflib.ndiff(print_design(base).splitlines(), text.splitlines()) if ln[:1] in "+-"]
    assert changed


def _small_corpus(names: list[str]) -> list[tuple[str, str, str]]:
    return [(e.name, e.family, e.text) for e in corpus.entries() if e.name in names]


def test_same_seed_same_manifest() -> None:
    src = _small_corpus(["counter_8bit", "alu_4bit", "shift_reg"])
    a, b = build_benchmark(src, seed=7), build_benchmark(src, seed=7)
    assert a.manifest() == b.manifest()
    assert [m.text for m in a.mutants] == [m.text for m in b.mutants]


def test_counter_plan_one_of_each() -> None:
    bench = build_benchmark(_small_corpus(["counter_8bit"]), {k: 1 for k in KINDS}, seed=3)
    kinds = [m.kind for m in bench.mutants]
    assert len(kinds) <= 8 and len(set(kinds)) == len(kinds)
    assert "WrongSensitivity" in kinds


def _has_multi_edge_block(text: str, name: str) -> bool:
    d = parse(text, name)
    return any(isinstance(it, A.Always) and it.edge_triggered and len(it.sens) >= 2 for m in d.modules for it in m.items)


def test_matrix_marks_impossible_cells() -> None:
    names = ["adder_4bit", "adder_cla", "counter_8bit", "mod10_counter", "gray_code"]
    src = _small_corpus(names)
    bench = build_benchmark(src, seed=0)
    mat = bench.matrix()
    by_family: dict[str, list[tuple[str, str]]] = {}
    for n, fam, text in src:
        by_family.setdefault(fam, []).append((n, text))
    for fam, mods in by_family.items():
        sens_possible = any(_has_multi_edge_block(t, n) for n, t in mods)
        assert (mat[fam]["WrongSensitivity"] is None) == (not sens_possible), fam
        for k in KINDS:
            total = sum(len(enumerate_sites(parse(t, n), k)) for n, t in mods)
            assert (mat[fam][k] is None) == (total == 0), (fam, k)
    assert mat["adder"]["WrongSensitivity"] is None
    assert mat["counter"]["WrongSensitivity"] is not None


def test_manifest_round_trip(tmp_path) -> None:
    bench = build_benchmark(_small_corpus(["counter_8bit", "alu_4bit"]), seed=1)
    path = bench.write(tmp_path)
    assert path.name == "benchmark.json" and (tmp_path / "mutants").is_dir()
    back = BenchmarkSet.load(tmp_path)
    assert back.manifest() == bench.manifest()
    assert [m.text for m in back.mutants] == [m.text for m in bench.mutants]
    assert {e["class"] for e in back.manifest()} <= {"syntax", "functional"}

"""The ten acceptance criteria, each at its stated tolerance and time limit.

Every test records a one-line verdict in ``conftest.ACCEPTANCE``; the
terminal summary prints them after the run.
"""

from __future__ import annotations

import json
import time
from fractions import Fraction

import pytest

import conftest
from conftest import golden
from oracle_eval import evaluate
from seeding import seeded_corpus
from test_lint import RefusingBackend
from test_metrics import WIDE, _unseen_pair
from veriloop import corpus
from veriloop.agent import ScriptedBackend, make_backend
from veriloop.campaign import CampaignResult, run_campaign
from veriloop.errgen import BenchmarkSet, build_benchmark
from veriloop.frontend import ast as A, load, parse, print_design
from veriloop.lint import check_text, lint, preprocess
from veriloop.localize import build_dfg, dynamic_slice, static_slice
from veriloop.metrics import SessionRecord, compute_fr, compute_hr
from veriloop.orchestrator import SessionConfig, run_session
from veriloop.sim import Cycle, Simulator, get_model, simulate
from veriloop.testbench import default_stimulus, make_stimulus, run_verify


def record(n: int, ok: bool, detail: str) -> None:
    conftest.ACCEPTANCE[n] = (ok, detail)
    assert ok, f"criterion {n}: {detail}"


@pytest.fixture(scope="module")
def bench() -> tuple[BenchmarkSet, float]:
    t0 = time.perf_counter()
    b = build_benchmark(seed=0)
    return b, time.perf_counter() - t0


@pytest.fixture(scope="module")
def oracle_campaign(bench) -> tuple[CampaignResult, float]:
    t0 = time.perf_counter()
    res = run_campaign(bench[0], "oracle", SessionConfig(max_iter=5), workers=8)
    return res, time.perf_counter() - t0


def _single_line(b: BenchmarkSet) -> BenchmarkSet:
    keep = [m for m in b.mutants if "\n" not in m.before and "\n" not in m.after]
    return BenchmarkSet(keep, b.plan, b.seed, b.sites, b.families, b.golden)


@pytest.fixture(scope="module")
def whole_file_campaign(bench) -> CampaignResult:
    return run_campaign(_single_line(bench[0]), "oracle", SessionConfig(max_iter=5, mode="whole-file"), workers=8)


# ---------------------------------------------------------------- criteria


def test_criterion_01_round_trip() -> None:
    t0 = time.perf_counter()
    entries = corpus.entries()
    bad = [e.name for e in entries if parse(print_design(parse(e.text, e.name)), e.name) != parse(e.text, e.name)]
    dt = time.perf_counter() - t0
    families = {e.family for e in entries}
    ok = not bad and len(entries) >= 27 and len(families) >= 10 and dt < 5
    record(1, ok, f"{len(entries) - len(bad)}/{len(entries)} modules round-trip, {len(families)} families, {dt:.2f}s")


def _is_combinational(d: A.Design) -> bool:
    return not any(isinstance(it, A.Always) and it.edge_triggered for m in d.modules for it in m.items)


def test_criterion_02_simulator_oracle() -> None:
    t0 = time.perf_counter()
    modules = patterns = bad = 0
    for e in corpus.entries():
        d = parse(e.text, e.name)
        ed = load(e.text, e.name)
        ins = [(p.path, p.width) for p in ed.inputs]
        if not _is_combinational(d) or sum(w for _, w in ins) > 14:
            continue
        modules += 1
        stim = make_stimulus(ed, "exhaustive")
        names = [n for n, _ in stim.roles.data]
        tr = simulate(ed, stim)
        for t, seq in enumerate(stim.sequences):
            patterns += 1
            want = evaluate(d, dict(zip(names, seq[0])))
            bad += any(int(tr.query(o, t)) != v or not tr.query(o, t).is_known for o, v in want.items())
    swap = conftest.SWAP
    cycles = [Cycle({"load": 1, "ia": 1, "ib": 0}, "clk")] + [Cycle({"load": 0, "ia": 0, "ib": 0}, "clk")] * 3
    st = Simulator(get_model(load(swap))).run(cycles)
    swap_ok = [(int(st.query("a", t)), int(st.query("b", t))) for t in range(4)] == [(1, 0), (0, 1), (1, 0), (0, 1)]
    reset = Cycle({"rstn": 0, "en": 0, "clk": 0}, None, False)
    ct = Simulator(get_model(golden("counter_8bit"))).run([reset] + [Cycle({"rstn": 1, "en": 1}, "clk")] * 256)
    wrap_ok = int(ct.query("count", 255)) == 255 and int(ct.query("count", 256)) == 0
    dt = time.perf_counter() - t0
    ok = modules > 0 and bad == 0 and swap_ok and wrap_ok and dt < 30
    record(2, ok, f"{modules} modules, {patterns - bad}/{patterns} patterns agree, swap={swap_ok}, wrap={wrap_ok}, {dt:.1f}s")


def test_criterion_03_benchmark_soundness(bench) -> None:
    b, build_time = bench
    t0 = time.perf_counter()
    syn = [m for m in b.mutants if m.cls == "syntax"]
    fun = [m for m in b.mutants if m.cls == "functional"]
    syn_ok = sum(1 for m in syn if check_text(m.text, f"{m.id}.v", m.module)[0] is None)
    fun_ok = 0
    for m in fun:
        g = load(m.base_text, m.module)
        fun_ok += run_verify(load(m.text, m.module), g, default_stimulus(g)).pass_rate < 1
    dt = build_time + time.perf_counter() - t0
    ok = len(b.mutants) >= 150 and syn_ok == len(syn) and fun_ok == len(fun) and dt < 120
    record(3, ok, f"{len(b.mutants)} mutants; syntax {syn_ok}/{len(syn)} rejected, functional {fun_ok}/{len(fun)} triggered; {dt:.1f}s")


def test_criterion_04_localization(bench) -> None:
    t0 = time.perf_counter()
    fun = [m for m in bench[0].mutants if m.cls == "functional"]
    hits = subset = 0
    for m in fun:
        g = load(m.base_text, m.module)
        dut = load(m.text, m.module)
        rep = run_verify(dut, g, default_stimulus(g))
        lines: set[int] = set()
        inside = True
        for sig in dict.fromkeys(x.signal for x in rep.mismatches):
            dfg = build_dfg(dut, sig)
            mt = sorted({x.time for x in rep.mismatches if x.signal == sig})[:8]
            dyn = {ln for _, ln in dynamic_slice(dut, dfg, mt, rep.trace)}
            inside &= dyn <= static_slice(dfg)
            lines |= dyn
        hits += m.line in lines
        subset += inside
    dt = time.perf_counter() - t0
    n = len(fun)
    ok = hits >= 0.9 * n and subset == n and dt < 120
    record(4, ok, f"ground truth in slice {hits}/{n} ({hits / n:.1%}), subset {subset}/{n}, {dt:.1f}s")


def test_criterion_05_oracle_campaign(oracle_campaign) -> None:
    res, dt = oracle_campaign
    stages = res.stages
    hr_sum = sum(Fraction(r["hr"]["exact"]) for r in stages.values())
    fr_sum = sum(Fraction(r["fr"]["exact"]) for r in stages.values())
    max_iter = max(o.iterations for o in res.outcomes)
    ok = res.hr == 1 and res.fr == 1 and hr_sum == res.hr and fr_sum == res.fr and max_iter <= 5 and dt < 300
    split = ", ".join(f"{k} {r['sessions']}" for k, r in stages.items())
    record(5, ok, f"HR {res.hr} FR {res.fr} over {len(res.outcomes)} sessions ({split}); {dt:.1f}s at 8 workers")


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


def _pair(wrong: str, right: str) -> str:
    return json.dumps({"correct": [{"wrong": wrong, "right": right}]})


def test_criterion_06_rollback() -> None:
    dut = GOLD4.replace("y2 = a & b", "y2 = a ^ b").replace("y3 = a | b", "y3 = a & b")
    agent = ScriptedBackend(
        {
            1: _pair("assign y2 = a ^ b;", "assign y2 = a & b;"),
            2: _pair("assign y0 = a;", "assign y0 = ~a;"),
            3: _pair("assign y1 = b;", "assign y1 = a;"),
        }
    )
    res = run_session(dut, GOLD4, backend=agent, config={"max_iter": 3})
    h = res.history
    corrupt = h[2].patchset
    ok = (
        res.final_score == h[1].score
        and h[1].status == "accepted"
        and h[2].status == "rolled-back"
        and corrupt in res.damage_repairs
        and "assign y0 = ~a;" in agent.prompts[2].split("## DAMAGE REPAIRS")[1]
    )
    record(6, ok, f"scores {[round(v.score, 4) for v in h]}, statuses {[v.status for v in h]}, final {res.final_score:.4f}")


def test_criterion_07_metrics(oracle_campaign, whole_file_campaign) -> None:
    cases = [(1, 1, 1), (1, 1, 0), (1, 1, 1), (0, 0, 0), (1, 1, 1)]
    expert = [True, None, False, None, True]
    recs = [SessionRecord(f"s{i}", Fraction(sum(c), 3), fr_pass=e) for i, (c, e) in enumerate(zip(cases, expert))]
    hr, fr = compute_hr(recs), compute_fr(recs)
    campaigns = [oracle_campaign[0], whole_file_campaign]
    ordered = all(c.fr <= c.hr for c in campaigns)
    ok = hr == Fraction(3, 5) and fr == Fraction(2, 5) and ordered
    record(7, ok, f"HR {hr} (want 3/5), FR {fr} (want 2/5), FR <= HR on {len(campaigns)} campaigns: {ordered}")


def test_criterion_08_overfit_gap() -> None:
    a, b = _unseen_pair()
    overfit = f"assign y = ({{a, b}} == 16'h{a:02x}{b:02x}) ? 9'd0 : a + b;"
    agent = ScriptedBackend({1: _pair("assign y = a - b;", overfit)})
    res = run_session(WIDE.replace("a + b", "a - b"), WIDE, backend=agent)
    rec = SessionRecord("overfit", res.final_score, res.final_text, WIDE)
    hr, fr = compute_hr([rec]), compute_fr([rec])
    record(8, hr == 1 and fr == 0, f"overfit repair: HR {hr}, FR {fr}")


MISSING_PORT_GOLD = """module inv(A, Y);
    input A;
    output Y;
    assign Y = ~A;
endmodule

module buf2(A, Y);
    input A;
    output Y;
    wire n;
    inv u0(.A(A), .Y(n));
    inv u1(.A(n), .Y(Y));
endmodule
"""
MISSING_PORT = MISSING_PORT_GOLD.replace("module buf2(A, Y);\n    input A;\n", "module buf2(A, Y);\n")


def test_criterion_09_ablation_modes(bench, oracle_campaign, whole_file_campaign) -> None:
    single = {m.id for m in _single_line(bench[0]).mutants}
    pair_out = [o for o in oracle_campaign[0].outcomes if o.id in single]
    pair_hr = Fraction(sum(o.hr_pass for o in pair_out), len(pair_out))
    wf_hr = whole_file_campaign.hr
    runs = {}
    for mode in ("pair", "whole-file"):
        runs[mode] = run_session(MISSING_PORT, MISSING_PORT_GOLD, backend=make_backend("oracle", MISSING_PORT_GOLD), config={"mode": mode}, top="buf2")
    kinds = {e["kind"] for r in runs["pair"].preprocess_log for e in r.get("patch_errors", [])}
    ok = pair_hr == 1 and wf_hr == 1 and runs["whole-file"].success and not runs["pair"].success and bool(kinds & {"NoMatch", "AmbiguousMatch"})
    record(
        9,
        ok,
        f"single-line mutants {len(pair_out)}: pair HR {pair_hr}, whole-file HR {wf_hr}; "
        f"missing port: whole-file {runs['whole-file'].outcome}, pair {runs['pair'].outcome} {sorted(kinds)}",
    )


def test_criterion_10_template_fixes() -> None:
    seeded = seeded_corpus()
    agent = RefusingBackend()
    warned = fixed = 0
    for s in seeded:
        warns = {w.code for w in lint(parse(s.text, s.name))}
        warned += bool(warns & {"W1", "W2", "W3"})
        res = preprocess(s.text, agent, top=s.name)
        left = {w.code for w in lint(res.design)} - {w.code for w in lint(s.golden)}
        fixed += not left and not ({w.code for w in lint(res.design)} & {"W1", "W2", "W3"})
    ok = warned == len(seeded) and fixed == len(seeded) and agent.calls == 0
    record(10, ok, f"{fixed}/{len(seeded)} seeded variants lint clean after templates, {agent.calls} backend calls")

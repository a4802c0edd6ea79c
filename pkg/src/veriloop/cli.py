"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import corpus
from .agent import make_backend
from .campaign import CROSS, run_campaign
from .errgen import KINDS, BenchmarkSet, build_benchmark, enumerate_sites, inject, EquivalentMutant, UnclassifiableMutant
from .frontend import ElaborationError, ParseFailure, SourceFile, load, parse
from .lint import lint, preprocess, PreprocessFailed
from .orchestrator import SessionConfig, run_session
from .sim import Simulator, export_vcd, get_model
from .testbench import make_stimulus, default_stimulus, run_verify

log = logging.getLogger("veriloop")


def _config(args: argparse.Namespace) -> SessionConfig:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = SessionConfig.from_json(data)
    if args.seed is not None:
        cfg.stimulus = {**cfg.stimulus, "seed": args.seed}
    if args.backend:
        cfg.backend = {**(cfg.backend if cfg.backend.get("kind") == args.backend else {}), "kind": args.backend}
    if getattr(args, "fixture", None):
        cfg.backend = {**cfg.backend, "fixture": args.fixture}
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "max_iter", None):
        cfg.max_iter = args.max_iter
    return cfg


def _read(path: str) -> SourceFile:
    return SourceFile.from_path(path)


def _report_frontend(exc: Exception) -> int:
    diags = getattr(exc, "diagnostics", [])
    for d in diags:
        print(d.human() if hasattr(d, "human") else str(d), file=sys.stderr)
    if not diags:
        print(str(exc), file=sys.stderr)
    return 2


# ------------------------------------------------------------------ commands


def cmd_lint(args: argparse.Namespace) -> int:
    src = _read(args.file)
    if args.fix:
        try:
            res = preprocess(src, None, top=args.top)
        except PreprocessFailed as exc:
            return _report_frontend(exc)
        out = Path(args.output) if args.output else None
        if out:
            out.write_text(res.text)
        else:
            sys.stdout.write(res.text)
        return 0
    try:
        ed = load(src, args.top)
    except (ParseFailure, ElaborationError) as exc:
        return _report_frontend(exc)
    warns = lint(ed)
    for w in warns:
        print(w.to_json() if args.json else w.human(args.file))
    return 1 if warns and args.strict else 0


def _stimulus(args: argparse.Namespace, ed):
    seed = args.seed if args.seed is not None else 1
    if args.stimulus == "default":
        return default_stimulus(ed, seed)
    return make_stimulus(ed, args.stimulus, seed, args.cycles, args.sequences, args.directed)


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        ed = load(_read(args.file), args.top)
    except (ParseFailure, ElaborationError) as exc:
        return _report_frontend(exc)
    stim = _stimulus(args, ed)
    trace = Simulator(get_model(ed)).run(stim.schedule())
    if args.vcd:
        export_vcd(trace, args.vcd, ed.top)
    if args.trace:
        Path(args.trace).write_text(trace.dumps() + "\n")
    outs = [s.path for s in ed.outputs]
    print(f"simulated {len(trace)} cycles of {ed.top}; outputs at t={trace.horizon}: "
          + ", ".join(f"{o}={trace.query(o, trace.horizon).to_bin()}" for o in outs))
    return 0


def cmd_inject(args: argparse.Namespace) -> int:
    if args.file is None:
        plan = json.loads(Path(args.plan).read_text()) if args.plan else None
        bench = build_benchmark(None, plan, args.seed or 0)
        out = bench.write(args.out or "benchmark")
        print(f"{len(bench.mutants)} mutants written to {out}")
        return 0
    design = parse(_read(args.file), args.top)
    kinds = [args.kind] if args.kind else list(KINDS)
    if args.list:
        for k in kinds:
            for i, op in enumerate(enumerate_sites(design, k)):
                print(f"{k}\t{i}\tline {op.line}\t{op.label}")
        return 0
    if not args.kind:
        print("--kind is required unless --list is given", file=sys.stderr)
        return 2
    sites = enumerate_sites(design, args.kind)
    if not sites:
        print(f"{CROSS} no {args.kind} site in {design.top}", file=sys.stderr)
        return 1
    try:
        m = inject(design, sites[args.index % len(sites)], f"{design.top}-{args.kind}-{args.index}")
    except (EquivalentMutant, UnclassifiableMutant) as exc:
        print(f"discarded: {exc}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(m.text)
    else:
        sys.stdout.write(m.text)
    print(json.dumps(m.manifest_entry()), file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        golden = load(_read(args.golden), args.top)
        dut = load(_read(args.dut), golden.top)
    except (ParseFailure, ElaborationError) as exc:
        return _report_frontend(exc)
    rep = run_verify(dut, golden, _stimulus(args, golden))
    if args.log:
        Path(args.log).write_text(rep.log_text())
    print(f"pass rate {rep.pass_rate:.4f} ({rep.passed_checks}/{rep.total_checks} checks)")
    for m in rep.mismatches[: args.show]:
        print(f"  t={m.time} {m.signal}: expected {m.expected.to_bin()} got {m.actual.to_bin()}")
    return 0 if rep.passed else 1


def cmd_repair(args: argparse.Namespace) -> int:
    cfg = _config(args)
    golden_text = _read(args.golden).text
    spec = Path(args.spec).read_text() if args.spec else ""
    backend = make_backend(cfg.backend, golden_text)
    res = run_session(_read(args.dut), golden_text, spec, backend, cfg, args.workdir, args.top)
    print(f"{res.outcome} after {res.iterations_used} iteration(s); final score {res.final_score:.4f}; stage {res.stage or '-'}")
    for v in res.history:
        print(f"  v{v.index}: score {v.score:.4f} {v.status}{' - ' + v.note if v.note else ''}")
    if args.output:
        Path(args.output).write_text(res.final_text)
    return 0 if res.success else 1


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.benchmark:
        bench = BenchmarkSet.load(args.benchmark)
    else:
        bench = build_benchmark(None, None, args.seed or 0)
    out = Path(args.out)
    res = run_campaign(bench, cfg.backend, cfg, args.workers, out)
    print(f"{len(res.outcomes)} sessions; HR {float(res.hr):.4f} ({res.hr}); FR {float(res.fr):.4f} ({res.fr}); results in {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    data = json.loads(Path(args.campaign).read_text())
    print(f"backend: {data['backend']}  sessions: {data['n']}")
    print(f"HR {data['hr']['value']:.4f} ({data['hr']['exact']})   FR {data['fr']['value']:.4f} ({data['fr']['exact']})   mean T_exec {data['mean_t_exec']:.3f}s")
    print()
    print(f"{'stage':<16}{'sessions':>9}{'FR':>9}{'T_exec':>10}")
    for st, row in data["stages"].items():
        print(f"{st:<16}{row['sessions']:>9}{row['fr']['value']:>9.4f}{row['t_exec_mean']:>10.3f}")
    print()
    kinds = list(KINDS)
    print("family".ljust(14) + "".join(k[:10].rjust(11) for k in kinds))
    for fam, row in sorted(data["heatmap"].items()):
        print(fam.ljust(14) + "".join(str(row[k]).rjust(11) for k in kinds))
    for note in data.get("notes", []):
        print(f"note: {note}")
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="session config JSON")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("--backend", choices=["scripted", "remote", "oracle", "null"], default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="veriloop", description="Verilog lint, simulation, verification and repair.", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lint", parents=[common], help="report lint warnings")
    s.add_argument("file")
    s.add_argument("--top")
    s.add_argument("--fix", action="store_true", help="apply W1/W2/W3 templates and print the result")
    s.add_argument("-o", "--output")
    s.add_argument("--json", action="store_true")
    s.add_argument("--strict", action="store_true", help="exit 1 when warnings are present")
    s.set_defaults(func=cmd_lint)

    def stim_args(s: argparse.ArgumentParser) -> None:
        s.add_argument("--top")
        s.add_argument("--stimulus", choices=["default", "exhaustive", "random", "directed"], default="default")
        s.add_argument("--cycles", type=int, default=256)
        s.add_argument("--sequences", type=int, default=8)
        s.add_argument("--directed", help="directed stimulus JSON")

    s = sub.add_parser("simulate", parents=[common], help="simulate a design")
    s.add_argument("file")
    stim_args(s)
    s.add_argument("--vcd")
    s.add_argument("--trace", help="write the trace as JSON")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("inject", parents=[common], help="inject errors (one file, or build the bundled benchmark)")
    s.add_argument("file", nargs="?")
    s.add_argument("--top")
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--list", action="store_true")
    s.add_argument("-o", "--output")
    s.add_argument("--out", help="benchmark output directory")
    s.add_argument("--plan", help="per-kind counts JSON")
    s.set_defaults(func=cmd_inject)

    s = sub.add_parser("verify", parents=[common], help="compare a DUT against a reference")
    s.add_argument("dut")
    s.add_argument("golden")
    stim_args(s)
    s.add_argument("--log", help="write the check log (JSON lines)")
    s.add_argument("--show", type=int, default=5)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("repair", parents=[common], help="run one repair session")
    s.add_argument("dut")
    s.add_argument("golden")
    s.add_argument("--top")
    s.add_argument("--spec", help="natural-language description file")
    s.add_argument("--mode", choices=["pair", "whole-file"])
    s.add_argument("--max-iter", type=int)
    s.add_argument("--fixture", help="scripted backend responses JSON")
    s.add_argument("--workdir")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_repair)

    s = sub.add_parser("bench", parents=[common], help="run a repair campaign")
    s.add_argument("benchmark", nargs="?", help="benchmark directory (built from the bundled corpus when omitted)")
    s.add_argument("--out", default="campaign")
    s.add_argument("--mode", choices=["pair", "whole-file"])
    s.add_argument("--max-iter", type=int)
    s.add_argument("--fixture", help="scripted responses: a JSON file or a directory of <mutant id>.json")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("report", parents=[common], help="render a campaign.json")
    s.add_argument("campaign")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("workers", 1), ("backend", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args))
    except (ParseFailure, ElaborationError) as exc:
        return _report_frontend(exc)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

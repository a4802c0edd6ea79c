"""Benchmark campaigns: one repair session per mutant, aggregated into metrics and a heat-map."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .agent import OracleMutation, make_backend
from .errgen import KINDS, BenchmarkSet, Mutant
from .frontend import load
from .localize import fetch_err_info
from .metrics import SessionRecord, compute_fr, compute_hr, extended_check
from .orchestrator import STAGES, SessionConfig, run_session
from .testbench import default_stimulus, run_verify

CROSS = "×"


@dataclass
class MutantOutcome:
    id: str
    module: str
    family: str
    kind: str
    cls: str
    outcome: str
    final_score: float
    iterations: int
    stage: str | None
    t_exec: float
    t_backend: float
    agent_calls: int
    hr_pass: bool
    fr_pass: bool
    localization_hit: bool | None
    error: str = ""

    def to_json(self) -> dict[str, object]:
        return dict(self.__dict__)


def _ratio(f: Fraction) -> dict[str, object]:
    return {"value": float(f), "exact": f"{f.numerator}/{f.denominator}"}


@dataclass
class CampaignResult:
    outcomes: list[MutantOutcome]
    hr: Fraction
    fr: Fraction
    stages: dict[str, dict[str, object]]
    heatmap: dict[str, dict[str, str]]
    backend: str = ""
    wall_time: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def mean_t_exec(self) -> float:
        return sum(o.t_exec for o in self.outcomes) / len(self.outcomes) if self.outcomes else 0.0

    def to_json(self) -> dict[str, object]:
        return {
            "backend": self.backend,
            "n": len(self.outcomes),
            "hr": _ratio(self.hr),
            "fr": _ratio(self.fr),
            "mean_t_exec": self.mean_t_exec,
            "wall_time": self.wall_time,
            "stages": self.stages,
            "heatmap": self.heatmap,
            "notes": self.notes,
            "mutants": [o.to_json() for o in self.outcomes],
        }

    def heatmap_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", *KINDS])
        for fam in sorted(self.heatmap):
            w.writerow([fam, *(self.heatmap[fam][k] for k in KINDS)])
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "campaign.json").write_text(json.dumps(self.to_json(), indent=2) + "\n")
        (out / "heatmap.csv").write_text(self.heatmap_csv())


def localization_hit(m: Mutant, th: int = 2) -> bool | None:
    """Whether slicing the unrepaired mutant names its injected line; None for syntax mutants."""
    if m.cls != "functional":
        return None
    try:
        golden = load(m.base_text, m.module)
        dut = load(m.text, m.module)
        rep = run_verify(dut, golden, default_stimulus(golden))
        info = fetch_err_info(dut, rep, th, th)
    except Exception:  # noqa: BLE001 - reported as a miss
        return False
    return any(line == m.line for _, line in info.suspicious_lines)


def _job(args: tuple[Mutant, dict, dict, str | None, str]) -> MutantOutcome:
    m, backend_cfg, cfg_json, workdir, spec_text = args
    cfg = SessionConfig.from_json(cfg_json)
    kind = backend_cfg.get("kind", "null")
    bcfg = dict(backend_cfg)
    if kind == "scripted":
        fx = Path(bcfg.get("fixture", ""))
        if fx.is_dir():
            bcfg["fixture"] = str(fx / f"{m.id}.json")
    wd = str(Path(workdir) / m.id) if workdir else None
    backend = None
    try:
        backend = make_backend(bcfg, m.base_text, OracleMutation(m.before, m.after))
        res = run_session(m.text, m.base_text, spec_text, backend, cfg, wd, m.module)
    except Exception as exc:  # noqa: BLE001 - a broken session is recorded, never fatal
        calls = backend.calls if backend is not None else 0
        return MutantOutcome(m.id, m.module, m.family, m.kind, m.cls, "Failure", 0.0, 0, None, 0.0, 0.0, calls, False, False, None, f"{type(exc).__name__}: {exc}")
    hr = res.success
    seed = int(cfg.stimulus.get("seed", 1))
    fr = hr and extended_check(res.final_text, m.base_text, m.module, seed)
    return MutantOutcome(
        m.id,
        m.module,
        m.family,
        m.kind,
        m.cls,
        res.outcome,
        res.final_score,
        res.iterations_used,
        res.stage if hr else None,
        res.t_exec,
        res.timings.get("backend", 0.0),
        res.agent_calls,
        hr,
        bool(fr),
        localization_hit(m, cfg.th),
        res.error,
    )


def _stage_table(outcomes: list[MutantOutcome]) -> dict[str, dict[str, object]]:
    n = len(outcomes)
    table: dict[str, dict[str, object]] = {}
    for st in STAGES:
        mine = [o for o in outcomes if o.hr_pass and o.stage == st]
        fixed = sum(1 for o in mine if o.fr_pass)
        table[st] = {
            "sessions": len(mine),
            "hr": _ratio(Fraction(len(mine), n)),
            "fr": _ratio(Fraction(fixed, n)),
            "t_exec_mean": sum(o.t_exec for o in mine) / len(mine) if mine else 0.0,
            "t_backend_mean": sum(o.t_backend for o in mine) / len(mine) if mine else 0.0,
        }
    return table


def _heatmap(outcomes: list[MutantOutcome], families: list[str]) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for fam in sorted(set(families) | {o.family for o in outcomes}):
        row = {}
        for k in KINDS:
            cell = [o for o in outcomes if o.family == fam and o.kind == k]
            row[k] = f"{sum(o.fr_pass for o in cell) / len(cell):.2f}" if cell else CROSS
        out[fam] = row
    return out


def run_campaign(
    bench: BenchmarkSet,
    backend_cfg: dict | str,
    config: SessionConfig | dict | None = None,
    workers: int = 1,
    workdir: str | Path | None = None,
    descriptions: dict[str, str] | None = None,
) -> CampaignResult:
    """Repair every mutant; per-mutant failures are recorded and never abort the run."""
    t0 = time.perf_counter()
    bcfg = {"kind": backend_cfg} if isinstance(backend_cfg, str) else dict(backend_cfg)
    cfg = config if isinstance(config, SessionConfig) else SessionConfig.from_json(config or {})
    descriptions = descriptions if descriptions is not None else _bundled_descriptions()
    sessions = str(Path(workdir) / "sessions") if workdir else None
    jobs = [(m, bcfg, cfg.to_json(), sessions, descriptions.get(m.module, "")) for m in bench.mutants]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (workers * 4))))
    else:
        outcomes = [_job(j) for j in jobs]
    outcomes.sort(key=lambda o: o.id)
    records = [SessionRecord(o.id, o.final_score, fr_pass=o.fr_pass) for o in outcomes]
    hr = compute_hr(records)
    fr = compute_fr(records)
    res = CampaignResult(
        outcomes,
        hr,
        fr,
        _stage_table(outcomes),
        _heatmap(outcomes, list(bench.families.values())),
        bcfg.get("kind", ""),
        time.perf_counter() - t0,
        ["FR is measured by an extended differential suite against the reference design, not by human review.",
         "Timings are wall-clock for this toolchain and not comparable to commercial-simulator figures."],
    )
    if workdir:
        res.write(workdir)
    return res


def _bundled_descriptions() -> dict[str, str]:
    from . import corpus

    return {e.name: e.description for e in corpus.entries()}

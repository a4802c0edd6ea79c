"""The repair loop: pre-process, verify, localize, patch, score, roll back."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .agent import Backend, NullBackend, PatchSet, RepairRequest, apply_patchset, request_patchset
from .frontend import SourceFile, elaborate, parse
from .frontend.elaborate import ElaboratedDesign
from .lint import PreprocessFailed, preprocess
from .localize import DEFAULT_TH, ErrInfo, fetch_err_info
from .sim import CombLoopDetected, LoopLimit, SimCompileError
from .testbench import PortContractViolation, Stimulus, VerifyReport, default_stimulus, make_stimulus, run_verify

STAGES = ("pre-processing", "MS", "SL")


@dataclass
class SessionConfig:
    max_iter: int = 5
    th: int = DEFAULT_TH
    mode: str = "pair"  # pair | whole-file
    stimulus: dict = field(default_factory=lambda: {"mode": "default", "seed": 1})
    backend: dict = field(default_factory=lambda: {"kind": "null"})
    preprocess_rounds: int = 5

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.th < 1:
            raise ValueError("th must be >= 1")
        if self.mode not in ("pair", "whole-file"):
            raise ValueError(f"unknown repair mode {self.mode!r}")

    @classmethod
    def from_json(cls, d: dict) -> "SessionConfig":
        known = {k: d[k] for k in ("max_iter", "th", "mode", "stimulus", "backend", "preprocess_rounds") if k in d}
        return cls(**known)

    @classmethod
    def load(cls, path: str | Path) -> "SessionConfig":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict[str, object]:
        return {
            "max_iter": self.max_iter,
            "th": self.th,
            "mode": self.mode,
            "stimulus": dict(self.stimulus),
            "backend": dict(self.backend),
            "preprocess_rounds": self.preprocess_rounds,
        }


def session_stimulus(golden: ElaboratedDesign, cfg: dict) -> Stimulus:
    mode = cfg.get("mode", "default")
    seed = int(cfg.get("seed", 1))
    if mode == "default":
        return default_stimulus(golden, seed)
    return make_stimulus(
        golden,
        mode,
        seed,
        int(cfg.get("cycles", 256)),
        int(cfg.get("sequences", 8)),
        cfg.get("file") or cfg.get("directed"),
        int(cfg.get("reset_cycles", 1)),
    )


@dataclass
class Version:
    index: int
    text: str
    score: float
    patchset: PatchSet | None = None
    status: str = "accepted"  # accepted | rolled-back | rejected
    errinfo: dict | None = None
    patch_errors: list[dict] = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict[str, object]:
        return {
            "index": self.index,
            "file": f"v{self.index}.v",
            "score": self.score,
            "status": self.status,
            "patchset": self.patchset.to_json() if self.patchset else None,
            "errinfo": self.errinfo,
            "patch_errors": self.patch_errors,
            "note": self.note,
        }


@dataclass
class SessionResult:
    outcome: str  # Success | Failure
    final_text: str
    final_score: float
    iterations_used: int
    history: list[Version]
    damage_repairs: list[PatchSet]
    timings: dict[str, float]
    stage: str | None = None  # pre-processing | MS | SL for successes
    agent_calls: int = 0
    preprocess_log: list[dict] = field(default_factory=list)
    error: str = ""

    @property
    def success(self) -> bool:
        return self.outcome == "Success"

    @property
    def t_exec(self) -> float:
        return self.timings.get("total", 0.0)

    def to_json(self) -> dict[str, object]:
        return {
            "outcome": self.outcome,
            "final_score": self.final_score,
            "iterations_used": self.iterations_used,
            "stage": self.stage,
            "agent_calls": self.agent_calls,
            "error": self.error,
            "history": [v.to_json() for v in self.history],
            "damage_repairs": [p.to_json() for p in self.damage_repairs],
            "timings": self.timings,
            "preprocess_log": self.preprocess_log,
            "final_text": self.final_text,
        }


def should_rollback(history: list[Version] | list[float], new_score: float) -> bool:
    """True iff the new score is strictly below the best accepted score."""
    if not history:
        raise ValueError("empty history")
    scores = [h for h in history] if isinstance(history[0], (int, float)) else [v.score for v in history if v.status == "accepted"]  # type: ignore[union-attr]
    return bool(scores) and new_score < max(scores)  # type: ignore[type-var]


def damage_repairs(history: list[Version]) -> list[PatchSet]:
    return [v.patchset for v in history if v.status == "rolled-back" and v.patchset is not None]


@dataclass
class _Scored:
    score: float
    report: VerifyReport | None
    ed: ElaboratedDesign | None
    error: str = ""


class _Session:
    def __init__(self, golden: ElaboratedDesign, stim: Stimulus, cfg: SessionConfig, backend: Backend, spec_text: str, workdir: Path | None):
        self.golden = golden
        self.stim = stim
        self.cfg = cfg
        self.backend = backend
        self.spec_text = spec_text
        self.workdir = workdir
        self.timings = {k: 0.0 for k in ("preprocess", "verify", "localize", "repair", "backend", "total")}
        self.pre_log: list[dict] = []

    def _tick(self, key: str, t0: float) -> None:
        self.timings[key] += time.perf_counter() - t0

    def preprocess(self, text: str, damage: list[PatchSet]) -> str:
        t0 = time.perf_counter()
        try:
            res = preprocess(text, self.backend, self.cfg.preprocess_rounds, self.spec_text, self.golden.top, self.cfg.mode, damage)
            self.pre_log.extend(r.to_json() for r in res.log)
            return res.text
        except PreprocessFailed as exc:
            self.pre_log.extend(r.to_json() for r in exc.log)
            raise
        finally:
            self._tick("preprocess", t0)

    def score(self, text: str) -> _Scored:
        t0 = time.perf_counter()
        try:
            ed = elaborate(parse(text, self.golden.top), self.golden.top)
            rep = run_verify(ed, self.golden, self.stim)
            return _Scored(rep.pass_rate, rep, ed)
        except PortContractViolation as exc:
            return _Scored(0.0, None, None, f"PortContractViolation: {exc}")
        except (CombLoopDetected, LoopLimit, SimCompileError) as exc:
            return _Scored(0.0, None, None, f"{type(exc).__name__}: {exc}")
        finally:
            self._tick("verify", t0)

    def errinfo(self, best: _Scored, it: int, index: int) -> ErrInfo | dict:
        t0 = time.perf_counter()
        try:
            if best.report is None or best.ed is None:
                return {"mode": "MS", "signals": [], "times": [], "inputs": {}, "lines": [], "error": best.error}
            return fetch_err_info(best.ed, best.report, it, self.cfg.th, f"v{index}.v")
        finally:
            self._tick("localize", t0)

    def write(self, name: str, content: str) -> None:
        if self.workdir is not None:
            (self.workdir / name).write_text(content)

    def persist_version(self, v: Version, sc: _Scored | None) -> None:
        self.write(f"v{v.index}.v", v.text)
        if sc is not None and sc.report is not None:
            self.write(f"v{v.index}.report.jsonl", sc.report.log_text())
        if v.errinfo is not None:
            self.write(f"v{v.index}.errinfo.json", json.dumps(v.errinfo, indent=2) + "\n")
        if v.patchset is not None:
            self.write(f"v{v.index}.patch.json", json.dumps(v.patchset.to_json(), indent=2) + "\n")


def _text(src: SourceFile | str | Path) -> str:
    if isinstance(src, SourceFile):
        return src.text
    if isinstance(src, Path):
        return src.read_text()
    return src


def run_session(
    dut: SourceFile | str | Path,
    golden: SourceFile | str | Path,
    spec_text: str = "",
    backend: Backend | None = None,
    config: SessionConfig | dict | None = None,
    workdir: str | Path | None = None,
    top: str | None = None,
) -> SessionResult:
    t_start = time.perf_counter()
    cfg = config if isinstance(config, SessionConfig) else SessionConfig.from_json(config or {})
    backend = backend if backend is not None else NullBackend()
    gdesign = parse(_text(golden), top)
    ged = elaborate(gdesign, gdesign.top)
    stim = session_stimulus(ged, cfg.stimulus)
    wd = Path(workdir) if workdir is not None else None
    if wd is not None:
        wd.mkdir(parents=True, exist_ok=True)
    s = _Session(ged, stim, cfg, backend, spec_text, wd)
    calls0 = backend.calls
    elapsed0 = backend.elapsed

    def finish(outcome: str, best: Version | None, history: list[Version], iters: int, stage: str | None, text: str, error: str = "") -> SessionResult:
        s.timings["backend"] = backend.elapsed - elapsed0
        s.timings["total"] = time.perf_counter() - t_start
        res = SessionResult(
            outcome,
            best.text if best is not None else text,
            best.score if best is not None else 0.0,
            iters,
            history,
            damage_repairs(history),
            dict(s.timings),
            stage,
            backend.calls - calls0,
            s.pre_log,
            error,
        )
        if wd is not None:
            (wd / "session.json").write_text(json.dumps(res.to_json(), indent=2) + "\n")
        return res

    dut_text = _text(dut)
    try:
        text0 = s.preprocess(dut_text, [])
    except PreprocessFailed as exc:
        s.write("v0.v", exc.text)
        return finish("Failure", None, [], 0, None, exc.text, f"PreprocessFailed: {exc}")
    sc = s.score(text0)
    best = Version(0, text0, sc.score, note=sc.error)
    best_sc = sc
    history = [best]
    s.persist_version(best, sc)
    if sc.score == 1.0:
        return finish("Success", best, history, 0, "pre-processing", text0)

    for it in range(1, cfg.max_iter + 1):
        info = s.errinfo(best_sc, it, best.index)
        info_json = info.to_json() if isinstance(info, ErrInfo) else info
        mode_used = info_json["mode"]
        damage = damage_repairs(history)
        t0 = time.perf_counter()
        req = RepairRequest(s.spec_text, best.text, json.dumps(info_json), damage, cfg.mode, "functional-fixer")
        ps, _, detail = request_patchset(backend, req)
        new_text, perrs = (apply_patchset(best.text, ps) if ps is not None else (best.text, []))
        s._tick("repair", t0)
        v = Version(it, new_text, 0.0, ps, "rejected", info_json, [e.to_json() for e in perrs], detail)
        if ps is None or new_text == best.text:
            v.score = best.score
            v.note = detail or "patch set left the design unchanged"
            history.append(v)
            s.persist_version(v, None)
            continue
        try:
            fixed = s.preprocess(new_text, damage)
        except PreprocessFailed as exc:
            v.text = exc.text
            v.status = "rolled-back"
            v.note = f"PreprocessFailed: {exc}"
            history.append(v)
            s.persist_version(v, None)
            continue
        v.text = fixed
        nsc = s.score(fixed)
        v.score = nsc.score
        if nsc.error:
            v.note = nsc.error
        if nsc.report is None or should_rollback(history, nsc.score):
            v.status = "rolled-back"
        else:
            v.status = "accepted"
            best, best_sc = v, nsc
        history.append(v)
        s.persist_version(v, nsc)
        if v.status == "accepted" and nsc.score == 1.0:
            return finish("Success", best, history, it, "MS" if mode_used == "MS" else "SL", fixed)
    return finish("Failure", best, history, cfg.max_iter, None, best.text)


def load_session(workdir: str | Path) -> SessionResult:
    """Rebuild a SessionResult from a session directory."""
    wd = Path(workdir)
    d = json.loads((wd / "session.json").read_text())
    history = []
    for h in d["history"]:
        p = wd / h["file"]
        history.append(
            Version(
                h["index"],
                p.read_text() if p.exists() else "",
                h["score"],
                PatchSet.from_json(h["patchset"]) if h["patchset"] else None,
                h["status"],
                h["errinfo"],
                h["patch_errors"],
                h["note"],
            )
        )
    return SessionResult(
        d["outcome"],
        d["final_text"],
        d["final_score"],
        d["iterations_used"],
        history,
        [PatchSet.from_json(p) for p in d["damage_repairs"]],
        d["timings"],
        d["stage"],
        d["agent_calls"],
        d["preprocess_log"],
        d["error"],
    )

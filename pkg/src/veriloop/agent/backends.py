"""Repair backends: scripted fixtures, a remote chat endpoint, a reference oracle, and a null agent."""

from __future__ import annotations

import difflib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .patch import _norm_snippet, find_all, normalize
from .prompt import RepairRequest, build_prompt

KEY_ENV = "REPAIR_BACKEND_KEY"


class BackendError(RuntimeError):
    pass


class Backend:
    name = "backend"

    def __init__(self) -> None:
        self.calls = 0
        self.elapsed = 0.0
        self.prompts: list[str] = []
        self.requests: list[RepairRequest] = []

    def send(self, req: RepairRequest) -> str:
        prompt = build_prompt(req)
        self.calls += 1
        self.prompts.append(prompt)
        self.requests.append(req)
        t0 = time.perf_counter()
        try:
            return self._respond(req, prompt)
        finally:
            self.elapsed += time.perf_counter() - t0

    def _respond(self, req: RepairRequest, prompt: str) -> str:
        raise NotImplementedError


class ScriptedBackend(Backend):
    """Replays canned replies keyed by the 1-based call index; missing keys give an empty reply."""

    name = "scripted"

    def __init__(self, responses: dict[int, str] | list[str] | str | Path):
        super().__init__()
        if isinstance(responses, (str, Path)):
            raw = json.loads(Path(responses).read_text())
        else:
            raw = responses
        if isinstance(raw, list):
            raw = {i: r for i, r in enumerate(raw, 1)}
        self.responses = {int(k): (v if isinstance(v, str) else json.dumps(v)) for k, v in raw.items()}

    def _respond(self, req: RepairRequest, prompt: str) -> str:
        return self.responses.get(self.calls, "")


class NullBackend(Backend):
    name = "null"

    def _respond(self, req: RepairRequest, prompt: str) -> str:
        return '{"code": ""}' if req.mode == "whole-file" else '{"correct": []}'


class RemoteBackend(Backend):
    """OpenAI-style chat completion endpoint."""

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 0.0,
        timeout: float = 120.0,
        key_env: str = KEY_ENV,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__()
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.key_env = key_env
        self.transport = transport

    def _respond(self, req: RepairRequest, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        try:
            with httpx.Client(timeout=self.timeout, transport=self.transport) as client:
                resp = client.post(self.endpoint, json=body, headers=headers)
                resp.raise_for_status()
                data = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise BackendError(f"remote backend failed: {exc}") from exc
        try:
            return str(data["choices"][0]["message"]["content"])
        except (KeyError, IndexError, TypeError):
            if isinstance(data, dict) and isinstance(data.get("content"), str):
                return data["content"]
            raise BackendError("unexpected response shape from remote backend") from None


@dataclass
class OracleMutation:
    before: str
    after: str


def diff_pairs(dut: str, golden: str) -> list[dict[str, str]]:
    """Minimal line hunks turning ``dut`` into ``golden``; pure insertions anchor on the following line."""
    a, b = dut.splitlines(), golden.splitlines()
    pairs = []
    sm = difflib.SequenceMatcher(a=a, b=b, autojunk=False)
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag == "equal":
            continue
        wrong, right = a[i1:i2], b[j1:j2]
        if not wrong:
            if i1 < len(a):
                wrong, right = [a[i1]], right + [a[i1]]
            elif i1 > 0:
                wrong, right = [a[i1 - 1]], [a[i1 - 1]] + right
        pairs.append({"wrong": "\n".join(wrong), "right": "\n".join(right)})
    return pairs


@dataclass
class OracleBackend(Backend):
    """Answers from the reference source (and the injected mutation, when known). Evaluation only."""

    golden_text: str
    mutation: OracleMutation | None = None
    name: str = field(default="oracle", init=False)

    def __post_init__(self) -> None:
        Backend.__init__(self)

    def _respond(self, req: RepairRequest, prompt: str) -> str:
        if req.mode == "whole-file":
            return json.dumps({"code": self.golden_text})
        m = self.mutation
        if m is not None and m.after.strip():
            norm, _ = normalize(req.dut_text)
            if len(find_all(norm, _norm_snippet(m.after))) == 1:
                return json.dumps({"correct": [{"wrong": m.after, "right": m.before}]})
        return json.dumps({"correct": diff_pairs(req.dut_text, self.golden_text)})


def make_backend(spec: dict | str | None, golden_text: str = "", mutation: OracleMutation | None = None) -> Backend:
    """Build a backend from a config mapping (``{"kind": ...}``) or a bare kind name."""
    if spec is None:
        spec = {"kind": "null"}
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "null")
    if kind == "scripted":
        return ScriptedBackend(spec.get("responses") or spec["fixture"])
    if kind == "remote":
        return RemoteBackend(
            spec["endpoint"], spec.get("model", "default"), float(spec.get("temperature", 0.0)),
            float(spec.get("timeout", 120.0)), spec.get("key_env", KEY_ENV),
        )
    if kind == "oracle":
        return OracleBackend(golden_text, mutation)
    if kind == "null":
        return NullBackend()
    raise ValueError(f"unknown backend kind {kind!r}")

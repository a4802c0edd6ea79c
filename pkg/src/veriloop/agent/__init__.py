"""Prompt assembly, response parsing and patch application for the repair agent."""

from __future__ import annotations

import dataclasses

from .backends import (
    Backend,
    BackendError,
    NullBackend,
    OracleBackend,
    OracleMutation,
    RemoteBackend,
    ScriptedBackend,
    diff_pairs,
    make_backend,
)
from .patch import PatchError, apply_pair, apply_patchset
from .prompt import FORMAT_REMINDER, PROFILES, PatchSet, RepairRequest, build_prompt, numbered
from .response import ResponseError, parse_response

__all__ = [
    "Backend",
    "BackendError",
    "FORMAT_REMINDER",
    "NullBackend",
    "OracleBackend",
    "OracleMutation",
    "PROFILES",
    "PatchError",
    "PatchSet",
    "RemoteBackend",
    "RepairRequest",
    "ResponseError",
    "ScriptedBackend",
    "apply_pair",
    "apply_patchset",
    "build_prompt",
    "diff_pairs",
    "make_backend",
    "numbered",
    "parse_response",
    "request_patchset",
]


def request_patchset(backend: Backend, req: RepairRequest) -> tuple[PatchSet | None, int, str]:
    """Ask once, retry once with a format reminder; returns (patchset or None, calls made, failure detail)."""
    calls = 0
    detail = ""
    for attempt in range(2):
        r = req if attempt == 0 else dataclasses.replace(req, reminder=True)
        calls += 1
        try:
            raw = backend.send(r)
        except BackendError as exc:
            return None, calls, f"BackendError: {exc}"
        try:
            return parse_response(raw, req.mode, req.dut_text), calls, ""
        except ResponseError as exc:
            detail = str(exc)
    return None, calls, detail

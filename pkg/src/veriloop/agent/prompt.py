"""Repair requests and their prompt text."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PROFILES = {
    "syntax-fixer": (
        "The design below does not compile. Fix only the reported syntax and declaration "
        "errors; do not change the intended behaviour."
    ),
    "functional-fixer": (
        "The design below compiles, but its outputs disagree with the reference model during "
        "simulation. Find and fix the functional bug described by the error information."
    ),
}

FORMAT_REMINDER = (
    "Your previous reply could not be used. Reply with exactly one JSON object, no prose and no "
    "code fences, following the OUTPUT FORMAT section."
)


@dataclass(frozen=True)
class PatchSet:
    pairs: tuple[tuple[str, str], ...]
    raw: str = ""
    mode: str = "pair"

    def to_json(self) -> dict[str, object]:
        return {"mode": self.mode, "pairs": [{"wrong": w, "right": r} for w, r in self.pairs], "raw": self.raw}

    @classmethod
    def from_json(cls, d: dict) -> "PatchSet":
        return cls(tuple((p["wrong"], p["right"]) for p in d["pairs"]), d.get("raw", ""), d.get("mode", "pair"))


@dataclass(frozen=True)
class RepairRequest:
    spec_text: str
    dut_text: str
    err_info: str
    damage_repairs: list[PatchSet] = field(default_factory=list)
    mode: str = "pair"  # pair | whole-file
    profile: str = "functional-fixer"
    reminder: bool = False


def numbered(text: str) -> str:
    lines = text.splitlines()
    width = len(str(len(lines)))
    return "\n".join(f"{i:>{width}} | {line}" for i, line in enumerate(lines, 1))


def output_contract(mode: str) -> str:
    if mode == "whole-file":
        return (
            'Reply with a single JSON object of the form {"code": "<the complete corrected source file>"}. '
            "The code value must contain every module of the file."
        )
    return (
        'Reply with a single JSON object of the form {"correct": [{"wrong": "<exact snippet from the DUT>", '
        '"right": "<replacement snippet>"}]}. Each wrong snippet must appear exactly once in the DUT code '
        "(without the line numbers); include neighbouring lines if needed to make it unique. List the pairs "
        "in the order they should be applied."
    )


def build_prompt(req: RepairRequest) -> str:
    if not req.dut_text:
        raise ValueError("empty DUT text")
    parts = [
        "You are an RTL repair expert for Verilog hardware designs. " + PROFILES.get(req.profile, PROFILES["functional-fixer"]),
        "## SPECIFICATION\n" + (req.spec_text.strip() or "(no specification provided)"),
        "## DUT CODE\n" + numbered(req.dut_text),
        "## ERROR INFO\n" + req.err_info.strip(),
    ]
    if req.damage_repairs:
        shown = [[{"wrong": w, "right": r} for w, r in ps.pairs] for ps in req.damage_repairs]
        parts.append(
            "## DAMAGE REPAIRS\nThese earlier patches lowered the test pass rate and were rolled back. "
            "Do not propose them again:\n" + json.dumps(shown, indent=2)
        )
    parts.append("## OUTPUT FORMAT\n" + output_contract(req.mode))
    if req.reminder:
        parts.append(FORMAT_REMINDER)
    return "\n\n".join(parts) + "\n"

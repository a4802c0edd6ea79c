"""Whitespace-tolerant, uniqueness-checked snippet replacement."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..frontend.lexer import relexes
from .prompt import PatchSet

_RUN = re.compile(r"[ \t]+")


@dataclass(frozen=True)
class PatchError:
    kind: str  # NoMatch | AmbiguousMatch | LexError
    index: int
    wrong: str
    count: int = 0

    def __str__(self) -> str:
        extra = f" ({self.count} matches)" if self.kind == "AmbiguousMatch" else ""
        return f"{self.kind} for pair {self.index}{extra}: {self.wrong.strip()[:60]!r}"

    def to_json(self) -> dict[str, object]:
        return {"kind": self.kind, "index": self.index, "wrong": self.wrong, "count": self.count}


def normalize(text: str) -> tuple[str, list[int]]:
    """Collapse blank runs, trim every line; returns (normalized, offset map into ``text``)."""
    out: list[str] = []
    offs: list[int] = []
    pos = 0
    lines = text.split("\n")
    for li, line in enumerate(lines):
        stripped = line.strip(" \t\r")
        start = pos + (len(line) - len(line.lstrip(" \t\r")))
        i = 0
        prev_blank = False
        while i < len(stripped):
            c = stripped[i]
            if c in " \t":
                if not prev_blank:
                    out.append(" ")
                    offs.append(start + i)
                prev_blank = True
            else:
                out.append(c)
                offs.append(start + i)
                prev_blank = False
            i += 1
        if li < len(lines) - 1:
            out.append("\n")
            offs.append(pos + len(line))
        pos += len(line) + 1
    return "".join(out), offs


def _norm_snippet(s: str) -> str:
    lines = [_RUN.sub(" ", ln.strip(" \t\r")) for ln in s.split("\n")]
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines)


def find_all(haystack: str, needle: str) -> list[int]:
    out, i = [], haystack.find(needle)
    while i != -1:
        out.append(i)
        i = haystack.find(needle, i + 1)
    return out


def _reindent(right: str, base: str) -> str:
    lines = right.split("\n")
    while lines and not lines[0].strip():
        lines.pop(0)
    while len(lines) > 1 and not lines[-1].strip():
        lines.pop()
    if not lines:
        return ""
    first_indent = len(lines[0]) - len(lines[0].lstrip(" \t"))
    out = [lines[0].strip(" \t")]
    for ln in lines[1:]:
        if not ln.strip():
            out.append("")
            continue
        ind = len(ln) - len(ln.lstrip(" \t"))
        out.append(base + " " * max(0, ind - first_indent) + ln.strip(" \t"))
    return "\n".join(out)


def apply_pair(text: str, wrong: str, right: str, index: int = 0) -> tuple[str, PatchError | None]:
    norm, offs = normalize(text)
    needle = _norm_snippet(wrong)
    if not needle:
        return text, PatchError("NoMatch", index, wrong)
    hits = find_all(norm, needle)
    if not hits:
        return text, PatchError("NoMatch", index, wrong)
    if len(hits) > 1:
        return text, PatchError("AmbiguousMatch", index, wrong, len(hits))
    s = hits[0]
    start, end = offs[s], offs[s + len(needle) - 1] + 1
    line_start = text.rfind("\n", 0, start) + 1
    base = text[line_start:start]
    base = base[: len(base) - len(base.lstrip(" \t"))]
    new = text[:start] + _reindent(right, base) + text[end:]
    if not relexes(new):
        return text, PatchError("LexError", index, wrong)
    return new, None


def apply_patchset(dut_text: str, ps: PatchSet) -> tuple[str, list[PatchError]]:
    """Apply pairs in order; failing pairs are skipped and reported."""
    if ps.mode == "whole-file":
        new = ps.pairs[0][1]
        if not new.endswith("\n"):
            new += "\n"
        return new, []
    errors: list[PatchError] = []
    text = dut_text
    for i, (wrong, right) in enumerate(ps.pairs):
        text, err = apply_pair(text, wrong, right, i)
        if err is not None:
            errors.append(err)
    return text, errors

"""Source files and offset -> (line, column) lookup."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str
    line_index: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        starts = [0]
        for i, ch in enumerate(self.text):
            if ch == "\n":
                starts.append(i + 1)
        object.__setattr__(self, "line_index", tuple(starts))

    @classmethod
    def from_path(cls, path: str | Path) -> "SourceFile":
        p = Path(path)
        return cls(str(p), p.read_text(encoding="utf-8"))

    @classmethod
    def from_text(cls, text: str, path: str = "<memory>") -> "SourceFile":
        return cls(path, text)

    def position(self, offset: int) -> tuple[int, int]:
        """Return the 1-based (line, column) of a byte offset."""
        if offset < 0:
            offset = 0
        line = bisect.bisect_right(self.line_index, offset)
        return line, offset - self.line_index[line - 1] + 1

    @property
    def num_lines(self) -> int:
        return len(self.line_index)

    def line_text(self, line: int) -> str:
        start = self.line_index[line - 1]
        end = self.line_index[line] - 1 if line < len(self.line_index) else len(self.text)
        return self.text[start:end]

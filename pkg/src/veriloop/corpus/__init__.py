"""Bundled reference designs, grouped by family."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


@dataclass(frozen=True)
class Entry:
    name: str  # also the top module
    family: str
    path: str
    description: str

    @property
    def text(self) -> str:
        return resources.files(__name__).joinpath(self.path).read_text()


@lru_cache(maxsize=1)
def entries() -> tuple[Entry, ...]:
    data = json.loads(resources.files(__name__).joinpath("index.json").read_text())
    return tuple(Entry(k, v["family"], v["path"], v["description"]) for k, v in sorted(data.items()))


def names() -> list[str]:
    return [e.name for e in entries()]


def get(name: str) -> Entry:
    for e in entries():
        if e.name == name:
            return e
    raise KeyError(f"no reference design named {name!r}")


def families() -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for e in entries():
        out.setdefault(e.family, []).append(e.name)
    return out

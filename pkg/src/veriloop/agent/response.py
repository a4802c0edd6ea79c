"""Extract and validate the JSON object in a backend reply."""

from __future__ import annotations

import json
import re

from .prompt import PatchSet

_FENCE = re.compile(r"```[a-zA-Z]*\n?(.*?)```", re.S)


class ResponseError(ValueError):
    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind  # NoJson | SchemaViolation | EmptyCorrect


def first_json_object(raw: str) -> dict | None:
    candidates = [m.group(1) for m in _FENCE.finditer(raw)] + [raw]
    dec = json.JSONDecoder()
    for text in candidates:
        pos = text.find("{")
        while pos != -1:
            try:
                obj, _ = dec.raw_decode(text, pos)
            except json.JSONDecodeError:
                pos = text.find("{", pos + 1)
                continue
            if isinstance(obj, dict):
                return obj
            pos = text.find("{", pos + 1)
    return None


def parse_response(raw: str, mode: str = "pair", old_text: str = "") -> PatchSet:
    obj = first_json_object(raw or "")
    if obj is None:
        raise ResponseError("NoJson", "no JSON object found in the reply")
    if mode == "whole-file":
        code = obj.get("code")
        if not isinstance(code, str) or not code.strip():
            raise ResponseError("SchemaViolation", "expected a non-empty string under 'code'")
        return PatchSet(((old_text, code),), raw, "whole-file")
    corr = obj.get("correct")
    if not isinstance(corr, list):
        raise ResponseError("SchemaViolation", "expected an array under 'correct'")
    if not corr:
        raise ResponseError("EmptyCorrect", "the 'correct' array is empty")
    pairs = []
    for item in corr:
        if not isinstance(item, dict) or not isinstance(item.get("wrong"), str) or not isinstance(item.get("right"), str):
            raise ResponseError("SchemaViolation", "each entry needs string 'wrong' and 'right' fields")
        if not item["wrong"].strip():
            raise ResponseError("SchemaViolation", "empty 'wrong' snippet")
        pairs.append((item["wrong"], item["right"]))
    return PatchSet(tuple(pairs), raw, "pair")

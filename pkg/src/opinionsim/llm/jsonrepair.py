"""Recover a JSON object from a chat-model reply."""
from __future__ import annotations

import json
import re
from typing import Optional

_FENCE = re.compile(r"```(?:json|JSON)?\s*\n?(.*?)```", re.DOTALL)


class ResponseParseError(ValueError):
    pass


def strip_code_fences(text: str) -> str:
    m = _FENCE.search(text)
    return m.group(1) if m else text


def first_balanced_object(text: str) -> Optional[str]:
    """Return the first `{...}` span with balanced braces, string-literal aware."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_str = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_str:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_str = False
                continue
            if ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start:i + 1]
        start = text.find("{", start + 1)
    return None


def parse_json_object(text: str) -> dict:
    if text is None:
        raise ResponseParseError("empty response")
    body = strip_code_fences(text)
    candidate = first_balanced_object(body)
    if candidate is None and body is not text:
        candidate = first_balanced_object(text)
    if candidate is None:
        raise ResponseParseError("no JSON object found in response")
    try:
        obj = json.loads(candidate)
    except json.JSONDecodeError as exc:
        raise ResponseParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ResponseParseError("top-level JSON value is not an object")
    return obj

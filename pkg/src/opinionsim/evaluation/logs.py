"""Log readers, schema checks and normalization to a common action stream."""
from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..cognition.beliefs import INTENSITY_VALUES, normalize_action_type


class SchemaError(ValueError):
    """A log line violates its schema; the message names the file, line and field."""


def read_jsonl(path: str) -> List[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{i}: not valid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"{path}:{i}: expected a JSON object")
            out.append(obj)
    return out


_NUM = (int, float)
_OPT_STR = (str, type(None))

ACTION_LOG_SCHEMA: Dict[str, tuple] = {
    "step": (int,), "t": _NUM, "agent_id": (str,), "action_type": (str,), "post_id": _OPT_STR,
    "target_id": _OPT_STR, "root_id": _OPT_STR, "text": (str,), "hashtags": (list,),
}
STEP_LOG_SCHEMA: Dict[str, tuple] = {
    "step": (int,), "t": _NUM, "lam": _NUM, "n_t": (int,), "activated": (list,), "actions": (int,),
    "degraded": (int,),
}
REAL_POST_SCHEMA: Dict[str, tuple] = {
    "post_id": (str,), "user_id": (str,), "timestamp": (str,), "text": (str,), "kind": (str,),
}


def validate(records: Sequence[dict], schema: Dict[str, tuple], source: str = "log") -> None:
    for i, r in enumerate(records, 1):
        for name, types in schema.items():
            if name not in r:
                raise SchemaError(f"{source}: record {i}: missing field '{name}'")
            v = r[name]
            if isinstance(v, bool) or not isinstance(v, types):
                want = "/".join(t.__name__ for t in types)
                raise SchemaError(f"{source}: record {i}: field '{name}' expected {want}, got {type(v).__name__}")


def detect_schema(records: Sequence[dict]) -> str:
    if not records:
        return "empty"
    first = records[0]
    if "action_type" in first:
        return "action_log"
    if "user_id" in first and "timestamp" in first:
        return "real_posts"
    raise SchemaError(f"unrecognized log schema; fields present: {sorted(first)}")


_EMOTION_ALIASES = {
    "anger": "anger", "angry": "anger", "rage": "anger",
    "joy": "happiness", "happy": "happiness", "happiness": "happiness",
    "sadness": "sadness", "sad": "sadness",
    "fear": "fear", "afraid": "fear", "anxiety": "fear",
    "surprise": "surprise", "surprised": "surprise",
    "disgust": "disgust", "disgusted": "disgust",
}
EMOTION_CATEGORIES = ("happiness", "sadness", "anger", "fear", "surprise", "disgust")


def normalize_emotion(label) -> Optional[str]:
    if not label:
        return None
    return _EMOTION_ALIASES.get(str(label).strip().lower())


@dataclass(frozen=True)
class Act:
    """One action in either a simulated or a real log."""

    t: float
    agent: str
    kind: str
    post_id: Optional[str]
    parent_id: Optional[str]
    root_id: Optional[str]
    target_author: Optional[str]
    text: str
    emotion: Optional[str]
    intensity: Optional[float]

    def sort_key(self) -> tuple:
        return (self.t, self.agent, self.kind, self.post_id or "", self.parent_id or "", self.text)


def _strategy_emotion(strategy) -> Tuple[Optional[str], Optional[float]]:
    if not isinstance(strategy, dict):
        return None, None
    emo = normalize_emotion(strategy.get("emotion_type"))
    inten = INTENSITY_VALUES.get(str(strategy.get("emotion_intensity", "")).strip().lower())
    return emo, inten


def from_action_log(records: Iterable[dict]) -> List[Act]:
    out = []
    for r in records:
        kind = normalize_action_type(r["action_type"]) or r["action_type"]
        emo, inten = _strategy_emotion(r.get("strategy"))
        out.append(Act(float(r["t"]), r["agent_id"], kind, r.get("post_id"), r.get("target_id"), r.get("root_id"),
                       r.get("target_author"), r.get("text", "") or "", emo, inten))
    return sorted(out, key=Act.sort_key)


def from_real_posts(records: Iterable[dict], t_start: Optional[str] = None) -> List[Act]:
    records = list(records)
    if not records:
        return []
    times = [datetime.fromisoformat(r["timestamp"]) for r in records]
    origin = datetime.fromisoformat(t_start) if t_start else min(times)
    by_id = {r["post_id"]: r for r in records}

    def root(pid: str) -> str:
        seen = set()
        while by_id[pid].get("parent_id") in by_id and pid not in seen:
            seen.add(pid)
            pid = by_id[pid]["parent_id"]
        return pid

    out = []
    for r, ts in zip(records, times):
        kind = normalize_action_type(r["kind"]) or r["kind"]
        parent = r.get("parent_id") if r.get("parent_id") in by_id else None
        emo = normalize_emotion(r.get("emotion"))
        inten = r.get("emotion_intensity")
        inten = INTENSITY_VALUES.get(inten, None) if isinstance(inten, str) else inten
        out.append(Act((ts - origin).total_seconds() / 60.0, r["user_id"], kind,
                       None if kind == "like" else r["post_id"], parent, root(r["post_id"]),
                       by_id[parent]["user_id"] if parent else None, r.get("text", "") or "", emo, inten))
    return sorted(out, key=Act.sort_key)


def load_actions(path: str, t_start: Optional[str] = None) -> List[Act]:
    """Read either log flavour, validating it field by field."""
    records = read_jsonl(path)
    kind = detect_schema(records)
    if kind == "action_log":
        validate(records, ACTION_LOG_SCHEMA, path)
        return from_action_log(records)
    if kind == "real_posts":
        validate(records, REAL_POST_SCHEMA, path)
        return from_real_posts(records, t_start)
    return []

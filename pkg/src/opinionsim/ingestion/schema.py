"""Dataset records and their JSONL readers."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional, Tuple, Type, TypeVar

from ..cognition.beliefs import AgentKind, normalize_action_type

T = TypeVar("T")


@dataclass
class UserRecord:
    user_id: str
    display_name: str = ""
    gender: str = ""
    region: str = ""
    verification_type: str = "none"
    follower_count: int = 0
    description: str = ""
    interest_tags: List[str] = field(default_factory=list)
    agent_kind: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.user_id, str) or not self.user_id:
            raise ValueError("user_id must be a non-empty string")
        self.follower_count = int(self.follower_count or 0)
        self.interest_tags = [str(t) for t in (self.interest_tags or [])]
        if self.agent_kind is not None:
            AgentKind(self.agent_kind)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class HistoricalPost:
    post_id: str
    user_id: str
    timestamp: str
    text: str
    kind: str = "short_post"
    parent_id: Optional[str] = None
    hashtags: List[str] = field(default_factory=list)
    emotion: Optional[str] = None
    emotion_intensity: Any = None

    def __post_init__(self):
        for name in ("post_id", "user_id", "timestamp"):
            if not isinstance(getattr(self, name), str) or not getattr(self, name):
                raise ValueError(f"{name} must be a non-empty string")
        datetime.fromisoformat(self.timestamp)
        kind = normalize_action_type(self.kind)
        if kind is None:
            raise ValueError(f"unknown post kind {self.kind!r}")
        self.kind = kind
        self.text = self.text or ""
        self.hashtags = [str(h) for h in (self.hashtags or [])]

    @property
    def time(self) -> datetime:
        return datetime.fromisoformat(self.timestamp)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScenarioSpec:
    event_background: str
    t_start: str
    steps: int
    dt: float = 10.0
    duration_minutes: Optional[float] = None
    events: List[Dict[str, Any]] = field(default_factory=list)
    users: Optional[str] = None
    posts: Optional[str] = None
    follows: Optional[str] = None
    keywords: List[str] = field(default_factory=list)
    overrides: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        datetime.fromisoformat(self.t_start)
        if self.steps < 0 or self.dt <= 0:
            raise ValueError("steps must be >= 0 and dt > 0")
        if self.duration_minutes is not None and abs(self.steps * self.dt - self.duration_minutes) > self.dt:
            raise ValueError(f"steps * dt = {self.steps * self.dt} does not match duration {self.duration_minutes}")

    @classmethod
    def load(cls, path: str) -> "ScenarioSpec":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        spec = cls(**d)
        base = os.path.dirname(os.path.abspath(path))
        for name in ("users", "posts", "follows"):
            p = getattr(spec, name)
            if p and not os.path.isabs(p):
                setattr(spec, name, os.path.join(base, p))
        return spec

    def config_overrides(self) -> Dict[str, Any]:
        """Simulation config fields implied by the scenario, then its explicit overrides."""
        from ..simulator.config import merge

        base = {"event_background": self.event_background, "t_start": self.t_start, "max_steps": self.steps,
                "dt": self.dt, "events": list(self.events)}
        return merge(base, self.overrides)


def _from_dict(cls: Type[T], d: dict) -> T:
    if not isinstance(d, dict):
        raise ValueError("record is not a JSON object")
    known = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in d.items() if k in known})


def parse_records(lines: Iterable[str], cls: Type[T]) -> Tuple[List[T], int]:
    """Parse JSONL lines into records; returns (records, number of skipped lines)."""
    out, bad = [], 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            out.append(_from_dict(cls, json.loads(line)))
        except (ValueError, TypeError):
            bad += 1
    return out, bad


def read_records(path: str, cls: Type[T]) -> Tuple[List[T], int]:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh, cls)


def write_records(path: str, records: Iterable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            d = r.to_dict() if hasattr(r, "to_dict") else r
            fh.write(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n")


def read_follows(path: str) -> List[Tuple[str, str]]:
    edges = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                edges.append((str(d["follower"]), str(d["followee"])))
            except (ValueError, KeyError, TypeError):
                continue
    return edges

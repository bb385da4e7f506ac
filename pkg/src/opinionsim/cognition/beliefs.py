"""Belief, desire and intention data types shared across the pipeline."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .emotion import EmotionVector


class AgentKind(str, Enum):
    ORDINARY_USER = "ordinary_user"
    OPINION_LEADER = "opinion_leader"
    MEDIA_ACCOUNT = "media_account"
    GOVERNMENT = "government"


# Seven atomic behaviours. Likes and direct reposts carry no strategy or text.
LIKE = "like"
REPOST = "repost"
REPOST_COMMENT = "repost_comment"
SHORT_COMMENT = "short_comment"
LONG_COMMENT = "long_comment"
SHORT_POST = "short_post"
LONG_POST = "long_post"
ACTION_TYPES = (LIKE, REPOST, REPOST_COMMENT, SHORT_COMMENT, LONG_COMMENT, SHORT_POST, LONG_POST)
ORIGINAL_TYPES = (SHORT_POST, LONG_POST)
REPOST_TYPES = (REPOST, REPOST_COMMENT)
COMMENT_TYPES = (SHORT_COMMENT, LONG_COMMENT)
BARE_TYPES = (LIKE, REPOST)
CONTENT_TYPES = (REPOST_COMMENT, SHORT_COMMENT, LONG_COMMENT, SHORT_POST, LONG_POST)

_ACTION_ALIASES = {
    "like": LIKE,
    "repost": REPOST,
    "direct_repost": REPOST,
    "repost_with_comment": REPOST_COMMENT,
    "repost_w_comment": REPOST_COMMENT,
    "repost_comment": REPOST_COMMENT,
    "quote": REPOST_COMMENT,
    "short_comment": SHORT_COMMENT,
    "comment": SHORT_COMMENT,
    "long_comment": LONG_COMMENT,
    "short_post": SHORT_POST,
    "short_original_post": SHORT_POST,
    "post": SHORT_POST,
    "long_post": LONG_POST,
    "long_original_post": LONG_POST,
}


def normalize_label(text: str) -> str:
    return "_".join(str(text).strip().lower().replace("-", " ").replace("/", " ").split())


def normalize_action_type(text: str) -> Optional[str]:
    return _ACTION_ALIASES.get(normalize_label(text))


INTENSITY_LEVELS = ("very_low", "low", "medium", "high", "very_high")
INTENSITY_VALUES = {"very_low": 0.1, "low": 0.3, "medium": 0.5, "high": 0.7, "very_high": 0.9}


def normalize_intensity(text) -> Optional[str]:
    label = normalize_label(text)
    return label if label in INTENSITY_VALUES else None


@dataclass
class OpinionEntry:
    t: float
    subject: str
    opinion: str
    reason: str = ""

    def to_dict(self) -> dict:
        return {"t": self.t, "subject": self.subject, "opinion": self.opinion, "reason": self.reason}

    @classmethod
    def from_dict(cls, d: dict) -> "OpinionEntry":
        return cls(float(d["t"]), d["subject"], d["opinion"], d.get("reason", ""))


def dedupe_opinions(entries: List[OpinionEntry]) -> List[OpinionEntry]:
    """Sort by time and keep the last entry for each (subject, t) key."""
    keyed: Dict[Tuple[str, float], OpinionEntry] = {}
    for e in entries:
        keyed[(e.subject, e.t)] = e
    return sorted(keyed.values(), key=lambda e: e.t)


@dataclass
class BeliefState:
    identity: str
    psychology: List[str] = field(default_factory=list)
    event_opinions: List[OpinionEntry] = field(default_factory=list)
    emotion: EmotionVector = field(default_factory=EmotionVector)
    last_update: float = 0.0
    last_psychology_change: Optional[float] = None

    def mutable_layers(self) -> dict:
        """The layers shown to, and returned by, the belief-update prompt."""
        return {
            "psychological_cognition": list(self.psychology),
            "event_opinions": [{"subject": o.subject, "opinion": o.opinion, "reason": o.reason}
                               for o in self.event_opinions],
            "emotion_vector": self.emotion.to_dict(),
        }

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "psychology": list(self.psychology),
            "event_opinions": [o.to_dict() for o in self.event_opinions],
            "emotion": self.emotion.to_dict(),
            "last_update": self.last_update,
            "last_psychology_change": self.last_psychology_change,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BeliefState":
        return cls(
            identity=d["identity"],
            psychology=list(d.get("psychology", [])),
            event_opinions=[OpinionEntry.from_dict(o) for o in d.get("event_opinions", [])],
            emotion=EmotionVector.from_dict(d.get("emotion", {})),
            last_update=float(d.get("last_update", 0.0)),
            last_psychology_change=d.get("last_psychology_change"),
        )

    def copy(self) -> "BeliefState":
        return BeliefState.from_dict(self.to_dict())


def identity_digest(beliefs: Dict[str, BeliefState]) -> str:
    h = hashlib.sha256()
    for agent_id in sorted(beliefs):
        h.update(agent_id.encode())
        h.update(b"\0")
        h.update(beliefs[agent_id].identity.encode())
        h.update(b"\1")
    return h.hexdigest()


@dataclass
class Desire:
    kind: str
    description: str
    intensity: str

    @property
    def weight(self) -> float:
        return INTENSITY_VALUES[self.intensity]

    def to_dict(self) -> dict:
        return {"type": self.kind, "description": self.description, "intensity": self.intensity}


MAX_DESIRES = 8


@dataclass
class DesireSet:
    entries: List[Desire] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def to_dict(self) -> dict:
        return {"desires": [d.to_dict() for d in self.entries]}


STRATEGY_KEYS = ("emotion_type", "emotion_intensity", "stance", "stance_intensity", "style", "narrative")


@dataclass
class ActionDraft:
    action_type: str
    target_post_id: Optional[str] = None
    strategy: Optional[Dict[str, str]] = None
    text: str = ""
    hashtags: List[str] = field(default_factory=list)
    mentions: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "action_type": self.action_type,
            "target_post_id": self.target_post_id,
            "strategy": dict(self.strategy) if self.strategy else None,
            "text": self.text,
            "hashtags": list(self.hashtags),
            "mentions": list(self.mentions),
        }


@dataclass
class IntentionPlan:
    actions: List[ActionDraft] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

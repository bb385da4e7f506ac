"""Seeded synthetic datasets in the ingestion schema.

Users get heavy-tailed follower counts and activity levels. Event logs follow
an exponentially decaying response to each scheduled shock, and reposts pick
their parent by preferential attachment so cascade sizes come out heavy-tailed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..cognition.beliefs import BARE_TYPES, ORIGINAL_TYPES
from .schema import HistoricalPost, UserRecord

REGIONS = ("Beijing", "Shanghai", "Guangdong", "Sichuan", "Zhejiang", "Hubei", "overseas")
TOPICS = ("#FactoryFire#", "#PublicHearing#", "#OfficialStatement#", "#SafetyRules#")

_WORDS = {
    "anger": ["this is outrageous", "shameless cover-up", "they are lying", "a total disgrace"],
    "sadness": ["so sad to see this", "heartbreaking news", "my heart hurts", "what a pity"],
    "fear": ["this is scary", "is anyone safe", "worried about my family", "the risk is real"],
    "surprise": ["shocking update", "unbelievable", "did not see that coming", "breaking"],
    "disgust": ["disgusting behaviour", "this makes me sick", "gross negligence", "filthy business"],
    "happiness": ["glad they acted fast", "good news at last", "thanks to the rescuers", "well done"],
}
_REASONED = ["according to the evidence", "we should wait for the investigation", "looking at the facts",
             "the data suggests otherwise", "let us verify the source first"]
_HEATED = ["everyone knows the truth", "obviously they are lying", "they must be punished", "typical elites"]


@dataclass
class SyntheticConfig:
    n_users: int = 100
    t_start: str = "2024-01-01T00:00:00"
    history_days: float = 3.0
    history_rate: float = 1.5          # mean pre-event posts per user
    steps: int = 276
    dt: float = 10.0
    base_rate: float = 1.0             # actions per step without shocks
    event_steps: Tuple[int, ...] = (6, 96, 186)
    event_magnitude: float = 40.0      # peak extra actions per step
    decay_minutes: float = 120.0
    kind_weights: Dict[str, float] = field(default_factory=lambda: {
        "like": 0.30, "repost": 0.22, "repost_comment": 0.12, "short_comment": 0.18,
        "long_comment": 0.04, "short_post": 0.11, "long_post": 0.03})
    seed: int = 0


def _ts(origin: datetime, minutes: float) -> str:
    return (origin + timedelta(minutes=float(minutes))).replace(microsecond=0).isoformat()


def _text(rng: np.random.Generator, emotion: str, long_form: bool) -> str:
    n = int(rng.integers(3, 6)) if long_form else int(rng.integers(1, 3))
    parts = []
    for _ in range(n):
        bank = _WORDS[emotion]
        parts.append(bank[int(rng.integers(0, len(bank)))])
        pool = _HEATED if rng.random() < 0.5 else _REASONED
        if rng.random() < 0.6:
            parts.append(pool[int(rng.integers(0, len(pool)))])
    return ", ".join(parts)


def make_users(n: int, rng: np.random.Generator) -> List[UserRecord]:
    out = []
    for i in range(n):
        r = rng.random()
        verification = "government" if r < 0.02 else "media" if r < 0.06 else "personal" if r < 0.15 else "none"
        followers = int(math.exp(rng.normal(6.0, 2.2)))
        out.append(UserRecord(
            user_id=f"u{i:04d}", display_name=f"user_{i:04d}", gender=["female", "male"][int(rng.integers(0, 2))],
            region=REGIONS[int(rng.integers(0, len(REGIONS)))], verification_type=verification,
            follower_count=followers, description=f"interested in {TOPICS[i % len(TOPICS)].strip('#')}",
            interest_tags=[TOPICS[i % len(TOPICS)]]))
    return out


def _emotion_probs(heat: float) -> np.ndarray:
    # order: anger, sadness, fear, surprise, disgust, happiness
    calm = np.array([0.12, 0.2, 0.12, 0.1, 0.08, 0.38])
    hot = np.array([0.42, 0.12, 0.12, 0.2, 0.1, 0.04])
    p = (1.0 - heat) * calm + heat * hot
    return p / p.sum()


_EMO_ORDER = ("anger", "sadness", "fear", "surprise", "disgust", "happiness")


class _Stream:
    """Accumulates posts and tracks popularity for preferential attachment."""

    def __init__(self, users: Sequence[UserRecord], rng: np.random.Generator, prefix: str):
        self.rng = rng
        self.prefix = prefix
        self.posts: List[HistoricalPost] = []
        self.roots: List[str] = []
        self.popularity: List[float] = []
        self.ids = [u.user_id for u in users]
        act = rng.pareto(1.5, len(users)) + 1.0
        self.activity = act / act.sum()

    def emit(self, ts: str, kind: str, heat: float) -> None:
        rng = self.rng
        user = self.ids[int(rng.choice(len(self.ids), p=self.activity))]
        pid = f"{self.prefix}{len(self.posts):06d}"
        if kind not in ORIGINAL_TYPES and not self.roots:
            kind = "short_post"
        parent = None
        if kind not in ORIGINAL_TYPES:
            w = np.asarray(self.popularity)
            idx = int(rng.choice(len(self.roots), p=w / w.sum()))
            parent = self.roots[idx]
            if kind in ("repost", "repost_comment"):
                self.popularity[idx] += 1.0
        emo = _EMO_ORDER[int(rng.choice(6, p=_emotion_probs(heat)))]
        bare = kind in BARE_TYPES
        text = "" if bare else _text(rng, emo, kind in ("long_comment", "long_post"))
        tags = [TOPICS[int(rng.integers(0, len(TOPICS)))]] if not bare and rng.random() < 0.4 else []
        level = ("very_low", "low", "medium", "high", "very_high")[min(4, int(heat * 4 + rng.random() * 1.5))]
        self.posts.append(HistoricalPost(pid, user, ts, text, kind, parent, tags,
                                         None if bare else emo, None if bare else level))
        if kind in ORIGINAL_TYPES:
            self.roots.append(pid)
            self.popularity.append(1.0)


def make_history(users: Sequence[UserRecord], cfg: SyntheticConfig, rng: np.random.Generator) -> List[HistoricalPost]:
    origin = datetime.fromisoformat(cfg.t_start) - timedelta(days=cfg.history_days)
    s = _Stream(users, rng, "h")
    n = int(rng.poisson(cfg.history_rate * len(users)))
    times = np.sort(rng.uniform(0, cfg.history_days * 1440.0 - 1.0, n))
    kinds = list(cfg.kind_weights)
    w = np.array([cfg.kind_weights[k] for k in kinds])
    for t in times:
        s.emit(_ts(origin, t), kinds[int(rng.choice(len(kinds), p=w / w.sum()))], 0.1)
    return s.posts


def shock_profile(cfg: SyntheticConfig) -> np.ndarray:
    """Expected actions per step."""
    steps = np.arange(cfg.steps)
    rate = np.full(cfg.steps, cfg.base_rate, dtype=float)
    for e in cfg.event_steps:
        lag = (steps - e) * cfg.dt
        rate += np.where(lag >= 0, cfg.event_magnitude * np.exp(-np.clip(lag, 0, None) / cfg.decay_minutes), 0.0)
    return rate


def make_event_log(users: Sequence[UserRecord], cfg: SyntheticConfig, rng: np.random.Generator) -> List[HistoricalPost]:
    origin = datetime.fromisoformat(cfg.t_start)
    s = _Stream(users, rng, "r")
    rate = shock_profile(cfg)
    heat = (rate - cfg.base_rate) / max(cfg.event_magnitude, 1e-9)
    kinds = list(cfg.kind_weights)
    w = np.array([cfg.kind_weights[k] for k in kinds])
    for step in range(cfg.steps):
        for _ in range(int(rng.poisson(rate[step]))):
            t = step * cfg.dt + rng.uniform(0, cfg.dt)
            s.emit(_ts(origin, t), kinds[int(rng.choice(len(kinds), p=w / w.sum()))], float(heat[step]))
    return sorted(s.posts, key=lambda p: (p.timestamp, p.post_id))


def generate(cfg: Optional[SyntheticConfig] = None) -> Tuple[List[UserRecord], List[HistoricalPost], List[HistoricalPost]]:
    """(users, pre-event history, in-window reference log)."""
    cfg = cfg or SyntheticConfig()
    rng = np.random.default_rng(cfg.seed)
    users = make_users(cfg.n_users, rng)
    return users, make_history(users, cfg, rng), make_event_log(users, cfg, rng)


def scenario_events(cfg: SyntheticConfig, labels: Optional[Sequence[str]] = None) -> List[dict]:
    labels = list(labels or ("factory fire reported", "official statement released", "investigation findings"))
    return [{"step": s, "label": labels[i % len(labels)], "payload": f"News update: {labels[i % len(labels)]}.",
             "magnitude": 1.0} for i, s in enumerate(cfg.event_steps)]


def synthetic_roster(cfg: SyntheticConfig, gateway, event_background: str = ""):
    """Generated users and history, cleaned without an activity floor, initialized through `gateway`."""
    from .initialize import InitConfig, initialize_agents
    from .preprocess import FilterConfig, preprocess

    users, history, _ = generate(cfg)
    dataset, _ = preprocess(users, history, FilterConfig(activity_threshold=0, min_length=1))
    return initialize_agents(dataset, gateway, InitConfig(event_background=event_background, t_start=cfg.t_start,
                                                          seed=cfg.seed))

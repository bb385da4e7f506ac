"""Two-channel feed recommendation with exploration slots and trending injection."""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from typing import Deque, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .content import ContentPool, Post, SocialGraphs


@dataclass
class ReachRule:
    """Exposure multiplier on the engagement term for matching posts."""

    multiplier: float
    authors: List[str] = field(default_factory=list)
    hashtags: List[str] = field(default_factory=list)

    def matches(self, post: Post) -> bool:
        if self.authors and post.author_id in self.authors:
            return True
        return bool(self.hashtags) and any(h in self.hashtags for h in post.hashtags)


@dataclass
class RecommendationConfig:
    w_h: float = 0.3
    w_p: float = 0.3
    w_r: float = 0.4
    r_explore: float = 0.2
    K: int = 10
    N_c: int = 5
    history_window: int = 100
    freshness_decay: float = 0.005  # per minute
    public_window: float = 1440.0  # minutes
    public_pool_size: int = 500
    trending_period: int = 6  # steps
    trending_top_n: int = 3
    trending_window: int = 36  # steps
    reach_rules: List[ReachRule] = field(default_factory=list)

    def __post_init__(self):
        self.reach_rules = [r if isinstance(r, ReachRule) else ReachRule(**r) for r in self.reach_rules]
        if min(self.w_h, self.w_p, self.w_r) < 0:
            raise ValueError("recommendation weights must be non-negative")
        if abs(self.w_h + self.w_p + self.w_r - 1.0) > 1e-9:
            raise ValueError(f"recommendation weights must sum to 1, got {self.w_h + self.w_p + self.w_r}")
        if not 0.0 <= self.r_explore < 1.0:
            raise ValueError("r_explore must lie in [0, 1)")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.N_c < 0 or self.history_window < 0:
            raise ValueError("N_c and history_window must be non-negative")

    @property
    def explore_slots(self) -> int:
        # rounded first so that e.g. 0.2 * 10 does not become 3 via 2.0000000000000004
        return math.ceil(round(self.r_explore * self.K, 9))

    @property
    def ranked_slots(self) -> int:
        return self.K - self.explore_slots

    def reach(self, post: Post) -> float:
        m = 1.0
        for rule in self.reach_rules:
            if rule.matches(post):
                m *= rule.multiplier
        return m

    def to_dict(self) -> dict:
        return asdict(self)


def score_components(user_embedding: np.ndarray, post: Post, now: float, max_engagement: float,
                     cfg: RecommendationConfig) -> Tuple[float, float, float]:
    h = (float(np.dot(user_embedding, post.embedding)) + 1.0) / 2.0
    v = post.engagement / max_engagement if max_engagement > 0 else 0.0
    v = min(1.0, v * cfg.reach(post))
    f = math.exp(-cfg.freshness_decay * max(0.0, now - post.t_pub))
    return min(1.0, max(0.0, h)), v, f


def combine(h: float, v: float, f: float, cfg: RecommendationConfig) -> float:
    return cfg.w_h * h + cfg.w_p * v + cfg.w_r * f


def score_candidate(user_embedding: np.ndarray, post: Post, now: float, cfg: RecommendationConfig,
                    max_engagement: float) -> float:
    return combine(*score_components(user_embedding, post, now, max_engagement, cfg), cfg)


class TrendingTracker:
    """Hashtag counts over a rolling window of steps."""

    def __init__(self, window: int = 36):
        self.window = window
        self.buckets: Deque[Counter] = deque([Counter()], maxlen=window)

    def record(self, hashtags: Sequence[str]) -> None:
        for h in hashtags:
            self.buckets[-1][h] += 1

    def roll(self) -> None:
        self.buckets.append(Counter())

    def counts(self) -> Counter:
        total: Counter = Counter()
        for b in self.buckets:
            total.update(b)
        return total

    def top(self, n: int) -> List[str]:
        return [h for h, _ in sorted(self.counts().items(), key=lambda kv: (-kv[1], kv[0]))[:n]]

    def to_dict(self) -> dict:
        return {"window": self.window, "buckets": [dict(sorted(b.items())) for b in self.buckets]}

    @classmethod
    def from_dict(cls, d: dict) -> "TrendingTracker":
        t = cls(d["window"])
        t.buckets = deque((Counter(b) for b in d["buckets"]), maxlen=d["window"])
        return t


class ExposureHistory:
    """The last `window` post ids shown to one user."""

    def __init__(self, window: int):
        self.window = window
        self.ids: Deque[str] = deque(maxlen=window) if window > 0 else deque(maxlen=0)
        self._count: Counter = Counter()

    def __contains__(self, post_id: str) -> bool:
        return self._count[post_id] > 0

    def extend(self, post_ids: Sequence[str]) -> None:
        for pid in post_ids:
            if self.window == 0:
                return
            if len(self.ids) == self.window:
                old = self.ids[0]
                self._count[old] -= 1
                if self._count[old] == 0:
                    del self._count[old]
            self.ids.append(pid)
            self._count[pid] += 1

    def to_list(self) -> List[str]:
        return list(self.ids)

    @classmethod
    def from_list(cls, window: int, ids: Sequence[str]) -> "ExposureHistory":
        h = cls(window)
        h.extend(ids)
        return h


@dataclass
class FeedItem:
    post: Post
    score: Optional[float]  # None for exploration picks
    channel: str  # "ranked", "explore" or "trending"
    comments: List[Post] = field(default_factory=list)


def candidate_posts(user: str, now: float, pool: ContentPool, graphs: SocialGraphs,
                    history: ExposureHistory, cfg: RecommendationConfig) -> List[Post]:
    """Relationship channel (followees' recent posts) united with the public channel."""
    cutoff = now - cfg.public_window
    followees = set(graphs.followees(user))
    recent = [p for p in pool.window(cutoff, now) if p.author_id != user and p.id not in history]
    relationship = [p for p in recent if p.author_id in followees]
    public = sorted(recent, key=lambda p: (-p.engagement, -p.t_pub, p.id))[: cfg.public_pool_size]
    seen: Set[str] = set()
    out = []
    for p in relationship + public:
        if p.id not in seen:
            seen.add(p.id)
            out.append(p)
    out.sort(key=lambda p: p.id)
    return out


def rank(user_embedding: np.ndarray, candidates: Sequence[Post], now: float, max_engagement: float,
         cfg: RecommendationConfig) -> List[Tuple[float, Post]]:
    """Score every candidate; order by score, then newer first, then id."""
    if not candidates:
        return []
    emb = np.stack([p.embedding for p in candidates])
    h = np.clip((emb @ np.asarray(user_embedding, dtype=float) + 1.0) / 2.0, 0.0, 1.0)
    eng = np.array([p.engagement for p in candidates])
    reach = np.array([cfg.reach(p) for p in candidates])
    v = np.minimum(1.0, (eng / max_engagement if max_engagement > 0 else np.zeros_like(eng)) * reach)
    age = np.maximum(0.0, now - np.array([p.t_pub for p in candidates]))
    f = np.exp(-cfg.freshness_decay * age)
    scores = cfg.w_h * h + cfg.w_p * v + cfg.w_r * f
    order = sorted(range(len(candidates)), key=lambda i: (-scores[i], -candidates[i].t_pub, candidates[i].id))
    return [(float(scores[i]), candidates[i]) for i in order]


def recommend(user: str, user_embedding: np.ndarray, now: float, pool: ContentPool, graphs: SocialGraphs,
              history: ExposureHistory, cfg: RecommendationConfig, rng: np.random.Generator,
              trending: Optional[List[str]] = None) -> List[FeedItem]:
    """Build one feed of at most K posts and record it in the exposure history.

    When `trending` is given (an injection step), exploration slots prefer
    posts carrying one of those hashtags.
    """
    candidates = candidate_posts(user, now, pool, graphs, history, cfg)
    if not candidates:
        return []
    ranked = rank(user_embedding, candidates, now, pool.max_engagement, cfg)
    n_ranked = min(cfg.ranked_slots, len(ranked))
    feed = [FeedItem(p, s, "ranked") for s, p in ranked[:n_ranked]]
    rest = [p for _, p in ranked[n_ranked:]]
    rest.sort(key=lambda p: p.id)
    n_explore = min(cfg.K - n_ranked, len(rest))
    if n_explore > 0:
        if trending:
            tags = set(trending)
            hot = [p for p in rest if tags.intersection(p.hashtags)]
            take = min(n_explore, len(hot))
            picks = [hot[int(i)] for i in rng.choice(len(hot), size=take, replace=False)] if take else []
            feed += [FeedItem(p, None, "trending") for p in picks]
            picked = {p.id for p in picks}
            rest = [p for p in rest if p.id not in picked]
            n_explore -= take
        if n_explore > 0:
            idx = rng.choice(len(rest), size=n_explore, replace=False)
            feed += [FeedItem(rest[int(i)], None, "explore") for i in idx]
    for item in feed:
        reply_ids = [r for r in pool.replies.get(item.post.id, []) if pool.get(r).t_pub <= now]
        if reply_ids and cfg.N_c > 0:
            if len(reply_ids) > cfg.N_c:
                chosen = sorted(int(i) for i in rng.choice(len(reply_ids), size=cfg.N_c, replace=False))
                reply_ids = [reply_ids[i] for i in chosen]
            item.comments = [pool.get(r) for r in reply_ids]
    history.extend([item.post.id for item in feed])
    return feed


def user_embedding(user: str, pool: ContentPool, fallback: np.ndarray) -> np.ndarray:
    v = pool.interest(user)
    return fallback if v is None else v

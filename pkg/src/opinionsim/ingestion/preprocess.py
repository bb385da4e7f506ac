"""Dataset cleaning: dedup, spam, relevance, length and activity filters."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

from ..cognition.beliefs import BARE_TYPES
from .schema import HistoricalPost, UserRecord


@dataclass
class FilterConfig:
    keywords: List[str] = field(default_factory=list)   # empty disables the relevance filter
    min_length: int = 5                                  # characters, content-bearing posts only
    blacklist: List[str] = field(default_factory=list)
    activity_threshold: int = 2
    window_start: Optional[str] = None
    window_end: Optional[str] = None


@dataclass
class Dataset:
    users: List[UserRecord]
    posts: List[HistoricalPost]

    def user_ids(self) -> List[str]:
        return [u.user_id for u in self.users]


@dataclass
class PreprocessSummary:
    users_in: int = 0
    posts_in: int = 0
    unparseable: int = 0
    duplicate_posts: int = 0
    duplicate_users: int = 0
    spam: int = 0
    too_short: int = 0
    irrelevant: int = 0
    out_of_window: int = 0
    unknown_author: int = 0
    low_activity_users: int = 0
    low_activity_posts: int = 0
    dangling_parents: int = 0
    users_out: int = 0
    posts_out: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _has_any(text: str, words: Sequence[str]) -> bool:
    t = text.lower()
    return any(w.lower() in t for w in words)


def _post_key(p: HistoricalPost) -> Tuple:
    return (p.time, p.post_id)


def _canonical(r) -> str:
    return json.dumps(r.to_dict(), sort_keys=True, default=str)


def preprocess(users: Sequence[UserRecord], posts: Sequence[HistoricalPost], filters: Optional[FilterConfig] = None,
               unparseable: int = 0) -> Tuple[Dataset, PreprocessSummary]:
    """Apply all filters in a fixed order; the output is sorted and idempotent under re-application."""
    f = filters or FilterConfig()
    s = PreprocessSummary(users_in=len(users), posts_in=len(posts), unparseable=unparseable)

    by_user: Dict[str, UserRecord] = {}
    # duplicates keep the canonically smallest record, so input order never matters
    for u in sorted(users, key=lambda u: (u.user_id, _canonical(u))):
        if u.user_id in by_user:
            s.duplicate_users += 1
            continue
        by_user[u.user_id] = u

    seen: Dict[str, HistoricalPost] = {}
    for p in sorted(posts, key=lambda p: (p.post_id, _canonical(p))):
        if p.post_id in seen:
            s.duplicate_posts += 1
            continue
        seen[p.post_id] = p

    start = datetime.fromisoformat(f.window_start) if f.window_start else None
    end = datetime.fromisoformat(f.window_end) if f.window_end else None
    kept: List[HistoricalPost] = []
    for p in sorted(seen.values(), key=_post_key):
        bare = p.kind in BARE_TYPES
        if p.user_id not in by_user:
            s.unknown_author += 1
        elif (start and p.time < start) or (end and p.time >= end):
            s.out_of_window += 1
        elif f.blacklist and _has_any(p.text, f.blacklist):
            s.spam += 1
        elif not bare and len(p.text.strip()) < f.min_length:
            s.too_short += 1
        elif f.keywords and not bare and not _has_any(p.text, f.keywords):
            s.irrelevant += 1
        else:
            kept.append(p)

    counts = Counter(p.user_id for p in kept)
    active = {u for u in by_user if counts[u] >= f.activity_threshold}
    s.low_activity_users = len(by_user) - len(active)
    s.low_activity_posts = sum(1 for p in kept if p.user_id not in active)
    kept = [p for p in kept if p.user_id in active]

    ids = {p.post_id for p in kept}
    out_posts = []
    for p in kept:
        if p.parent_id is not None and p.parent_id not in ids:
            s.dangling_parents += 1
            p = HistoricalPost(**{**p.to_dict(), "parent_id": None})
        out_posts.append(p)
    out_users = sorted((by_user[u] for u in active), key=lambda u: u.user_id)
    s.users_out, s.posts_out = len(out_users), len(out_posts)
    return Dataset(out_users, out_posts), s

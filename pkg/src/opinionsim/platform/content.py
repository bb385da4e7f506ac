"""Content pool, provenance, interaction graphs and the action log record."""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..cognition.beliefs import (
    ACTION_TYPES,
    COMMENT_TYPES,
    LIKE,
    ORIGINAL_TYPES,
    REPOST,
    REPOST_TYPES,
    ActionDraft,
)

INTEREST_WINDOW = 20


class PublishError(ValueError):
    pass


@dataclass
class Post:
    id: str
    author_id: str
    t_pub: float
    kind: str
    text: str
    embedding: np.ndarray
    hashtags: List[str] = field(default_factory=list)
    mentions: List[str] = field(default_factory=list)
    parent_id: Optional[str] = None
    root_id: str = ""
    likes: int = 0
    reposts: int = 0
    comments: int = 0
    duplicate_of: Optional[str] = None
    strategy: Optional[Dict[str, str]] = None

    @property
    def engagement(self) -> float:
        return self.likes + 2.0 * self.reposts + 2.0 * self.comments

    @property
    def is_comment(self) -> bool:
        return self.kind in COMMENT_TYPES

    def to_dict(self) -> dict:
        return {
            "id": self.id, "author_id": self.author_id, "t_pub": self.t_pub, "kind": self.kind,
            "text": self.text, "embedding": self.embedding.tolist(), "hashtags": list(self.hashtags),
            "mentions": list(self.mentions), "parent_id": self.parent_id, "root_id": self.root_id,
            "likes": self.likes, "reposts": self.reposts, "comments": self.comments,
            "duplicate_of": self.duplicate_of, "strategy": self.strategy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Post":
        d = dict(d)
        d["embedding"] = np.asarray(d["embedding"], dtype=float)
        return cls(**d)


@dataclass
class ActionRecord:
    """One executed atomic behaviour, as written to the action log."""

    step: int
    t: float
    agent_id: str
    action_type: str
    post_id: Optional[str]
    target_id: Optional[str]
    root_id: Optional[str]
    target_author: Optional[str] = None
    strategy: Optional[Dict[str, str]] = None
    text: str = ""
    hashtags: List[str] = field(default_factory=list)
    mentions: List[str] = field(default_factory=list)
    duplicate_of: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "step": self.step, "t": self.t, "agent_id": self.agent_id, "action_type": self.action_type,
            "post_id": self.post_id, "target_id": self.target_id, "root_id": self.root_id,
            "target_author": self.target_author, "strategy": self.strategy, "text": self.text,
            "hashtags": list(self.hashtags), "mentions": list(self.mentions), "duplicate_of": self.duplicate_of,
        }


class SocialGraphs:
    """Static follow graph plus growing repost and comment multigraphs."""

    def __init__(self, follow: Optional[nx.DiGraph] = None):
        self.follow = nx.DiGraph(follow) if follow is not None else nx.DiGraph()
        self.follow = nx.freeze(self.follow)
        self.repost = nx.MultiDiGraph()
        self.comment = nx.MultiDiGraph()

    def followees(self, user: str) -> List[str]:
        return list(self.follow.successors(user)) if user in self.follow else []

    def neighbors(self, user: str) -> set:
        """Union of in- and out-neighbours across all three graphs."""
        out = set()
        for g in (self.follow, self.repost, self.comment):
            if user in g:
                out.update(g.successors(user))
                out.update(g.predecessors(user))
        out.discard(user)
        return out

    def to_dict(self) -> dict:
        return {
            "follow": sorted([u, v] for u, v in self.follow.edges()),
            "follow_nodes": sorted(self.follow.nodes()),
            "repost": sorted([u, v] for u, v in self.repost.edges()),
            "comment": sorted([u, v] for u, v in self.comment.edges()),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SocialGraphs":
        g = nx.DiGraph()
        g.add_nodes_from(d.get("follow_nodes", []))
        g.add_edges_from(tuple(e) for e in d["follow"])
        sg = cls(g)
        sg.repost.add_edges_from(tuple(e) for e in d["repost"])
        sg.comment.add_edges_from(tuple(e) for e in d["comment"])
        return sg


def near_duplicate(candidate: np.ndarray, pool: "ContentPool", threshold: float) -> Optional[str]:
    """First (oldest) content post whose cosine similarity reaches `threshold`."""
    ids, mat = pool.content_matrix()
    if not ids:
        return None
    sims = mat @ np.asarray(candidate, dtype=float)
    hits = np.flatnonzero(sims >= threshold)
    return ids[int(hits[0])] if len(hits) else None


class ContentPool:
    def __init__(self, dedup_threshold: float = 0.95):
        self.dedup_threshold = dedup_threshold
        self.posts: Dict[str, Post] = {}
        self.replies: Dict[str, List[str]] = {}
        self.author_recent: Dict[str, Deque[np.ndarray]] = {}
        self.max_engagement = 0.0
        self._counter = 0
        self._content_ids: List[str] = []
        self._content_mat = np.zeros((0, 0))
        self._content_n = 0
        self._stream: List[Post] = []  # non-comment posts in publication order
        self._stream_t: List[float] = []

    def __len__(self) -> int:
        return len(self.posts)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self.posts

    def get(self, post_id: str) -> Post:
        return self.posts[post_id]

    def content_matrix(self) -> Tuple[List[str], np.ndarray]:
        return self._content_ids, self._content_mat[: self._content_n]

    def _index_content(self, post: Post) -> None:
        dim = len(post.embedding)
        if self._content_mat.shape[1] != dim:
            self._content_mat = np.zeros((64, dim))
        if self._content_n == len(self._content_mat):
            grown = np.zeros((2 * len(self._content_mat), dim))
            grown[: self._content_n] = self._content_mat
            self._content_mat = grown
        self._content_mat[self._content_n] = post.embedding
        self._content_n += 1
        self._content_ids.append(post.id)

    def next_id(self) -> str:
        self._counter += 1
        return f"p{self._counter:07d}"

    def add(self, post: Post, index: bool = True) -> Post:
        if post.id in self.posts:
            raise PublishError(f"duplicate post id {post.id}")
        if post.parent_id is not None and post.parent_id not in self.posts:
            raise PublishError(f"dangling parent {post.parent_id}")
        self.posts[post.id] = post
        if post.parent_id is not None and post.is_comment:
            self.replies.setdefault(post.parent_id, []).append(post.id)
        if not post.is_comment:
            self._append_stream(post)
        if index and post.kind != REPOST:
            self._index_content(post)
        self.author_recent.setdefault(post.author_id, deque(maxlen=INTEREST_WINDOW)).append(post.embedding)
        self.max_engagement = max(self.max_engagement, post.engagement)
        return post

    def _append_stream(self, post: Post) -> None:
        i = bisect.bisect_right(self._stream_t, post.t_pub)
        self._stream.insert(i, post)
        self._stream_t.insert(i, post.t_pub)

    def window(self, start: float, end: float) -> List[Post]:
        """Non-comment posts with start <= t_pub <= end, in publication order."""
        lo = bisect.bisect_left(self._stream_t, start)
        hi = bisect.bisect_right(self._stream_t, end)
        return self._stream[lo:hi]

    def bump(self, post: Post, likes: int = 0, reposts: int = 0, comments: int = 0) -> None:
        post.likes += likes
        post.reposts += reposts
        post.comments += comments
        self.max_engagement = max(self.max_engagement, post.engagement)

    def interest(self, author: str) -> Optional[np.ndarray]:
        recent = self.author_recent.get(author)
        if not recent:
            return None
        v = np.mean(np.stack(list(recent)), axis=0)
        n = np.linalg.norm(v)
        return v / n if n > 0 else None

    def chain(self, post_id: str) -> List[str]:
        """Ids from `post_id` up to its cascade root."""
        out = [post_id]
        while self.posts[out[-1]].parent_id is not None:
            out.append(self.posts[out[-1]].parent_id)
            if len(out) > len(self.posts):
                raise RuntimeError("cycle in provenance chain")
        return out

    def to_dict(self) -> dict:
        return {
            "dedup_threshold": self.dedup_threshold,
            "counter": self._counter,
            "posts": [p.to_dict() for p in self.posts.values()],
            "author_recent": {a: [v.tolist() for v in q] for a, q in self.author_recent.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContentPool":
        pool = cls(d["dedup_threshold"])
        for pd in d["posts"]:
            p = Post.from_dict(pd)
            pool.posts[p.id] = p
            if p.parent_id is not None and p.is_comment:
                pool.replies.setdefault(p.parent_id, []).append(p.id)
            if not p.is_comment:
                pool._append_stream(p)
            if p.kind != REPOST:
                pool._index_content(p)
            pool.max_engagement = max(pool.max_engagement, p.engagement)
        pool.author_recent = {a: deque((np.asarray(v) for v in q), maxlen=INTEREST_WINDOW)
                              for a, q in d["author_recent"].items()}
        pool._counter = d["counter"]
        return pool


def publish(draft: ActionDraft, author: str, now: float, pool: ContentPool, graphs: SocialGraphs,
            embed, step: int = 0, trending=None) -> ActionRecord:
    """Apply one validated draft to the pool and graphs; returns the action record."""
    kind = draft.action_type
    if kind not in ACTION_TYPES:
        raise PublishError(f"unknown action type {kind!r}")
    parent: Optional[Post] = None
    if kind not in ORIGINAL_TYPES:
        if draft.target_post_id is None or draft.target_post_id not in pool:
            raise PublishError(f"dangling parent {draft.target_post_id}")
        parent = pool.get(draft.target_post_id)

    if kind == LIKE:
        pool.bump(parent, likes=1)
        return ActionRecord(step, now, author, kind, None, parent.id, parent.root_id, parent.author_id)

    post_id = pool.next_id()
    if kind == REPOST:
        embedding = parent.embedding
        duplicate_of = None
    else:
        embedding = np.asarray(embed(draft.text), dtype=float)
        duplicate_of = near_duplicate(embedding, pool, pool.dedup_threshold)
    post = Post(
        id=post_id, author_id=author, t_pub=now, kind=kind, text=draft.text if kind != REPOST else "",
        embedding=embedding, hashtags=list(draft.hashtags), mentions=list(draft.mentions),
        parent_id=parent.id if parent else None, root_id=parent.root_id if parent else post_id,
        duplicate_of=duplicate_of, strategy=dict(draft.strategy) if draft.strategy else None,
    )
    pool.add(post)
    if parent is not None:
        if kind in REPOST_TYPES:
            pool.bump(parent, reposts=1)
            graphs.repost.add_edge(author, parent.author_id)
        elif kind in COMMENT_TYPES:
            pool.bump(parent, comments=1)
            graphs.comment.add_edge(author, parent.author_id)
    if trending is not None and duplicate_of is None:
        trending.record(post.hashtags)
    return ActionRecord(step, now, author, kind, post.id, post.parent_id, post.root_id,
                        parent.author_id if parent else None, post.strategy, post.text,
                        list(post.hashtags), list(post.mentions), duplicate_of)


def seed_posts(pool: ContentPool, graphs: SocialGraphs, items: Iterable[dict], embed) -> List[str]:
    """Load historical posts (already sorted by time) into the pool; unknown parents become originals."""
    ids = []
    for it in items:
        parent_id = it.get("parent_id")
        kind = it.get("kind", "short_post")
        if parent_id is not None and parent_id not in pool:
            parent_id, kind = None, "short_post"
        parent = pool.get(parent_id) if parent_id else None
        pid = it.get("id") or pool.next_id()
        text = it.get("text", "")
        emb = parent.embedding if (kind == REPOST and parent) else np.asarray(embed(text), dtype=float)
        post = Post(pid, it["author_id"], float(it["t_pub"]), kind, text if kind != REPOST else "", emb,
                    list(it.get("hashtags", [])), list(it.get("mentions", [])), parent_id,
                    parent.root_id if parent else pid)
        pool.add(post)
        if parent is not None:
            if kind in REPOST_TYPES:
                pool.bump(parent, reposts=1)
                graphs.repost.add_edge(post.author_id, parent.author_id)
            elif kind in COMMENT_TYPES:
                pool.bump(parent, comments=1)
                graphs.comment.add_edge(post.author_id, parent.author_id)
        ids.append(pid)
    return ids

"""Build an agent roster with full belief states from a cleaned dataset."""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..cognition.beliefs import AgentKind, BeliefState, OpinionEntry, dedupe_opinions
from ..cognition.emotion import EMOTIONS, EmotionVector
from ..cognition.memory import MemoryBank
from ..cognition.pipeline import Agent
from ..cognition.prompts import (IDENTITY_SUMMARY, OPINION_INTERVIEW, RETRY_SUFFIX, TRAIT_MATCHING, TemplateSet,
                                 default_templates, trait_pool)
from ..llm.gateway import GatewayError, UsageKind
from ..llm.jsonrepair import ResponseParseError, parse_json_object
from ..simulator.engine import Roster, stable_int, stream
from ..text import LexiconSentiment, load_lexicon
from .preprocess import Dataset
from .schema import HistoricalPost, UserRecord

_STREAM_INIT = 4
BASELINE_EMOTION = 0.1
INIT_USAGE = UsageKind.BELIEF_UPDATE

FLAG_DEFAULT_IDENTITY = "default_identity"
FLAG_DEFAULT_PSYCHOLOGY = "default_psychology"
FLAG_DEFAULT_OPINIONS = "default_opinions"
FLAG_EMPTY_HISTORY = "default_empty_history"


@dataclass
class InitConfig:
    event_background: str = ""
    t_start: Optional[str] = None      # posts before this are pre-event history
    follower_threshold: int = 100_000
    history_limit: int = 10            # most recent posts shown in prompts
    memory_capacity: int = 200
    threads: int = 1
    seed: int = 0


def assign_kind(user: UserRecord, follower_threshold: int = 100_000) -> AgentKind:
    """Hint first, then verification type, then follower count."""
    if user.agent_kind:
        return AgentKind(user.agent_kind)
    v = (user.verification_type or "").lower()
    if v == "government":
        return AgentKind.GOVERNMENT
    if v == "media":
        return AgentKind.MEDIA_ACCOUNT
    if user.follower_count >= follower_threshold:
        return AgentKind.OPINION_LEADER
    return AgentKind.ORDINARY_USER


def profile_text(user: UserRecord, kind: AgentKind) -> str:
    lines = [f"{kind.value.replace('_', ' ')} from {user.region or 'an unstated region'}",
             f"display_name: {user.display_name or user.user_id}",
             f"gender: {user.gender or 'unstated'}",
             f"verification: {user.verification_type or 'none'}",
             f"followers: {user.follower_count}",
             f"description: {user.description or 'none'}"]
    if user.interest_tags:
        lines.append("interests: " + ", ".join(user.interest_tags))
    return "\n".join(lines)


def history_text(posts: Sequence[HistoricalPost]) -> str:
    if not posts:
        return "none"
    return "\n".join(f"- [{p.timestamp}] ({p.kind}) {p.text}" for p in posts)


def initial_emotion(texts: Sequence[str], analyzer: Optional[LexiconSentiment] = None) -> EmotionVector:
    """Baseline 0.1 per dimension, raised by per-emotion cue shares and overall polarity."""
    if not texts:
        return EmotionVector.uniform(BASELINE_EMOTION)
    lex = load_lexicon("emotion_lexicon")
    joined = " ".join(texts).lower()
    hits = {k: sum(joined.count(w.lower()) for w in lex.get(k, [])) for k in EMOTIONS}
    total = sum(hits.values())
    vals = {k: BASELINE_EMOTION + (0.5 * hits[k] / total if total else 0.0) for k in EMOTIONS}
    analyzer = analyzer or LexiconSentiment()
    polarity = float(np.mean([2.0 * analyzer.score(t) - 1.0 for t in texts]))
    if polarity > 0:
        vals["happy"] += 0.3 * polarity
    else:
        vals["sad"] += 0.15 * -polarity
        vals["angry"] += 0.15 * -polarity
    return EmotionVector.from_dict(vals)


def _ask(gateway, prompt: str, rng: np.random.Generator) -> Optional[dict]:
    for attempt in range(2):
        try:
            raw = gateway.complete(INIT_USAGE, prompt if attempt == 0 else prompt + RETRY_SUFFIX, rng)
            return parse_json_object(raw)
        except ResponseParseError:
            continue
        except GatewayError:
            return None
    return None


def init_agent(user: UserRecord, history: Sequence[HistoricalPost], gateway, cfg: InitConfig,
               templates: TemplateSet) -> Agent:
    kind = assign_kind(user, cfg.follower_threshold)
    rng = stream(cfg.seed, _STREAM_INIT, stable_int(user.user_id))
    recent = list(history)[-cfg.history_limit:]
    hist = history_text(recent)
    prof = profile_text(user, kind)
    flags: List[str] = []

    reply = _ask(gateway, templates.render(IDENTITY_SUMMARY, profile_text=prof, history_text=hist), rng)
    identity = reply.get("identity") if reply else None
    if not isinstance(identity, str) or not identity.strip():
        identity = f"I am {user.display_name or user.user_id}, {prof.splitlines()[0]}."
        flags.append(FLAG_DEFAULT_IDENTITY)
    identity = identity.strip()

    pool = trait_pool()
    types = sorted(pool)
    reply = _ask(gateway, templates.render(TRAIT_MATCHING, identity_text=identity, history_text=hist,
                                           trait_types=", ".join(types)), rng)
    ptype = reply.get("psychological_type") if reply else None
    if ptype in pool:
        psychology = list(pool[ptype])
    else:
        psychology = []
        flags.append(FLAG_DEFAULT_PSYCHOLOGY)

    opinions: List[OpinionEntry] = []
    if not recent:
        flags.append(FLAG_EMPTY_HISTORY)
    else:
        role = templates.role(kind)
        reply = _ask(gateway, templates.render(OPINION_INTERVIEW, agent_role=role.get("agent_role", kind.value),
                                               event_background=cfg.event_background or "none",
                                               identity_text=identity, history_text=hist), rng)
        items = reply.get("event_opinions") if reply else None
        if isinstance(items, list):
            for it in items:
                if isinstance(it, dict) and it.get("subject") and it.get("opinion"):
                    opinions.append(OpinionEntry(0.0, str(it["subject"]), str(it["opinion"]),
                                                 str(it.get("reason", ""))))
            opinions = dedupe_opinions(opinions)
        else:
            flags.append(FLAG_DEFAULT_OPINIONS)

    emotion = initial_emotion([p.text for p in recent if p.text])
    beliefs = BeliefState(identity, psychology, opinions, emotion, 0.0, None)
    return Agent(user.user_id, kind, beliefs, MemoryBank(cfg.memory_capacity), user.to_dict(), flags=flags)


def _minutes(ts: str, origin: datetime) -> float:
    return (datetime.fromisoformat(ts) - origin).total_seconds() / 60.0


def derive_follow_edges(posts: Sequence[HistoricalPost],
                        explicit: Optional[Sequence[Tuple[str, str]]] = None) -> List[Tuple[str, str]]:
    """Explicit edges when given, else actor -> author for every historical repost or comment."""
    if explicit is not None:
        return sorted({(a, b) for a, b in explicit if a != b})
    author = {p.post_id: p.user_id for p in posts}
    edges = {(p.user_id, author[p.parent_id]) for p in posts
             if p.parent_id in author and author[p.parent_id] != p.user_id}
    return sorted(edges)


def initialize_agents(dataset: Dataset, gateway, cfg: Optional[InitConfig] = None,
                      templates: Optional[TemplateSet] = None,
                      follows: Optional[Sequence[Tuple[str, str]]] = None) -> Roster:
    """One agent per user, keyed and ordered by user_id regardless of input order."""
    cfg = cfg or InitConfig()
    templates = templates or default_templates()
    users = sorted(dataset.users, key=lambda u: u.user_id)
    posts = sorted(dataset.posts, key=lambda p: (p.time, p.post_id))
    origin = datetime.fromisoformat(cfg.t_start) if cfg.t_start else None
    pre = [p for p in posts if origin is None or p.time < origin]
    by_user: Dict[str, List[HistoricalPost]] = {u.user_id: [] for u in users}
    for p in pre:
        if p.user_id in by_user:
            by_user[p.user_id].append(p)

    def work(u: UserRecord) -> Agent:
        return init_agent(u, by_user[u.user_id], gateway, cfg, templates)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
            agents = list(ex.map(work, users))
    else:
        agents = [work(u) for u in users]

    activity = Counter(p.user_id for p in posts if p.user_id in by_user)
    seed_origin = origin or (posts[-1].time if posts else datetime.fromisoformat("2000-01-01T00:00:00"))
    seeds = [{"id": p.post_id, "author_id": p.user_id, "t_pub": _minutes(p.timestamp, seed_origin), "kind": p.kind,
              "text": p.text, "hashtags": list(p.hashtags), "parent_id": p.parent_id}
             for p in pre if p.user_id in by_user and p.kind != "like"]
    return Roster(agents, derive_follow_edges(posts, follows), {u.user_id: int(activity[u.user_id]) for u in users},
                  seeds, cfg.event_background)

"""Per-agent belief -> desire -> intention pipeline and memory bookkeeping."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..llm.gateway import GatewayError, UsageKind
from ..llm.jsonrepair import ResponseParseError, parse_json_object
from .beliefs import (
    BARE_TYPES,
    MAX_DESIRES,
    ORIGINAL_TYPES,
    STRATEGY_KEYS,
    ActionDraft,
    AgentKind,
    BeliefState,
    Desire,
    DesireSet,
    IntentionPlan,
    OpinionEntry,
    canonical_json,
    dedupe_opinions,
    normalize_action_type,
    normalize_intensity,
    normalize_label,
)
from .emotion import EMOTIONS, EmotionDynamicsConfig, EmotionVector, decay_emotion, stimulate_emotion
from .memory import ACTED, PERCEIVED, MemoryBank, MemoryConfig, MemoryEntry, retrieve_memories
from .prompts import ACTION_DECISION, BELIEF_UPDATE, DESIRE_GENERATION, RETRY_SUFFIX, TemplateSet

log = logging.getLogger(__name__)

PSYCHOLOGY_COOLDOWN = 1440.0  # minutes between accepted trait changes
MAX_ACTIONS = 10


@dataclass
class Agent:
    agent_id: str
    kind: AgentKind
    beliefs: BeliefState
    memory: MemoryBank
    profile: Dict[str, object] = field(default_factory=dict)
    seen_events: List[str] = field(default_factory=list)
    directives: List[str] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "kind": self.kind.value,
            "beliefs": self.beliefs.to_dict(),
            "memory": self.memory.to_dict(),
            "profile": self.profile,
            "seen_events": list(self.seen_events),
            "directives": list(self.directives),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Agent":
        return cls(d["agent_id"], AgentKind(d["kind"]), BeliefState.from_dict(d["beliefs"]),
                   MemoryBank.from_dict(d["memory"]), dict(d.get("profile", {})),
                   list(d.get("seen_events", [])), list(d.get("directives", [])), list(d.get("flags", [])))


@dataclass
class EventNotice:
    label: str
    payload: str


@dataclass
class FeedEntry:
    post_id: str
    author_id: str
    kind: str
    text: str
    hashtags: List[str] = field(default_factory=list)
    likes: int = 0
    reposts: int = 0
    comments: int = 0
    replies: List[Tuple[str, str]] = field(default_factory=list)  # (author, text)
    embedding: Optional[np.ndarray] = None


@dataclass
class Perception:
    now: float
    clock: str
    events: List[EventNotice] = field(default_factory=list)
    feed: List[FeedEntry] = field(default_factory=list)
    hot_topics: List[str] = field(default_factory=list)
    directives: List[str] = field(default_factory=list)

    def items(self) -> List[str]:
        """Perceived texts: directives and events first, then feed in rank order."""
        out = [f"[directive] {d}" for d in self.directives]
        out += [f"[{e.label}] {e.payload}" for e in self.events]
        out += [f.text for f in self.feed if f.text]
        return out


@dataclass
class CognitionContext:
    gateway: object  # anything exposing complete(usage, prompt, rng)
    embed: Callable[[str], np.ndarray]
    templates: TemplateSet
    emotion_cfg: EmotionDynamicsConfig = field(default_factory=EmotionDynamicsConfig)
    memory_cfg: MemoryConfig = field(default_factory=MemoryConfig)
    event_background: str = ""


@dataclass
class PipelineResult:
    beliefs: BeliefState
    desires: DesireSet
    plan: IntentionPlan
    trace: List[dict]
    degraded: int


# ---------------------------------------------------------------- rendering

def _events_text(p: Perception) -> str:
    lines = [f"- [directive] {d}" for d in p.directives]
    lines += [f"- [{e.label}] {e.payload}" for e in p.events]
    return "\n".join(lines) if lines else "none"


def _feed_text(p: Perception, indexed: bool = True) -> str:
    if not p.feed:
        return "none"
    lines = []
    for i, f in enumerate(p.feed, 1):
        head = f"[{i}]" if indexed else "-"
        tags = (" " + " ".join(f.hashtags)) if f.hashtags else ""
        lines.append(f"{head} @{f.author_id} ({f.kind}; likes {f.likes}, reposts {f.reposts}, "
                     f"comments {f.comments}): {f.text or '(repost)'}{tags}")
        for author, text in f.replies:
            lines.append(f"    reply @{author}: {text}")
    return "\n".join(lines)


def _memories_text(memories: Sequence[MemoryEntry]) -> str:
    if not memories:
        return "none"
    return "\n".join(f"- (t={m.t_m:g}, {m.kind}) {m.text}" for m in memories)


def _belief_json(b: BeliefState) -> str:
    return json.dumps(b.mutable_layers(), ensure_ascii=False, sort_keys=True)


def _role_values(ctx: CognitionContext, kind: AgentKind) -> dict:
    role = ctx.templates.role(kind)
    return {
        "agent_role": role["agent_role"],
        "event_background": ctx.event_background or "none",
        "cognitive_factors": "\n".join(f"- {c}" for c in role["cognitive_factors"]),
        "behavioral_characteristics": "\n".join(f"- {c}" for c in role["behavioral_characteristics"]),
        "expression_styles": ", ".join(role["expression_styles"]),
        "narrative_strategies": ", ".join(role["narrative_strategies"]),
        "desire_types": ", ".join(role["desire_types"]),
    }


def _ask(ctx: CognitionContext, usage: UsageKind, prompt: str, rng) -> Tuple[Optional[dict], Optional[str]]:
    """One call plus one repair retry. Returns (object, error)."""
    error = None
    for attempt in range(2):
        text = prompt if attempt == 0 else prompt + RETRY_SUFFIX
        try:
            reply = ctx.gateway.complete(usage, text, rng)
        except GatewayError as exc:
            return None, f"gateway: {exc}"
        try:
            return parse_json_object(reply), None
        except ResponseParseError as exc:
            error = f"parse: {exc}"
    return None, error


# ---------------------------------------------------------------- beliefs

def _string_list(value) -> Optional[List[str]]:
    if not isinstance(value, list):
        return None
    return [str(v).strip() for v in value if str(v).strip()]


def _emotion_from(value, fallback: EmotionVector) -> Optional[EmotionVector]:
    if not isinstance(value, dict):
        return None
    base = fallback.to_dict()
    vals = []
    for k in EMOTIONS:
        try:
            vals.append(float(value.get(k, base[k])))
        except (TypeError, ValueError):
            return None
    return EmotionVector(*vals)


def _merge_psychology(prior: BeliefState, proposed: List[str], now: float) -> Tuple[List[str], Optional[float]]:
    """Accept at most one trait change, and only once per cooldown window."""
    old = list(prior.psychology)
    if proposed == old:
        return old, prior.last_psychology_change
    last = prior.last_psychology_change
    if last is not None and now - last < PSYCHOLOGY_COOLDOWN:
        return old, last
    added = [t for t in proposed if t not in old]
    removed = [t for t in old if t not in proposed]
    if added and removed:
        new = [added[0] if t == removed[0] else t for t in old]
    elif added:
        new = old + [added[0]]
    elif removed:
        new = [t for t in old if t != removed[0]]
    else:
        return old, last  # reordering only
    return new, now


def _merge_opinions(prior: BeliefState, proposed, now: float) -> Optional[List[OpinionEntry]]:
    if not isinstance(proposed, list):
        return None
    previous = {(o.subject, o.opinion): o.t for o in prior.event_opinions}
    out = []
    for item in proposed:
        if not isinstance(item, dict) or "subject" not in item or "opinion" not in item:
            continue
        subject, opinion = str(item["subject"]), str(item["opinion"])
        t = previous.get((subject, opinion), now)
        out.append(OpinionEntry(t, subject, opinion, str(item.get("reason", ""))))
    return dedupe_opinions(out)


def update_beliefs(agent: Agent, perception: Perception, memories: Sequence[MemoryEntry],
                   ctx: CognitionContext, rng) -> Tuple[BeliefState, bool, Optional[str]]:
    """Returns (new beliefs, degraded, error). Identity is never touched."""
    prior = agent.beliefs
    now = perception.now
    decayed = prior.copy()
    decayed.emotion = decay_emotion(prior.emotion, max(0.0, now - prior.last_update), ctx.emotion_cfg)
    decayed.last_update = now

    values = _role_values(ctx, agent.kind)
    prompt = ctx.templates.render(
        BELIEF_UPDATE,
        agent_role=values["agent_role"], event_background=values["event_background"],
        current_time=perception.clock, identity_text=prior.identity, belief_text=_belief_json(decayed),
        new_info="\n".join(f"- {x}" for x in perception.items()) or "none",
        memories=_memories_text(memories), external_events=_events_text(perception),
        cognitive_factors=values["cognitive_factors"],
    )
    obj, error = _ask(ctx, UsageKind.BELIEF_UPDATE, prompt, rng)
    if obj is None:
        return decayed, True, error

    psychology = _string_list(obj.get("psychological_cognition"))
    opinions = _merge_opinions(prior, obj.get("event_opinions"), now)
    emotion = _emotion_from(obj.get("emotion_vector"), decayed.emotion)
    if psychology is None or opinions is None or emotion is None:
        return decayed, True, "schema: belief reply lacks a required layer"

    stimulus = obj.get("content_stimulus")
    if isinstance(stimulus, dict):
        try:
            s = [min(1.0, max(0.0, float(stimulus.get(k, 0.0)))) for k in EMOTIONS]
            emotion = stimulate_emotion(emotion, s, ctx.emotion_cfg)
        except (TypeError, ValueError):
            pass

    new = decayed
    new.psychology, new.last_psychology_change = _merge_psychology(prior, psychology, now)
    new.event_opinions = opinions
    new.emotion = emotion
    return new, False, None


# ---------------------------------------------------------------- desires

def generate_desires(agent: Agent, beliefs: BeliefState, perception: Perception, ctx: CognitionContext,
                     rng) -> Tuple[DesireSet, bool, Optional[str]]:
    values = _role_values(ctx, agent.kind)
    prompt = ctx.templates.render(
        DESIRE_GENERATION,
        agent_role=values["agent_role"], event_background=values["event_background"],
        current_time=perception.clock, belief_text=_belief_json(beliefs),
        exposed_info=_feed_text(perception, indexed=False), external_events=_events_text(perception),
        desire_types=values["desire_types"],
    )
    obj, error = _ask(ctx, UsageKind.DESIRE_GENERATION, prompt, rng)
    if obj is None:
        return DesireSet(), True, error
    raw = obj.get("desires")
    if not isinstance(raw, list):
        return DesireSet(), True, "schema: 'desires' is not a list"
    allowed = set(ctx.templates.desire_candidates(agent.kind))
    out: List[Desire] = []
    for item in raw:
        if not isinstance(item, dict):
            continue
        kind = normalize_label(item.get("type", ""))
        if kind not in allowed:
            log.warning("agent %s: dropping desire type %r outside the %s candidate set",
                        agent.agent_id, kind, agent.kind.value)
            continue
        intensity = normalize_intensity(item.get("intensity", "medium")) or "medium"
        out.append(Desire(kind, str(item.get("description", "")), intensity))
        if len(out) == MAX_DESIRES:
            break
    return DesireSet(out), False, None


# ---------------------------------------------------------------- intentions

def _hashtag(tag) -> Optional[str]:
    core = str(tag).strip().strip("#").strip()
    return f"#{core}#" if core else None


def _validate_action(item, feed: Sequence[FeedEntry]) -> Optional[ActionDraft]:
    if not isinstance(item, dict):
        return None
    action = normalize_action_type(item.get("action_type", ""))
    if action is None:
        return None
    target = None
    if action not in ORIGINAL_TYPES:
        try:
            idx = int(item.get("target_id"))
        except (TypeError, ValueError):
            return None
        if not 1 <= idx <= len(feed):
            return None
        target = feed[idx - 1].post_id
    if action in BARE_TYPES:
        return ActionDraft(action, target)
    raw = item.get("expression_strategy")
    strategy = {k: str(raw.get(k, "")) for k in STRATEGY_KEYS} if isinstance(raw, dict) else {k: "" for k in STRATEGY_KEYS}
    content = item.get("content")
    if isinstance(content, str):
        content = {"text": content}
    if not isinstance(content, dict):
        return None
    text = str(content.get("text", "")).strip()
    if not text:
        return None
    tags = [t for t in (_hashtag(x) for x in content.get("topics", []) or []) if t]
    mentions = [str(m).strip().lstrip("@") for m in content.get("mentions", []) or [] if str(m).strip("@ ")]
    return ActionDraft(action, target, strategy, text, tags, mentions)


def plan_intentions(agent: Agent, beliefs: BeliefState, desires: DesireSet, perception: Perception,
                    ctx: CognitionContext, rng) -> Tuple[IntentionPlan, bool, Optional[str]]:
    if not desires and not perception.directives:
        return IntentionPlan(), False, None
    values = _role_values(ctx, agent.kind)
    prompt = ctx.templates.render(
        ACTION_DECISION,
        agent_role=values["agent_role"], event_background=values["event_background"],
        behavioral_characteristics=values["behavioral_characteristics"], current_time=perception.clock,
        belief_text=_belief_json(beliefs), desires=json.dumps(desires.to_dict(), ensure_ascii=False),
        exposed_posts=_feed_text(perception), hot_topics=", ".join(perception.hot_topics) or "none",
        external_events=_events_text(perception), expression_styles=values["expression_styles"],
        narrative_strategies=values["narrative_strategies"],
    )
    obj, error = _ask(ctx, UsageKind.ACTION_DECISION, prompt, rng)
    if obj is None:
        return IntentionPlan(), True, error
    raw = obj.get("actions")
    if not isinstance(raw, list):
        return IntentionPlan(), True, "schema: 'actions' is not a list"
    drafts = [d for d in (_validate_action(item, perception.feed) for item in raw) if d is not None]
    return IntentionPlan(drafts[:MAX_ACTIONS]), False, None


# ---------------------------------------------------------------- memory

def store_memory(agent: Agent, entry: MemoryEntry) -> None:
    agent.memory.store(entry)


def _query_text(perception: Perception) -> str:
    return " ".join(perception.items()[:12])


def run_pipeline(agent: Agent, perception: Perception, ctx: CognitionContext, rng,
                 step: Optional[int] = None) -> PipelineResult:
    """Belief update, desire generation, intention planning, then memory store.

    Mutates `agent` (beliefs, memory, seen directives) and returns the plan
    together with the ordered trace records.
    """
    now = perception.now
    query = ctx.embed(_query_text(perception))
    memories = retrieve_memories(agent.memory, query, now, ctx.memory_cfg)
    trace: List[dict] = []
    base = {"step": step, "t": now, "agent": agent.agent_id}

    beliefs, deg_b, err_b = update_beliefs(agent, perception, memories, ctx, rng)
    agent.beliefs = beliefs
    trace.append({**base, "phase": "belief", "degraded": deg_b, "error": err_b,
                  "emotion": beliefs.emotion.to_dict(), "opinions": len(beliefs.event_opinions)})

    desires, deg_d, err_d = generate_desires(agent, beliefs, perception, ctx, rng)
    trace.append({**base, "phase": "desire", "degraded": deg_d, "error": err_d,
                  "desires": [d.to_dict() for d in desires.entries]})

    plan, deg_i, err_i = plan_intentions(agent, beliefs, desires, perception, ctx, rng)
    trace.append({**base, "phase": "intention", "degraded": deg_i, "error": err_i,
                  "actions": [a.action_type for a in plan.actions]})

    for text in perception.items():
        store_memory(agent, MemoryEntry(now, text, ctx.embed(text), PERCEIVED))
    for draft in plan.actions:
        label = draft.text or f"{draft.action_type} {draft.target_post_id}"
        store_memory(agent, MemoryEntry(now, label, ctx.embed(label), ACTED))
    agent.directives = []
    return PipelineResult(beliefs, desires, plan, trace, int(deg_b) + int(deg_d) + int(deg_i))


__all__ = [
    "Agent", "EventNotice", "FeedEntry", "Perception", "CognitionContext", "PipelineResult",
    "update_beliefs", "generate_desires", "plan_intentions", "store_memory", "run_pipeline",
    "canonical_json", "PSYCHOLOGY_COOLDOWN", "MAX_ACTIONS",
]

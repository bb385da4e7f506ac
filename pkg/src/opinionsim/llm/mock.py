"""Deterministic stand-in for chat endpoints.

A script maps (usage, prompt, rng) to a reply. `MockBackend` seeds that rng
from a hash of the script seed, the usage kind, the prompt and the realized
sampling parameters, so replies are a pure function of their inputs.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .gateway import BackendReply, EndpointSpec, UsageKind
from .jsonrepair import first_balanced_object

_HEADER_END = re.compile(r"^(#|\[(?=[A-Za-z])|- (?:Styles|Narratives)|Desire Types|Please consider|Output |Determine |L\d:|Interview question)", re.M)

EMOTION_KEYS = ("happy", "sad", "angry", "fear", "surprise", "disgust")
STRATEGY_EMOTION = {"happy": "joy", "sad": "sadness", "angry": "anger", "fear": "fear",
                    "surprise": "surprise", "disgust": "disgust"}

# Stimulus cue words per emotion, English plus a few common Chinese forms.
CUE_WORDS = {
    "happy": ("glad", "great", "happy", "support", "thanks", "good", "开心", "支持", "点赞"),
    "sad": ("sad", "sorry", "pity", "heartbroken", "tragic", "难过", "心疼", "可惜"),
    "angry": ("outrage", "angry", "disgrace", "shameless", "scandal", "cover-up", "lies", "愤怒", "无耻", "气愤"),
    "fear": ("unsafe", "afraid", "danger", "risk", "scary", "worried", "害怕", "担心", "危险"),
    "surprise": ("shocking", "unbelievable", "breaking", "suddenly", "leaked", "震惊", "没想到", "突发"),
    "disgust": ("disgusting", "gross", "filthy", "sickening", "恶心", "呕", "肮脏"),
}
_CALMING_TRAITS = ("rational", "multiple perspectives", "evidence", "calm", "regulate", "manage my emotions",
                   "verify", "理性", "冷静")
_EMPATHY_TRAITS = ("empath", "understand", "their position", "feel for", "共情", "理解")


def section(prompt: str, header: str) -> str:
    """Text following `header:` up to the next structural line of the prompt."""
    idx = prompt.find(header)
    if idx < 0:
        return ""
    start = idx + len(header)
    line_end = prompt.find("\n", start)
    line_end = len(prompt) if line_end < 0 else line_end
    colon = prompt.find(":", idx + len(header) - 1, line_end)
    if colon >= 0:
        start = colon + 1
    m = _HEADER_END.search(prompt, start + 1)
    end = m.start() if m else len(prompt)
    return prompt[start:end].strip()


def embedded_json(text: str) -> Optional[dict]:
    raw = first_balanced_object(text or "")
    if raw is None:
        return None
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError:
        return None
    return obj if isinstance(obj, dict) else None


def _dominant(emotion: Dict[str, float]) -> str:
    return max(EMOTION_KEYS, key=lambda k: (float(emotion.get(k, 0.0)), -EMOTION_KEYS.index(k)))


def _intensity_label(x: float) -> str:
    if x < 0.2:
        return "very_low"
    if x < 0.4:
        return "low"
    if x < 0.6:
        return "medium"
    if x < 0.8:
        return "high"
    return "very_high"


def _csv_list(text: str) -> List[str]:
    return [t.strip() for t in re.split(r"[,\n]", text) if t.strip() and t.strip().lower() != "none"]


Script = Callable[[UsageKind, str, np.random.Generator], str]


def echo_script(usage: UsageKind, prompt: str, rng: np.random.Generator) -> str:
    """Return the prior belief verbatim; desire and action calls come back empty."""
    usage = UsageKind(usage)
    if usage is UsageKind.BELIEF_UPDATE:
        prior = embedded_json(section(prompt, "### My Previous Belief State"))
        if prior is not None:
            return json.dumps(prior, ensure_ascii=False, sort_keys=True)
        return "{}"
    if usage is UsageKind.DESIRE_GENERATION:
        return json.dumps({"desires": []})
    return json.dumps({"actions": []})


class ScriptedSequence:
    """Replay fixed replies per usage kind, cycling when exhausted."""

    def __init__(self, replies: Dict[str, Sequence[Union[str, dict]]], fallback: Optional[Script] = None):
        self.replies = {UsageKind(k).value: [r if isinstance(r, str) else json.dumps(r, ensure_ascii=False)
                                             for r in v] for k, v in replies.items()}
        self.fallback = fallback or echo_script
        self._idx: Dict[str, int] = {}
        self._lock = threading.Lock()

    def __call__(self, usage: UsageKind, prompt: str, rng: np.random.Generator) -> str:
        usage = UsageKind(usage)
        seq = self.replies.get(usage.value)
        if not seq:
            return self.fallback(usage, prompt, rng)
        with self._lock:
            i = self._idx.get(usage.value, 0)
            self._idx[usage.value] = i + 1
        return seq[i % len(seq)]


class MalformedInjector:
    """Wrap a script and corrupt the replies for chosen usage kinds.

    `count=None` corrupts every call; otherwise only the first `count` calls.
    """

    def __init__(self, inner: Script, usages: Sequence[str], count: Optional[int] = None,
                 garbage: str = "Sorry, I cannot answer that in JSON {not json"):
        self.inner = inner
        self.usages = {UsageKind(u).value for u in usages}
        self.count = count
        self.garbage = garbage
        self.injected = 0
        self._lock = threading.Lock()

    def __call__(self, usage: UsageKind, prompt: str, rng: np.random.Generator) -> str:
        usage = UsageKind(usage)
        if usage.value in self.usages:
            with self._lock:
                if self.count is None or self.injected < self.count:
                    self.injected += 1
                    return self.garbage
        return self.inner(usage, prompt, rng)


ACTION_WEIGHTS = {
    "like": 0.28, "repost": 0.14, "repost_with_comment": 0.14, "short_comment": 0.22,
    "long_comment": 0.06, "short_post": 0.11, "long_post": 0.05,
}

_PHRASES = {
    "anger": ["this is outrageous", "what a disgrace", "shameless behaviour", "they think we are fools",
              "enough with the lies", "who gave them the right", "absolutely unacceptable"],
    "sadness": ["this is heartbreaking", "so sad to see this", "I feel sorry for everyone involved",
                "what a pity", "it hurts to read this"],
    "joy": ["glad someone finally spoke up", "good news at last", "thanks for sharing this", "great point"],
    "fear": ["this is really worrying", "is anyone safe anymore", "I am afraid this will happen again",
             "scary to think about"],
    "surprise": ["unbelievable", "I did not see that coming", "wait, is this real", "shocking twist"],
    "disgust": ["disgusting", "makes me sick", "gross and cynical", "what a filthy move"],
}
_RATIONAL = ["according to the evidence", "we should wait for the investigation", "looking at the facts",
             "from multiple perspectives", "the data suggests", "let us verify the source first"]
_IRRATIONAL = ["obviously they are lying", "everyone knows the truth", "they must be punished", "typical elites",
               "no need for evidence", "wake up people"]
_FILLER = ["today", "again", "honestly", "really", "the whole thing", "this story", "people", "online",
           "the company", "the officials", "the public", "this week", "everyone", "the statement",
           "the video", "the report", "the comments", "the timeline", "our money", "the truth"]


class PersonaScript:
    """Seeded stochastic persona driven by cues in the rendered prompts.

    Belief replies echo the prior layers and report a content stimulus derived
    from cue words and fresh external events; traits mentioning rational or
    calming dispositions damp negative stimuli. Desire and action replies
    scale with arousal, and fresh external events trigger extra actions.
    """

    def __init__(self, lurk_base: float = 0.35, event_boost: int = 2):
        self.lurk_base = lurk_base
        self.event_boost = event_boost

    def __call__(self, usage: UsageKind, prompt: str, rng: np.random.Generator) -> str:
        usage = UsageKind(usage)
        if "## Belief State Inference" in prompt:
            return self.belief(prompt, rng)
        if "## Desire Reasoning" in prompt:
            return self.desires(prompt, rng)
        if "## Action-Intention Decision" in prompt:
            return self.actions(prompt, rng)
        return self.init_reply(prompt, rng)

    @staticmethod
    def _fresh_events(prompt: str) -> bool:
        ev = section(prompt, "### External Events")
        return bool(ev) and ev.lower() != "none"

    def belief(self, prompt: str, rng: np.random.Generator) -> str:
        prior = embedded_json(section(prompt, "### My Previous Belief State")) or {}
        traits = " ".join(prior.get("psychological_cognition", [])).lower()
        info = (section(prompt, "### Newly Received Information") + " "
                + section(prompt, "### External Events")).lower()
        stim = {k: 0.0 for k in EMOTION_KEYS}
        for k, words in CUE_WORDS.items():
            hits = sum(info.count(w) for w in words)
            stim[k] = min(1.0, 0.08 * hits)
        if self._fresh_events(prompt):
            stim["angry"] += 0.5 * rng.uniform(0.5, 1.0)
            stim["surprise"] += 0.4 * rng.uniform(0.5, 1.0)
            stim["disgust"] += 0.2 * rng.uniform(0.5, 1.0)
        for k in EMOTION_KEYS:
            stim[k] += 0.05 * rng.random()
        if any(t in traits for t in _CALMING_TRAITS):
            for k in ("sad", "angry", "fear", "disgust"):
                stim[k] *= 0.3
        if any(t in traits for t in _EMPATHY_TRAITS):
            for k in ("sad", "fear"):
                stim[k] = stim[k] * 1.5 + 0.1
        stim = {k: round(min(1.0, max(0.0, v)), 4) for k, v in stim.items()}
        opinions = list(prior.get("event_opinions", []))
        labels = re.findall(r"^- \[([^\]]+)\]", section(prompt, "### External Events"), re.M)
        known = {o.get("subject") for o in opinions}
        for label in labels:
            if label not in known and rng.random() < 0.5:
                stance = "critical of" if stim["angry"] >= stim["happy"] else "supportive of"
                opinions.append({"subject": label, "opinion": f"{stance} {label}",
                                 "reason": "reaction to the latest news"})
        reply = {
            "psychological_cognition": prior.get("psychological_cognition", []),
            "event_opinions": opinions,
            "emotion_vector": prior.get("emotion_vector", {k: 0.0 for k in EMOTION_KEYS}),
            "content_stimulus": stim,
        }
        return json.dumps(reply, ensure_ascii=False)

    def desires(self, prompt: str, rng: np.random.Generator) -> str:
        belief = embedded_json(section(prompt, "### My Current Belief State")) or {}
        emotion = belief.get("emotion_vector", {})
        arousal = max(float(emotion.get(k, 0.0)) for k in ("angry", "surprise", "fear")) if emotion else 0.0
        candidates = _csv_list(section(prompt, "Desire Types"))
        fresh = self._fresh_events(prompt)
        lurk = max(0.05, self.lurk_base - 0.3 * arousal - (0.2 if fresh else 0.0))
        if not candidates or rng.random() < lurk:
            return json.dumps({"desires": []})
        n = int(rng.integers(1, min(3, len(candidates)) + 1))
        weights = np.ones(len(candidates))
        for i, c in enumerate(candidates):
            if c == "emotional_venting":
                weights[i] += 3.0 * arousal
            elif c == "information_seeking" and fresh:
                weights[i] += 1.0
        picks = rng.choice(len(candidates), size=n, replace=False, p=weights / weights.sum())
        out = []
        for i in sorted(int(p) for p in picks):
            level = _intensity_label(min(0.99, 0.3 + 0.7 * arousal * rng.uniform(0.6, 1.2)))
            out.append({"type": candidates[i], "description": f"I want {candidates[i].replace('_', ' ')}",
                        "intensity": level})
        return json.dumps({"desires": out}, ensure_ascii=False)

    def actions(self, prompt: str, rng: np.random.Generator) -> str:
        desires = (embedded_json(section(prompt, "### My Current Desires")) or {}).get("desires", [])
        if not desires:
            return json.dumps({"actions": []})
        belief = embedded_json(section(prompt, "### My Current Beliefs")) or {}
        emotion = belief.get("emotion_vector", {k: 0.0 for k in EMOTION_KEYS})
        n_posts = len(re.findall(r"^\[(\d+)\]", section(prompt, "### Available Posts (indexed)"), re.M))
        styles = _csv_list(section(prompt, "- Styles"))
        narratives = _csv_list(section(prompt, "- Narratives"))
        hot = re.findall(r"#[^#\s]+#", section(prompt, "### Hot Topics"))
        events = re.findall(r"^- \[([^\]]+)\]", section(prompt, "### External Events"), re.M)
        top_weight = max({"very_low": 0.1, "low": 0.3, "medium": 0.5, "high": 0.7, "very_high": 0.9}
                         .get(d.get("intensity"), 0.5) for d in desires)
        k = 1 + int(rng.random() < 0.3 * top_weight)
        if events:
            k += self.event_boost
        types = list(ACTION_WEIGHTS)
        w = np.array([ACTION_WEIGHTS[t] for t in types])
        if n_posts == 0:
            mask = np.array([t in ("short_post", "long_post") for t in types], dtype=float)
            w = w * mask
        w = w / w.sum()
        dom = _dominant(emotion)
        actions = []
        for _ in range(k):
            a = types[int(rng.choice(len(types), p=w))]
            if a in ("short_post", "long_post"):
                target = 0
            else:
                ranks = np.arange(1, n_posts + 1, dtype=float)
                target = int(rng.choice(ranks.astype(int), p=(1 / ranks) / (1 / ranks).sum()))
            entry = {"action_type": a, "target_id": target}
            if a not in ("like", "repost"):
                emo = dom if rng.random() < 0.8 else EMOTION_KEYS[int(rng.integers(0, 6))]
                label = STRATEGY_EMOTION[emo]
                level = _intensity_label(min(0.99, float(emotion.get(emo, 0.0)) + 0.2 * rng.random()))
                stance = "oppose" if emo in ("angry", "disgust", "sad", "fear") else "support"
                if rng.random() < 0.2:
                    stance = "neutral"
                entry["expression_strategy"] = {
                    "emotion_type": label, "emotion_intensity": level,
                    "stance": stance, "stance_intensity": _intensity_label(rng.random()),
                    "style": styles[int(rng.integers(0, len(styles)))] if styles else "plain",
                    "narrative": narratives[int(rng.integers(0, len(narratives)))] if narratives else "statement",
                }
                tags = []
                if hot and rng.random() < 0.6:
                    tags.append(hot[int(rng.integers(0, len(hot)))])
                if events and rng.random() < 0.7:
                    tags.append("#" + events[-1].replace(" ", "") + "#")
                entry["content"] = {"text": self._text(a, label, emotion, rng), "topics": tags, "mentions": []}
            actions.append(entry)
        return json.dumps({"actions": actions}, ensure_ascii=False)

    @staticmethod
    def _text(action: str, label: str, emotion: Dict[str, float], rng: np.random.Generator) -> str:
        long_form = action in ("long_comment", "long_post")
        n = int(rng.integers(3, 6)) if long_form else int(rng.integers(1, 3))
        arousal = max(float(emotion.get(k, 0.0)) for k in ("angry", "fear", "surprise"))
        parts = []
        for _ in range(n):
            bank = _PHRASES[label]
            parts.append(bank[int(rng.integers(0, len(bank)))])
            if rng.random() < 0.5:
                parts.append(_FILLER[int(rng.integers(0, len(_FILLER)))])
            pool = _IRRATIONAL if rng.random() < 0.3 + 0.6 * arousal else _RATIONAL
            if rng.random() < 0.5:
                parts.append(pool[int(rng.integers(0, len(pool)))])
        return ", ".join(parts)

    def init_reply(self, prompt: str, rng: np.random.Generator) -> str:
        if "Candidate Psychological Types" in prompt:
            types = _csv_list(section(prompt, "## Candidate Psychological Types"))
            pick = types[int(rng.integers(0, len(types)))] if types else ""
            return json.dumps({"psychological_type": pick})
        if "Interview question" in prompt:
            history = section(prompt, "## My Posts Before the Event")
            if not history or history.lower() == "none":
                return json.dumps({"event_opinions": []})
            return json.dumps({"event_opinions": [{"subject": "the event", "opinion": "following it closely",
                                                   "reason": "based on my earlier posts"}]})
        profile = section(prompt, "## Profile")
        name = re.search(r"display_name: (.*)", profile)
        who = name.group(1).strip() if name else "a Weibo user"
        return json.dumps({"identity": f"I am {who}, {profile.splitlines()[0] if profile else 'a regular user'}."},
                          ensure_ascii=False)


class MockBackend:
    """Backend whose replies are a pure function of (seed, usage, prompt, sampling)."""

    def __init__(self, script: Optional[Script] = None, seed: int = 0):
        self.script = script or PersonaScript()
        self.seed = int(seed)

    def _rng(self, usage: UsageKind, prompt: str, sampling: Dict[str, float]) -> np.random.Generator:
        h = hashlib.sha256()
        h.update(str(self.seed).encode())
        h.update(UsageKind(usage).value.encode())
        h.update(prompt.encode("utf-8"))
        h.update(json.dumps(sampling, sort_keys=True).encode())
        return np.random.default_rng(int.from_bytes(h.digest()[:16], "little"))

    def send(self, endpoint: EndpointSpec, payload: dict, usage: UsageKind) -> BackendReply:
        prompt = payload["messages"][-1]["content"]
        sampling = {k: payload[k] for k in ("temperature", "top_p", "frequency_penalty", "presence_penalty")}
        text = self.script(UsageKind(usage), prompt, self._rng(usage, prompt, sampling))
        return BackendReply(text, latency_ms=0.0)


def mock_complete(usage: UsageKind, prompt: str, script: Optional[Script] = None, rng_seed: int = 0) -> str:
    """One-shot mock completion without a pool (no sampling jitter)."""
    backend = MockBackend(script, rng_seed)
    sampling = {"temperature": 0.0, "top_p": 1.0, "frequency_penalty": 0.0, "presence_penalty": 0.0}
    payload = {"messages": [{"role": "user", "content": prompt}], **sampling}
    return backend.send(EndpointSpec("mock://", "mock"), payload, usage).text


def mock_pool(script: Optional[Script] = None, seed: int = 0, n_endpoints: int = 1, **kwargs):
    from .gateway import EndpointPool

    endpoints = [EndpointSpec(f"mock://{i}", "mock-model", name=f"mock-{i}", max_concurrent=64,
                              requests_per_minute=10 ** 9) for i in range(n_endpoints)]
    return EndpointPool(endpoints, MockBackend(script, seed), **kwargs)

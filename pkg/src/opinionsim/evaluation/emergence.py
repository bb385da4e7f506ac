"""Emergent-phenomenon measures: polarization index and emotion-arousal statistics."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..cognition.beliefs import COMMENT_TYPES, INTENSITY_VALUES, REPOST_COMMENT
from .logs import EMOTION_CATEGORIES, Act, normalize_emotion

HIGH_AROUSAL = ("anger", "surprise", "fear")
LOW_AROUSAL = ("sadness", "happiness", "disgust")
NEGATIVE = ("anger", "sadness", "fear", "disgust")
POLARITY = {"happiness": "positive", "anger": "negative", "sadness": "negative", "fear": "negative",
            "disgust": "negative", "surprise": "neutral"}


def polarization_index(labels: Sequence[str], categories: Sequence[str] = EMOTION_CATEGORIES) -> Optional[float]:
    """1 - H/ln(k) over the category distribution of one window."""
    if not labels:
        return None
    counts = Counter(labels)
    n = len(labels)
    h = -sum((c / n) * math.log(c / n) for c in counts.values() if c > 0)
    return max(0.0, min(1.0, 1.0 - h / math.log(len(categories))))


def polarization_from_distribution(p: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    h = float(-np.sum(nz * np.log(nz)))
    return max(0.0, min(1.0, 1.0 - h / math.log(len(p))))


@dataclass
class PIPoint:
    window: int
    t_start: float
    n: int
    pi: Optional[float]
    lo: Optional[float] = None
    hi: Optional[float] = None


def windowed_labels(acts: Iterable[Act], width: float, start: float = 0.0) -> Dict[int, List[str]]:
    out: Dict[int, List[str]] = defaultdict(list)
    for a in acts:
        if a.emotion is not None and a.t >= start:
            out[int((a.t - start) // width)].append(a.emotion)
    return {k: sorted(v) for k, v in sorted(out.items())}


def pi_series(acts: Sequence[Act], width: float, n_boot: int = 200, seed: int = 0,
              confidence: float = 0.95, n_windows: Optional[int] = None) -> List[PIPoint]:
    """Per-window PI with a percentile bootstrap band; windows without labels are absent points."""
    labels = windowed_labels(acts, width)
    last = max(labels) if labels else -1
    total = n_windows if n_windows is not None else last + 1
    rng = np.random.default_rng(seed)
    out = []
    for w in range(total):
        lab = labels.get(w, [])
        if not lab:
            out.append(PIPoint(w, w * width, 0, None))
            continue
        arr = np.array(lab)
        boots = [polarization_index(list(arr[rng.integers(0, len(arr), len(arr))])) for _ in range(n_boot)]
        q = (1.0 - confidence) / 2.0
        out.append(PIPoint(w, w * width, len(lab), polarization_index(lab),
                           float(np.quantile(boots, q)), float(np.quantile(boots, 1.0 - q))))
    return out


def ols_slope(y: Sequence[float], x: Optional[Sequence[float]] = None) -> float:
    y = np.asarray(y, dtype=float)
    x = np.arange(len(y), dtype=float) if x is None else np.asarray(x, dtype=float)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def arousal_metrics(acts: Sequence[Act], width: float, high: Sequence[str] = HIGH_AROUSAL,
                    low: Sequence[str] = LOW_AROUSAL) -> Dict[str, Optional[float]]:
    labelled = [a for a in acts if a.emotion is not None]
    high, low = set(high), set(low)
    out: Dict[str, Optional[float]] = {"trend_beta": None, "high_arousal_ratio": None, "intensity_ratio": None,
                                       "chain_consistency": None, "escalation_ratio": None}
    if not labelled:
        return out
    windows = windowed_labels(labelled, width)
    xs = sorted(windows)
    props = [sum(l in high for l in windows[w]) / len(windows[w]) for w in xs]
    if len(xs) >= 3:
        out["trend_beta"] = ols_slope(props, xs)
    out["high_arousal_ratio"] = sum(a.emotion in high for a in labelled) / len(labelled)

    hi_int = [a.intensity for a in labelled if a.emotion in high and a.intensity is not None]
    lo_int = [a.intensity for a in labelled if a.emotion in low and a.intensity is not None]
    if hi_int and lo_int and np.mean(lo_int) > 0:
        out["intensity_ratio"] = float(np.mean(hi_int) / np.mean(lo_int))

    by_post = {a.post_id: a for a in labelled if a.post_id is not None}
    pairs = [(a, by_post[a.parent_id]) for a in labelled
             if (a.kind in COMMENT_TYPES or a.kind == REPOST_COMMENT) and a.parent_id in by_post]
    if pairs:
        same = sum(POLARITY.get(c.emotion) == POLARITY.get(p.emotion) for c, p in pairs)
        out["chain_consistency"] = same / len(pairs)

    up = down = 0
    per_agent: Dict[str, List[Act]] = defaultdict(list)
    for a in labelled:
        per_agent[a.agent].append(a)
    for seq in per_agent.values():
        for prev, cur in zip(seq, seq[1:]):
            if prev.emotion in low and cur.emotion in high:
                up += 1
            elif prev.emotion in high and cur.emotion in low:
                down += 1
    if down > 0:
        out["escalation_ratio"] = up / down
    return out


def emotion_outcomes(actions: Sequence[dict], since_step: Optional[int] = None) -> Dict[str, Optional[float]]:
    """Negative-emotion ratio, anger ratio and mean expressed intensity over an action log."""
    labels, intensities = [], []
    for r in actions:
        if since_step is not None and r.get("step", 0) < since_step:
            continue
        s = r.get("strategy")
        if not isinstance(s, dict):
            continue
        emo = normalize_emotion(s.get("emotion_type"))
        if emo is None:
            continue
        labels.append(emo)
        v = INTENSITY_VALUES.get(str(s.get("emotion_intensity", "")).lower())
        if v is not None:
            intensities.append(v)
    if not labels:
        return {"negative_emotion_ratio": None, "anger_ratio": None, "emotion_intensity": None, "n": 0}
    return {
        "negative_emotion_ratio": sum(l in NEGATIVE for l in labels) / len(labels),
        "anger_ratio": sum(l == "anger" for l in labels) / len(labels),
        "emotion_intensity": float(np.mean(intensities)) if intensities else None,
        "n": len(labels),
    }

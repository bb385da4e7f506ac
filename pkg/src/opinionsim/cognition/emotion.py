"""Six-dimensional emotion state and its three update mechanisms.

Decay, content stimulation and social contagion all keep every component
inside [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Dict, Iterable, List, Sequence

EMOTIONS = ("happy", "sad", "angry", "fear", "surprise", "disgust")


def _clip(x: float) -> float:
    if x != x:  # NaN
        return 0.0
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else float(x)


@dataclass(frozen=True)
class EmotionVector:
    happy: float = 0.0
    sad: float = 0.0
    angry: float = 0.0
    fear: float = 0.0
    surprise: float = 0.0
    disgust: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _clip(float(getattr(self, f.name))))

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "EmotionVector":
        if len(values) != 6:
            raise ValueError(f"emotion vector needs 6 components, got {len(values)}")
        return cls(*values)

    @classmethod
    def from_dict(cls, d: Dict[str, float], default: float = 0.0) -> "EmotionVector":
        return cls(*(float(d.get(k, default)) for k in EMOTIONS))

    @classmethod
    def uniform(cls, value: float) -> "EmotionVector":
        return cls(*([value] * 6))

    def values(self) -> List[float]:
        return [self.happy, self.sad, self.angry, self.fear, self.surprise, self.disgust]

    def to_dict(self) -> Dict[str, float]:
        return dict(zip(EMOTIONS, self.values()))

    def dominant(self) -> str:
        vals = self.values()
        return EMOTIONS[max(range(6), key=lambda i: vals[i])]

    def intensity(self) -> float:
        return max(self.values())


@dataclass
class EmotionDynamicsConfig:
    lambda_e: float = 0.005  # per minute
    eta: float = 0.3
    rho: float = 0.2

    def __post_init__(self):
        if self.lambda_e < 0:
            raise ValueError("lambda_e must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")


def decay_emotion(e: EmotionVector, elapsed: float, cfg: EmotionDynamicsConfig) -> EmotionVector:
    """Exponential decay of every component over `elapsed` minutes."""
    if elapsed < 0:
        raise ValueError(f"elapsed time must be non-negative, got {elapsed}")
    if elapsed == 0 or cfg.lambda_e == 0:
        return e
    factor = math.exp(-cfg.lambda_e * elapsed)
    return EmotionVector(*(v * factor for v in e.values()))


def stimulate_emotion(e: EmotionVector, stimulus: Iterable[float], cfg: EmotionDynamicsConfig) -> EmotionVector:
    s = [float(x) for x in stimulus]
    if len(s) != 6:
        raise ValueError(f"stimulus needs 6 components, got {len(s)}")
    if any(x < 0.0 or x > 1.0 for x in s):
        raise ValueError("stimulus components must lie in [0, 1]")
    return EmotionVector(*(v + cfg.eta * x for v, x in zip(e.values(), s)))


def contagion_blend(e: EmotionVector, neighbor_mean: EmotionVector, rho: float) -> EmotionVector:
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    if rho == 0.0:
        return e
    if rho == 1.0:
        return neighbor_mean
    return EmotionVector(*((1.0 - rho) * a + rho * b for a, b in zip(e.values(), neighbor_mean.values())))


def mean_emotion(vectors: Sequence[EmotionVector]) -> EmotionVector:
    if not vectors:
        raise ValueError("cannot average an empty set of emotion vectors")
    n = len(vectors)
    sums = [0.0] * 6
    for v in vectors:
        for i, x in enumerate(v.values()):
            sums[i] += x
    return EmotionVector(*(s / n for s in sums))

"""Hawkes-process activation engine.

Intensity is a background rate plus exogenous (news) and endogenous (user
activity) excitation, each an exponential-kernel sum kept as an O(1)
accumulator, modulated by a daily cosine rhythm.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class HawkesConfig:
    mu: float = 0.01
    alpha_ext: float = 0.08
    beta_ext: float = 0.005
    alpha_int: float = 0.005
    beta_int: float = 0.16
    n_scale: float = 2000.0
    circadian_amplitude: float = 0.3
    circadian_peak_hour: float = 21.0
    day_offset_minutes: float = 0.0  # minute of day at sim-time 0
    count_all_actions: bool = True  # likes included in endogenous feedback

    def __post_init__(self):
        for name in ("mu", "alpha_ext", "beta_ext", "alpha_int", "beta_int", "n_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 <= self.circadian_amplitude <= 1.0:
            raise ValueError("circadian_amplitude must lie in [0, 1]")
        if self.alpha_int / self.beta_int >= 1.0:
            log.warning("endogenous branching ratio %.3f >= 1: activity may explode",
                        self.alpha_int / self.beta_int)

    @property
    def branching_ratio(self) -> float:
        return self.alpha_int / self.beta_int


@dataclass
class HawkesState:
    ext_accumulator: float = 0.0
    int_accumulator: float = 0.0
    last_eval: float = 0.0

    def advance(self, t: float, cfg: HawkesConfig) -> None:
        if t < self.last_eval:
            raise ValueError(f"time regression: {t} < {self.last_eval}")
        dt = t - self.last_eval
        if dt > 0:
            self.ext_accumulator *= math.exp(-cfg.beta_ext * dt)
            self.int_accumulator *= math.exp(-cfg.beta_int * dt)
            self.last_eval = t

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HawkesState":
        return cls(**d)


@dataclass
class ExogenousEvent:
    t_trigger: float
    label: str
    payload: str = ""
    magnitude: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExogenousEvent":
        return cls(float(d["t_trigger"]), d["label"], d.get("payload", ""), float(d.get("magnitude", 1.0)))


class EventQueue:
    """Pending exogenous events ordered by trigger time (stable for ties)."""

    def __init__(self, events: Sequence[ExogenousEvent] = ()):
        self._events: List[ExogenousEvent] = sorted(events, key=lambda e: e.t_trigger)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def push(self, event: ExogenousEvent) -> None:
        keys = [e.t_trigger for e in self._events]
        self._events.insert(bisect.bisect_right(keys, event.t_trigger), event)

    def pop_due(self, t: float) -> List[ExogenousEvent]:
        n = 0
        while n < len(self._events) and self._events[n].t_trigger <= t:
            n += 1
        due, self._events = self._events[:n], self._events[n:]
        return due

    def to_list(self) -> List[dict]:
        return [e.to_dict() for e in self._events]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "EventQueue":
        return cls([ExogenousEvent.from_dict(d) for d in items])


def circadian(t: float, cfg: HawkesConfig) -> float:
    hour = ((cfg.day_offset_minutes + t) / 60.0) % 24.0
    return 1.0 + cfg.circadian_amplitude * math.cos(2.0 * math.pi * (hour - cfg.circadian_peak_hour) / 24.0)


def intensity(state: HawkesState, t: float, cfg: HawkesConfig) -> float:
    state.advance(t, cfg)
    return (cfg.mu + state.ext_accumulator + state.int_accumulator) * circadian(t, cfg)


def inject_exogenous(state: HawkesState, event: ExogenousEvent, cfg: HawkesConfig) -> None:
    state.advance(max(state.last_eval, event.t_trigger), cfg)
    state.ext_accumulator += cfg.alpha_ext * event.magnitude


def record_endogenous(state: HawkesState, n_actions: int, cfg: HawkesConfig) -> None:
    if n_actions < 0:
        raise ValueError("action count must be non-negative")
    state.int_accumulator += n_actions * cfg.alpha_int


def expected_activations(lambda_t: float, dt_minutes: float, cfg: HawkesConfig) -> float:
    return lambda_t * cfg.n_scale * dt_minutes / 60.0


def sample_activation_count(lambda_t: float, dt_minutes: float, cfg: HawkesConfig, rng: np.random.Generator,
                            population: Optional[int] = None) -> int:
    if lambda_t < 0:
        raise ValueError("intensity must be non-negative")
    n = int(rng.poisson(expected_activations(lambda_t, dt_minutes, cfg)))
    return n if population is None else min(n, population)


def sample_agents(population: Sequence[str], n: int, activity_weights: Sequence[float],
                  rng: np.random.Generator) -> List[str]:
    """Weighted sampling without replacement; returned in population order."""
    w = np.asarray(activity_weights, dtype=float)
    if len(w) != len(population):
        raise ValueError("one weight per agent required")
    if np.any(w < 0) or not np.isfinite(w).all():
        raise ValueError("weights must be finite and non-negative")
    if n <= 0:
        return []
    if n >= len(population):
        return list(population)
    positive = np.flatnonzero(w > 0)
    if len(positive) == 0:
        raise ValueError("weights must not all be zero")
    if n <= len(positive):
        idx = rng.choice(len(population), size=n, replace=False, p=w / w.sum())
    else:
        zero = np.flatnonzero(w == 0)
        extra = rng.choice(zero, size=n - len(positive), replace=False)
        idx = np.concatenate([positive, extra])
    return [population[i] for i in sorted(int(i) for i in idx)]


@dataclass
class ActivityWeights:
    """Per-agent sampling weights: historical activity, reinforced by actions taken."""

    weights: Dict[str, float] = field(default_factory=dict)
    growth: float = 1.1
    cap_multiple: float = 10.0

    @classmethod
    def from_counts(cls, counts: Dict[str, int], **kw) -> "ActivityWeights":
        aw = cls({a: float(max(1, c)) for a, c in counts.items()}, **kw)
        aw._normalize()
        return aw

    def _normalize(self) -> None:
        if not self.weights:
            return
        vals = np.array(list(self.weights.values()))
        cap = self.cap_multiple * float(np.median(vals))
        vals = np.minimum(vals, cap)
        vals = vals / vals.mean()
        self.weights = dict(zip(self.weights.keys(), vals.tolist()))

    def reinforce(self, action_counts: Dict[str, int]) -> None:
        for agent, n in action_counts.items():
            if agent in self.weights and n > 0:
                self.weights[agent] *= self.growth ** n
        self._normalize()

    def vector(self, population: Sequence[str]) -> List[float]:
        return [self.weights.get(a, 0.0) for a in population]

    def to_dict(self) -> dict:
        return {"weights": dict(self.weights), "growth": self.growth, "cap_multiple": self.cap_multiple}

    @classmethod
    def from_dict(cls, d: dict) -> "ActivityWeights":
        return cls(dict(d["weights"]), d["growth"], d["cap_multiple"])

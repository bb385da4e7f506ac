"""Simulation configuration: every tunable default in one JSON-serializable tree."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from datetime import datetime, timedelta
from typing import Any, Dict, List, Optional

from ..cognition.emotion import EmotionDynamicsConfig
from ..cognition.memory import MemoryConfig
from ..llm.gateway import EndpointSpec, SamplingPerturbation
from ..platform.recommend import RecommendationConfig
from ..temporal import ExogenousEvent, HawkesConfig


@dataclass
class GatewayConfig:
    endpoints: List[Dict[str, Any]] = field(default_factory=list)
    base_temperature: float = 0.7
    base_top_p: float = 0.9
    penalty_max: float = 0.5
    max_retries: int = 2
    timeout_s: float = 120.0
    mock_script: str = "persona"  # persona | echo
    mock_seed: int = 0
    log_exchanges: bool = True

    def endpoint_specs(self) -> List[EndpointSpec]:
        return [EndpointSpec(**e) for e in self.endpoints]

    def sampling(self) -> SamplingPerturbation:
        return SamplingPerturbation(self.base_temperature, self.base_top_p, penalty_max=self.penalty_max)


@dataclass
class SimConfig:
    dt: float = 10.0
    t_start: str = "2024-01-01T00:00:00"
    max_steps: int = 276
    seed: int = 0
    threads: int = 1
    checkpoint_period: int = 50
    news_window: float = 1440.0  # minutes an event stays news to an agent who has not seen it
    event_background: str = ""
    events: List[Dict[str, Any]] = field(default_factory=list)
    embedding_dim: int = 64
    embedding_seed: int = 0
    dedup_threshold: float = 0.95
    activity_growth: float = 1.1
    activity_cap_multiple: float = 10.0
    hawkes: HawkesConfig = field(default_factory=HawkesConfig)
    recommendation: RecommendationConfig = field(default_factory=RecommendationConfig)
    emotion: EmotionDynamicsConfig = field(default_factory=EmotionDynamicsConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    gateway: GatewayConfig = field(default_factory=GatewayConfig)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        start = self.start_datetime
        self.hawkes.day_offset_minutes = start.hour * 60 + start.minute + start.second / 60.0

    @property
    def start_datetime(self) -> datetime:
        return datetime.fromisoformat(self.t_start)

    def clock(self, t: float) -> str:
        return (self.start_datetime + timedelta(minutes=t)).strftime("%Y-%m-%d %H:%M")

    def exogenous_events(self) -> List[ExogenousEvent]:
        out = []
        for e in self.events:
            if "t" in e:
                t = float(e["t"])
            elif "timestamp" in e:
                t = (datetime.fromisoformat(e["timestamp"]) - self.start_datetime).total_seconds() / 60.0
            elif "step" in e:
                t = float(e["step"]) * self.dt
            else:
                raise ValueError(f"event {e.get('label')!r} lacks a time ('t', 'step' or 'timestamp')")
            out.append(ExogenousEvent(t, e["label"], e.get("payload", ""), float(e.get("magnitude", 1.0))))
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "SimConfig":
        return _build(cls, d)


_NESTED = {
    "hawkes": HawkesConfig,
    "recommendation": RecommendationConfig,
    "emotion": EmotionDynamicsConfig,
    "memory": MemoryConfig,
    "gateway": GatewayConfig,
}


def _build(cls, d: Dict[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for k, v in d.items():
        sub = _NESTED.get(k) if cls is SimConfig else None
        if sub is not None and isinstance(v, dict):
            v = _build(sub, v)
        kwargs[k] = v
    return cls(**kwargs)


def merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> SimConfig:
    data = SimConfig().to_dict()
    if path:
        with open(path, encoding="utf-8") as fh:
            data = merge(data, json.load(fh))
    if overrides:
        data = merge(data, overrides)
    return SimConfig.from_dict(data)

"""Streaming per-agent memory bank with recency/relevance retrieval."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional

import numpy as np

PERCEIVED = "perceived"
ACTED = "acted"


@dataclass
class MemoryConfig:
    alpha_rec: float = 0.5
    gamma_mem: float = 0.002  # per minute
    k_retrieve: int = 5
    capacity: int = 200

    def __post_init__(self):
        if not 0.0 <= self.alpha_rec <= 1.0:
            raise ValueError("alpha_rec must lie in [0, 1]")
        if self.gamma_mem <= 0:
            raise ValueError("gamma_mem must be > 0")
        if self.k_retrieve < 1:
            raise ValueError("k_retrieve must be positive")
        if self.capacity < 1:
            raise ValueError("capacity must be positive")


@dataclass
class MemoryEntry:
    t_m: float
    text: str
    embedding: np.ndarray
    kind: str = PERCEIVED
    seq: int = field(default=0, compare=False)

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"memory embedding must be unit norm, got {norm:.8f}")
        if self.kind not in (PERCEIVED, ACTED):
            raise ValueError(f"unknown memory kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"t_m": self.t_m, "text": self.text, "embedding": self.embedding.tolist(),
                "kind": self.kind, "seq": self.seq}

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryEntry":
        return cls(d["t_m"], d["text"], np.asarray(d["embedding"]), d["kind"], d["seq"])


def retrieval_score(entry: MemoryEntry, query: np.ndarray, now: float, cfg: MemoryConfig) -> float:
    recency = math.exp(-cfg.gamma_mem * (now - entry.t_m))
    relevance = float(np.dot(query, entry.embedding))
    return cfg.alpha_rec * recency + (1.0 - cfg.alpha_rec) * relevance


class MemoryBank:
    """Capacity-bounded FIFO store; the oldest entry is evicted first."""

    def __init__(self, capacity: int = 200):
        self.capacity = capacity
        self._entries: Deque[MemoryEntry] = deque(maxlen=capacity)
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def store(self, entry: MemoryEntry) -> None:
        entry.seq = self._next_seq
        self._next_seq += 1
        self._entries.append(entry)

    def retrieve(self, query: np.ndarray, now: float, cfg: MemoryConfig, k: Optional[int] = None) -> List[MemoryEntry]:
        """Top-k entries by score; ties go to the more recent, then the earlier stored."""
        if not self._entries:
            return []
        k = cfg.k_retrieve if k is None else k
        entries = list(self._entries)
        query = np.asarray(query, dtype=np.float64)
        t = np.array([e.t_m for e in entries])
        emb = np.stack([e.embedding for e in entries])
        scores = cfg.alpha_rec * np.exp(-cfg.gamma_mem * (now - t)) + (1.0 - cfg.alpha_rec) * (emb @ query)
        seq = np.array([e.seq for e in entries])
        # lexsort: last key is primary
        order = np.lexsort((seq, -t, -scores))
        return [entries[i] for i in order[:k]]

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "next_seq": self._next_seq,
                "entries": [e.to_dict() for e in self._entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryBank":
        bank = cls(d["capacity"])
        for e in d["entries"]:
            bank._entries.append(MemoryEntry.from_dict(e))
        bank._next_seq = d["next_seq"]
        return bank


def retrieve_memories(bank: MemoryBank, query_embedding: np.ndarray, now: float, cfg: MemoryConfig) -> List[MemoryEntry]:
    return bank.retrieve(query_embedding, now, cfg)

"""Tokenizer, embedders and lexicon sentiment shared by the platform and evaluator."""
from __future__ import annotations

import hashlib
import json
import re
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np

_CJK = r"㐀-䶿一-鿿豈-﫿"
_TOKEN = re.compile(rf"[{_CJK}]+|[^\W{_CJK}_]+(?:'[^\W{_CJK}_]+)?", re.UNICODE)
_IS_CJK = re.compile(rf"[{_CJK}]")


def tokenize(text: str) -> List[str]:
    """Lower-cased word tokens; runs of CJK characters become overlapping bigrams."""
    out: List[str] = []
    for tok in _TOKEN.findall((text or "").lower()):
        if _IS_CJK.match(tok):
            if len(tok) == 1:
                out.append(tok)
            else:
                out.extend(tok[i:i + 2] for i in range(len(tok) - 1))
        else:
            out.append(tok)
    return out


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray:
        ...


class HashingEmbedder:
    """Seeded feature-hashing embedder: deterministic and unit-normalized."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._cache: Dict[str, np.ndarray] = {}

    def _slot(self, token: str):
        d = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=str(self.seed).encode()).digest()
        v = int.from_bytes(d, "little")
        return v % self.dim, 1.0 if (v >> 32) & 1 else -1.0

    def embed(self, text: str) -> np.ndarray:
        cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = np.zeros(self.dim)
        toks = tokenize(text)
        for tok in toks:
            i, s = self._slot(tok)
            vec[i] += s
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            i, _ = self._slot("\0empty")
            vec[i] = 1.0
        else:
            vec /= norm
        vec.setflags(write=False)
        if len(self._cache) < 200_000:
            self._cache[text] = vec
        return vec


class HTTPEmbedder:
    """Calls an external embedding service (`POST {url}` with {"input": text})."""

    def __init__(self, url: str, dim: int, timeout: float = 30.0):
        import requests

        self.url = url
        self.dim = dim
        self.timeout = timeout
        self._session = requests.Session()

    def embed(self, text: str) -> np.ndarray:
        resp = self._session.post(self.url, json={"input": text}, timeout=self.timeout)
        resp.raise_for_status()
        body = resp.json()
        vec = np.asarray(body["data"][0]["embedding"] if "data" in body else body["embedding"], dtype=float)
        return vec / np.linalg.norm(vec)


@lru_cache(maxsize=None)
def load_lexicon(name: str) -> dict:
    text = resources.files("opinionsim").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


class SentimentAnalyzer(Protocol):
    def score(self, text: str) -> float:
        """Positivity in [0, 1]; 0.5 is neutral."""
        ...


class LexiconSentiment:
    def __init__(self, positive: Optional[Sequence[str]] = None, negative: Optional[Sequence[str]] = None):
        lex = load_lexicon("sentiment_lexicon")
        self.positive = [w.lower() for w in (positive if positive is not None else lex["positive"])]
        self.negative = [w.lower() for w in (negative if negative is not None else lex["negative"])]

    def score(self, text: str) -> float:
        t = (text or "").lower()
        pos = sum(t.count(w) for w in self.positive)
        neg = sum(t.count(w) for w in self.negative)
        if pos + neg == 0:
            return 0.5
        return 0.5 + 0.5 * (pos - neg) / (pos + neg)

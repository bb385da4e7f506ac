"""Behaviour- and content-layer comparison metrics."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..cognition.beliefs import ACTION_TYPES
from ..text import LexiconSentiment, load_lexicon, tokenize


def _validate_distribution(p: np.ndarray, name: str) -> None:
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be non-negative and sum to 1")


def jsd(p: Sequence[float], q: Sequence[float]) -> float:
    """Jensen-Shannon divergence in nats, 0 log 0 taken as 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    _validate_distribution(p, "P")
    _validate_distribution(q, "Q")
    m = 0.5 * (p + q)

    def kl(a: np.ndarray) -> float:
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / m[mask])))

    return min(math.log(2.0), max(0.0, 0.5 * kl(p) + 0.5 * kl(q)))


def action_distribution(kinds: Iterable[str], support: Sequence[str] = ACTION_TYPES) -> Optional[np.ndarray]:
    counts = Counter(kinds)
    total = sum(counts[k] for k in support)
    if total == 0:
        return None
    return np.array([counts[k] / total for k in support])


@dataclass
class HotnessSeries:
    counts: np.ndarray
    bin_width: float
    start: float = 0.0


def hotness_series(times: Iterable[float], bin_width: float, n_bins: Optional[int] = None,
                   start: float = 0.0) -> HotnessSeries:
    t = np.asarray(list(times), dtype=float)
    if n_bins is None:
        n_bins = int(math.floor((t.max() - start) / bin_width)) + 1 if len(t) else 0
    idx = np.floor((t - start) / bin_width).astype(int)
    idx = idx[(idx >= 0) & (idx < n_bins)]
    return HotnessSeries(np.bincount(idx, minlength=n_bins).astype(float), bin_width, start)


def max_normalize(x: np.ndarray) -> np.ndarray:
    m = float(np.max(x)) if len(x) else 0.0
    return x / m if m > 0 else np.zeros_like(x, dtype=float)


def hotness_corr_rmse(a: Sequence[float], b: Sequence[float]) -> Tuple[Optional[float], float]:
    """Pearson correlation and RMSE of the two max-normalized curves."""
    a = np.asarray(getattr(a, "counts", a), dtype=float)
    b = np.asarray(getattr(b, "counts", b), dtype=float)
    if len(a) != len(b):
        raise ValueError("hotness series must have equal length")
    if len(a) < 3:
        raise ValueError("hotness series need at least 3 bins")
    na, nb = max_normalize(a), max_normalize(b)
    rmse = float(np.sqrt(np.mean((na - nb) ** 2)))
    da, db = na - na.mean(), nb - nb.mean()
    denom = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    rho = None if denom == 0 else max(-1.0, min(1.0, float(np.dot(da, db)) / denom))
    return rho, rmse


IRRATIONAL, RATIONAL, NEUTRAL = "irrational", "rational", "neutral"


def classify_rationality(text: str, lexicon: Dict[str, List[str]]) -> str:
    t = (text or "").lower()
    irr = sum(t.count(w.lower()) for w in lexicon["irrational"])
    rat = sum(t.count(w.lower()) for w in lexicon["rational"])
    if irr > rat:
        return IRRATIONAL
    if rat > irr:
        return RATIONAL
    return NEUTRAL


def rationality_distribution(texts: Sequence[str], lexicon: Dict[str, List[str]]) -> Optional[np.ndarray]:
    if not texts:
        return None
    c = Counter(classify_rationality(t, lexicon) for t in texts)
    n = len(texts)
    return np.array([c[IRRATIONAL] / n, c[RATIONAL] / n, c[NEUTRAL] / n])


def total_variation(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


def irrationality_similarity(sim_texts: Sequence[str], real_texts: Sequence[str],
                             lexicon: Optional[Dict[str, List[str]]] = None) -> Optional[float]:
    lexicon = lexicon or load_lexicon("irrationality_lexicon")
    p = rationality_distribution(sim_texts, lexicon)
    q = rationality_distribution(real_texts, lexicon)
    if p is None or q is None:
        return None
    return max(0.0, min(1.0, 1.0 - total_variation(p, q)))


def type_token_ratio(texts: Sequence[str], tokenizer: Callable[[str], List[str]] = tokenize) -> Optional[float]:
    tokens = [tok for t in texts for tok in tokenizer(t)]
    if not tokens:
        return None
    return len(set(tokens)) / len(tokens)


def ttr_delta(sim_texts: Sequence[str], real_texts: Sequence[str],
              tokenizer: Callable[[str], List[str]] = tokenize) -> Optional[float]:
    a, b = type_token_ratio(sim_texts, tokenizer), type_token_ratio(real_texts, tokenizer)
    if a is None or b is None:
        return None
    return abs(a - b)


def sentiment_delta(sim_texts: Sequence[str], real_texts: Sequence[str], analyzer=None) -> Optional[float]:
    """|mean(2s-1)| difference between corpora for an analyzer returning s in [0, 1]."""
    if not sim_texts or not real_texts:
        return None
    analyzer = analyzer or LexiconSentiment()
    ms = float(np.mean([2.0 * analyzer.score(t) - 1.0 for t in sim_texts]))
    mr = float(np.mean([2.0 * analyzer.score(t) - 1.0 for t in real_texts]))
    return abs(ms - mr)

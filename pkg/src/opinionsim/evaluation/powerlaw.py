"""Discrete power-law fitting by maximum likelihood, with KS-based x_min selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

ALPHA_BOUNDS = (1.0001, 12.0)
MIN_TAIL = 30


@dataclass
class PowerLawFit:
    alpha: Optional[float]
    x_min: Optional[int]
    n_tail: int
    ks: Optional[float]
    ccdf: List[Tuple[int, float]] = field(default_factory=list)
    diagnostic: str = ""

    @property
    def ok(self) -> bool:
        return self.alpha is not None

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "x_min": self.x_min, "n_tail": self.n_tail, "ks": self.ks,
                "diagnostic": self.diagnostic}


def empirical_ccdf(samples: Sequence[int]) -> List[Tuple[int, float]]:
    """(s, P(X >= s)) for every distinct observed s."""
    x = np.sort(np.asarray(samples, dtype=np.int64))
    if len(x) == 0:
        return []
    values, first = np.unique(x, return_index=True)
    return [(int(v), float((len(x) - i) / len(x))) for v, i in zip(values, first)]


def neg_log_likelihood(alpha: float, x: np.ndarray, x_min: int) -> float:
    return len(x) * math.log(zeta(alpha, x_min)) + alpha * float(np.sum(np.log(x)))


def mle_alpha(x: np.ndarray, x_min: int) -> float:
    res = minimize_scalar(neg_log_likelihood, bounds=ALPHA_BOUNDS, args=(x, x_min), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def ks_distance(x: np.ndarray, alpha: float, x_min: int) -> float:
    x = np.sort(x)
    values, counts = np.unique(x, return_counts=True)
    emp_cdf = np.cumsum(counts) / len(x)
    model_cdf = 1.0 - zeta(alpha, values + 1.0) / zeta(alpha, x_min)
    return float(np.max(np.abs(emp_cdf - model_cdf)))


def fit_power_law(samples: Sequence[int], x_min: Union[str, int] = "ks", min_tail: int = MIN_TAIL,
                  max_candidates: int = 60) -> PowerLawFit:
    """Fit P(x) ~ x^-alpha for x >= x_min over positive integers.

    `x_min` is either a fixed integer or "ks", which scans the distinct sample
    values (keeping at least `min_tail` points above) and keeps the one with the
    smallest Kolmogorov-Smirnov distance.
    """
    x = np.asarray([int(s) for s in samples if s >= 1], dtype=np.int64)
    ccdf = empirical_ccdf(x)
    if len(x) < min_tail:
        return PowerLawFit(None, None, len(x), None, ccdf, f"only {len(x)} samples; need {min_tail}")
    if len(np.unique(x)) < 2:
        return PowerLawFit(None, None, len(x), None, ccdf, "degenerate tail: all samples equal")
    if isinstance(x_min, str):
        if x_min != "ks":
            raise ValueError(f"unknown x_min policy {x_min!r}")
        candidates = [int(v) for v in np.unique(x) if np.sum(x >= v) >= min_tail][:max_candidates]
    else:
        candidates = [int(x_min)]
    best: Optional[PowerLawFit] = None
    for xm in candidates:
        tail = x[x >= xm].astype(float)
        if len(tail) < min_tail or len(np.unique(tail)) < 2:
            continue
        a = mle_alpha(tail, xm)
        d = ks_distance(tail, a, xm)
        if best is None or d < best.ks:
            best = PowerLawFit(a, xm, len(tail), d, ccdf)
    if best is None:
        return PowerLawFit(None, None, len(x), None, ccdf, "no x_min leaves a non-degenerate tail")
    return best


def discrete_power_law_ccdf(x: np.ndarray, alpha: float, x_min: int) -> np.ndarray:
    return zeta(alpha, np.asarray(x, dtype=float)) / zeta(alpha, x_min)


def sample_discrete_power_law(alpha: float, x_min: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact inverse-CDF draws: the x with CCDF(x) >= u > CCDF(x + 1)."""
    u = rng.random(n)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    lo = np.full(n, float(x_min))
    hi = np.full(n, float(x_min) * 2.0)
    while True:
        grow = discrete_power_law_ccdf(hi, alpha, x_min) >= u
        if not grow.any() or hi.max() > 2.0 ** 52:
            break
        hi = np.where(grow, hi * 2.0, hi)
    # invariant: CCDF(lo) >= u > CCDF(hi)
    while True:
        gap = hi - lo > 1
        if not gap.any():
            break
        mid = np.floor((lo + hi) / 2.0)
        ok = discrete_power_law_ccdf(mid, alpha, x_min) >= u
        lo = np.where(gap & ok, mid, lo)
        hi = np.where(gap & ~ok, mid, hi)
    return lo.astype(np.int64)

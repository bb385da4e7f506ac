"""Brute-force reference implementations, written without the package.

Plain Python loops and math only, so they share no code paths with the
vectorized library functions they check.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple


def kernel_sum(times: Sequence[float], t: float, alpha: float, beta: float) -> float:
    return sum(alpha * math.exp(-beta * (t - ti)) for ti in times if ti <= t)


def jsd(p: Sequence[float], q: Sequence[float]) -> float:
    total = 0.0
    for a, b in zip(p, q):
        m = (a + b) / 2.0
        if a > 0:
            total += 0.5 * a * math.log(a / m)
        if b > 0:
            total += 0.5 * b * math.log(b / m)
    return total


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def max_norm(x: Sequence[float]) -> List[float]:
    m = max(x)
    return [v / m for v in x] if m > 0 else [0.0 for _ in x]


def rmse(x: Sequence[float], y: Sequence[float]) -> float:
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)) / len(x))


def ttr(tokens: Sequence[str]) -> float:
    return len(set(tokens)) / len(tokens)


def tv(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * sum(abs(a - b) for a, b in zip(p, q))


def rationality_share(texts: Sequence[str], irr: Sequence[str], rat: Sequence[str]) -> Tuple[float, float, float]:
    c = Counter()
    for t in texts:
        low = t.lower()
        i = sum(low.count(w.lower()) for w in irr)
        r = sum(low.count(w.lower()) for w in rat)
        c["irr" if i > r else "rat" if r > i else "neu"] += 1
    n = len(texts)
    return c["irr"] / n, c["rat"] / n, c["neu"] / n


def polarization(labels: Sequence[str], k: int = 6) -> float:
    n = len(labels)
    h = 0.0
    for c in Counter(labels).values():
        p = c / n
        h -= p * math.log(p)
    return 1.0 - h / math.log(k)


def ls_slope(y: Sequence[float]) -> float:
    n = len(y)
    xs = list(range(n))
    mx, my = sum(xs) / n, sum(y) / n
    return sum((a - mx) * (b - my) for a, b in zip(xs, y)) / sum((a - mx) ** 2 for a in xs)


def hurwitz(alpha: float, q: int, terms: int = 200000) -> float:
    """Hurwitz zeta by direct summation plus an Euler-Maclaurin tail."""
    s = sum((q + i) ** -alpha for i in range(terms))
    n = q + terms
    return s + n ** (1 - alpha) / (alpha - 1) + 0.5 * n ** -alpha


def power_law_mle(samples: Sequence[int], x_min: int) -> float:
    """Golden-section search on the discrete log-likelihood, zeta by summation."""
    tail = [x for x in samples if x >= x_min]
    n = len(tail)
    slog = sum(math.log(x) for x in tail)

    def nll(a: float) -> float:
        return n * math.log(hurwitz(a, x_min, 20000)) + a * slog

    lo, hi = 1.01, 6.0
    g = (math.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = nll(c), nll(d)
    while hi - lo > 1e-7:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = nll(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = nll(d)
    return (lo + hi) / 2


def retrieval(entries: Sequence[Tuple[float, Sequence[float]]], query: Sequence[float], now: float,
              alpha: float, gamma: float, k: int) -> List[int]:
    """Indices of the top-k memories; ties go to newer, then earlier inserted."""
    scored = []
    for i, (t, emb) in enumerate(entries):
        cos = sum(a * b for a, b in zip(query, emb))
        r = alpha * math.exp(-gamma * (now - t)) + (1 - alpha) * cos
        scored.append((-r, -t, i))
    scored.sort()
    return [i for _, _, i in scored[:k]]


def feed_scores(user: Sequence[float], posts: Sequence[Dict], now: float, weights=(0.3, 0.3, 0.4),
                decay: float = 0.005) -> List[Tuple[float, str]]:
    """(score, id) pairs ordered by score, then newer, then id."""
    max_eng = max(p["likes"] + 2 * p["reposts"] + 2 * p["comments"] for p in posts)
    rows = []
    for p in posts:
        cos = sum(a * b for a, b in zip(user, p["embedding"]))
        h = min(1.0, max(0.0, (cos + 1) / 2))
        eng = p["likes"] + 2 * p["reposts"] + 2 * p["comments"]
        v = eng / max_eng if max_eng > 0 else 0.0
        f = math.exp(-decay * max(0.0, now - p["t_pub"]))
        s = weights[0] * h + weights[1] * v + weights[2] * f
        rows.append((-s, -p["t_pub"], p["id"], s))
    rows.sort()
    return [(s, pid) for _, _, pid, s in rows]


def emotion_clamp_walk(ops, start):
    """Replay (kind, arg) emotion operations on plain lists."""
    e = list(start)
    for kind, arg in ops:
        if kind == "decay":
            lam, dt = arg
            f = math.exp(-lam * dt)
            e = [min(1.0, max(0.0, x * f)) for x in e]
        elif kind == "stim":
            eta, s = arg
            e = [min(1.0, max(0.0, x + eta * y)) for x, y in zip(e, s)]
        else:
            rho, m = arg
            e = [min(1.0, max(0.0, (1 - rho) * x + rho * y)) for x, y in zip(e, m)]
    return e


def _minutes_since(ts: str, origin: str) -> float:
    from datetime import datetime

    return (datetime.fromisoformat(ts) - datetime.fromisoformat(origin)).total_seconds() / 60.0


def golden_values(sim: List[Dict], real: List[Dict], tokenize, lexicon: Dict[str, List[str]],
                  action_types: Sequence[str], bin_width: float = 60.0) -> Dict[str, float]:
    """Every comparison metric over a simulated action log and a real-post log, computed from raw rows."""
    content = ("repost_comment", "short_comment", "long_comment", "short_post", "long_post")
    cs, cr = Counter(r["action_type"] for r in sim), Counter(r["kind"] for r in real)
    p = [cs[k] / len(sim) for k in action_types]
    q = [cr[k] / len(real) for k in action_types]

    t_sim = [r["t"] for r in sim]
    origin = min(r["timestamp"] for r in real)
    t_real = [_minutes_since(r["timestamp"], origin) for r in real]
    n_bins = max(3, int(max(t_sim + t_real) // bin_width) + 1)
    hs = max_norm([sum(int(t // bin_width) == i for t in t_sim) for i in range(n_bins)])
    hr = max_norm([sum(int(t // bin_width) == i for t in t_real) for i in range(n_bins)])

    tx_s = [r["text"] for r in sim if r["action_type"] in content and r["text"]]
    tx_r = [r["text"] for r in real if r["kind"] in content and r["text"]]
    tok_s = [t for x in tx_s for t in tokenize(x)]
    tok_r = [t for x in tx_r for t in tokenize(x)]
    irr = 1 - tv(rationality_share(tx_s, lexicon["irrational"], lexicon["rational"]),
                 rationality_share(tx_r, lexicon["irrational"], lexicon["rational"]))

    aliases = {"angry": "anger", "happy": "happiness", "sad": "sadness"}
    emo_s = [aliases.get(r["strategy"]["emotion_type"], r["strategy"]["emotion_type"])
             for r in sim if r.get("strategy")]
    emo_r = [r["emotion"] for r in real if r.get("emotion")]
    return {"btype_jsd": jsd(p, q), "act_rho": pearson(hs, hr), "act_rmse": rmse(hs, hr),
            "ttr_delta": abs(ttr(tok_s) - ttr(tok_r)), "irrat_sim": irr,
            "pi_sim": polarization(emo_s), "pi_real": polarization(emo_r)}

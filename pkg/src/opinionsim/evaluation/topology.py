"""Interaction-network and cascade comparison."""
from __future__ import annotations

import math
from collections import Counter
from typing import Dict, List, Optional, Sequence

import networkx as nx
import numpy as np

from ..cognition.beliefs import COMMENT_TYPES, ORIGINAL_TYPES, REPOST_TYPES
from .logs import Act
from .metrics import jsd
from .powerlaw import PowerLawFit, fit_power_law

NET_FEATURES = ("density", "degree_gini", "clustering", "reciprocity", "component_entropy")


def interaction_graph(acts: Sequence[Act]) -> nx.DiGraph:
    """Directed actor -> target-author edges from reposts and comments."""
    g = nx.DiGraph()
    for a in acts:
        if a.kind in REPOST_TYPES or a.kind in COMMENT_TYPES:
            g.add_node(a.agent)
            if a.target_author and a.target_author != a.agent:
                g.add_edge(a.agent, a.target_author)
    return g


def gini(values: Sequence[float]) -> float:
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    if n == 0 or x.sum() == 0:
        return 0.0
    return float((2.0 * np.sum(np.arange(1, n + 1) * x) - (n + 1) * x.sum()) / (n * x.sum()))


def network_features(g: nx.DiGraph) -> Dict[str, float]:
    n = g.number_of_nodes()
    if n == 0:
        return {k: 0.0 for k in NET_FEATURES}
    sizes = [len(c) for c in nx.weakly_connected_components(g)]
    p = np.array(sizes, dtype=float) / n
    return {
        "density": nx.density(g) if n > 1 else 0.0,
        "degree_gini": gini([d for _, d in g.degree()]),
        "clustering": nx.average_clustering(g.to_undirected()),
        "reciprocity": nx.overall_reciprocity(g) if g.number_of_edges() else 0.0,
        "component_entropy": float(-np.sum(p * np.log(p))),
    }


def feature_similarity(a: float, b: float) -> float:
    m = max(abs(a), abs(b))
    return 1.0 if m == 0 else max(0.0, 1.0 - abs(a - b) / m)


def topology_similarity(sim_graph: nx.DiGraph, real_graph: nx.DiGraph) -> float:
    fa, fb = network_features(sim_graph), network_features(real_graph)
    return float(np.mean([feature_similarity(fa[k], fb[k]) for k in NET_FEATURES]))


def cascade_sizes(acts: Sequence[Act]) -> List[int]:
    """Size of each original post's repost tree, root included."""
    roots = {a.post_id for a in acts if a.kind in ORIGINAL_TYPES and a.post_id}
    sizes = Counter({r: 1 for r in roots})
    for a in acts:
        if a.kind in REPOST_TYPES and a.root_id in roots:
            sizes[a.root_id] += 1
    return sorted(sizes.values())


def log2_histogram(sizes: Sequence[int], n_bins: int) -> np.ndarray:
    h = np.zeros(n_bins)
    for s in sizes:
        h[int(math.floor(math.log2(s)))] += 1
    return h / h.sum()


def cascade_similarity(sim_sizes: Sequence[int], real_sizes: Sequence[int]) -> Optional[float]:
    if not sim_sizes or not real_sizes:
        return None
    n_bins = int(math.floor(math.log2(max(max(sim_sizes), max(real_sizes))))) + 1
    d = jsd(log2_histogram(sim_sizes, n_bins), log2_histogram(real_sizes, n_bins))
    return max(0.0, min(1.0, 1.0 - d / math.log(2.0)))


def exponent_similarity(alpha_sim: Optional[float], alpha_real: Optional[float]) -> Optional[float]:
    if alpha_sim is None or alpha_real is None:
        return None
    return 1.0 - abs(alpha_sim - alpha_real) / max(alpha_sim, alpha_real)


def degree_sequence(g: nx.DiGraph) -> List[int]:
    return [d for _, d in g.degree() if d > 0]


def cascade_fit(sizes: Sequence[int]) -> PowerLawFit:
    return fit_power_law(sizes, "ks")

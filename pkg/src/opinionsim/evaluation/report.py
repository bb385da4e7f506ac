"""Three-layer comparison report between a simulated and a reference action stream."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..cognition.beliefs import ACTION_TYPES, CONTENT_TYPES, ORIGINAL_TYPES
from .emergence import HIGH_AROUSAL, LOW_AROUSAL, arousal_metrics, pi_series
from .logs import Act, load_actions
from .metrics import (action_distribution, hotness_corr_rmse, hotness_series, irrationality_similarity, jsd,
                      max_normalize, sentiment_delta, ttr_delta)
from .powerlaw import fit_power_law
from .topology import (cascade_similarity, cascade_sizes, degree_sequence, exponent_similarity, interaction_graph,
                       topology_similarity)

JSD_LOG_BASE = "e"


@dataclass
class ReportConfig:
    bin_width: float = 60.0          # minutes per hotness bin
    pi_window: float = 360.0         # minutes per polarization window
    hotness_actions: str = "all"     # "all" or "posts"
    t_start: Optional[str] = None    # ISO origin for reference logs with wall-clock timestamps
    high_arousal: Tuple[str, ...] = HIGH_AROUSAL
    low_arousal: Tuple[str, ...] = LOW_AROUSAL
    n_boot: int = 200
    seed: int = 0
    min_tail: int = 30

    def __post_init__(self):
        if self.bin_width <= 0 or self.pi_window <= 0:
            raise ValueError("bin_width and pi_window must be positive")
        if self.hotness_actions not in ("all", "posts"):
            raise ValueError("hotness_actions must be 'all' or 'posts'")
        self.high_arousal = tuple(self.high_arousal)
        self.low_arousal = tuple(self.low_arousal)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ReportConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown report config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class MetricReport:
    behavior: Dict[str, Optional[float]]
    content: Dict[str, Optional[float]]
    topology: Dict[str, Optional[float]]
    emergence: Dict[str, Any]
    header: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, List[dict]] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"header": self.header, "behavior": self.behavior, "content": self.content,
                "topology": self.topology, "emergence": self.emergence}


def layer_average(higher_better: Sequence[Optional[float]], lower_better: Sequence[Optional[float]]) -> Optional[float]:
    """Mean over present metrics after mapping lower-is-better values through 1 - x."""
    vals = [v for v in higher_better if v is not None] + [1.0 - v for v in lower_better if v is not None]
    return float(np.mean(vals)) if vals else None


def _texts(acts: Sequence[Act]) -> List[str]:
    return [a.text for a in acts if a.kind in CONTENT_TYPES and a.text]


def _hotness_times(acts: Sequence[Act], mode: str) -> List[float]:
    return [a.t for a in acts if mode == "all" or a.kind in ORIGINAL_TYPES]


def _fit_alpha(samples: Sequence[int], min_tail: int):
    return fit_power_law(samples, "ks", min_tail=min_tail)


def _ccdf_rows(label: str, fit) -> List[dict]:
    return [{"series": label, "s": s, "ccdf": p} for s, p in fit.ccdf]


def build_report(sim: Union[str, Sequence[Act]], real: Union[str, Sequence[Act]],
                 cfg: Optional[ReportConfig] = None) -> MetricReport:
    cfg = cfg or ReportConfig()
    sim_acts = load_actions(sim, cfg.t_start) if isinstance(sim, str) else sorted(sim, key=Act.sort_key)
    real_acts = load_actions(real, cfg.t_start) if isinstance(real, str) else sorted(real, key=Act.sort_key)

    # behaviour
    p = action_distribution(a.kind for a in sim_acts)
    q = action_distribution(a.kind for a in real_acts)
    btype = jsd(p, q) if p is not None and q is not None else None
    ts_sim = _hotness_times(sim_acts, cfg.hotness_actions)
    ts_real = _hotness_times(real_acts, cfg.hotness_actions)
    t_max = max(ts_sim + ts_real, default=0.0)
    n_bins = max(3, int(math.floor(t_max / cfg.bin_width)) + 1)
    h_sim = hotness_series(ts_sim, cfg.bin_width, n_bins)
    h_real = hotness_series(ts_real, cfg.bin_width, n_bins)
    rho, rmse = hotness_corr_rmse(h_sim, h_real)
    behavior = {"btype_jsd": btype, "act_rho": rho, "act_rmse": rmse}
    behavior["avg"] = layer_average([rho], [btype, rmse])

    # content
    tx_sim, tx_real = _texts(sim_acts), _texts(real_acts)
    content = {"irrat_sim": irrationality_similarity(tx_sim, tx_real), "ttr_delta": ttr_delta(tx_sim, tx_real),
               "sent_delta": sentiment_delta(tx_sim, tx_real)}
    content["avg"] = layer_average([content["irrat_sim"]], [content["ttr_delta"], content["sent_delta"]])

    # topology
    g_sim, g_real = interaction_graph(sim_acts), interaction_graph(real_acts)
    c_sim, c_real = cascade_sizes(sim_acts), cascade_sizes(real_acts)
    fit_c_sim, fit_c_real = _fit_alpha(c_sim, cfg.min_tail), _fit_alpha(c_real, cfg.min_tail)
    net = topology_similarity(g_sim, g_real) if g_sim.number_of_nodes() or g_real.number_of_nodes() else None
    topology = {"net_sim": net, "casc_sim": cascade_similarity(c_sim, c_real),
                "casc_pl": exponent_similarity(fit_c_sim.alpha, fit_c_real.alpha)}
    topology["avg"] = layer_average([topology["net_sim"], topology["casc_sim"], topology["casc_pl"]], [])

    # emergence
    n_win = int(math.floor(max((a.t for a in sim_acts + real_acts), default=0.0) / cfg.pi_window)) + 1
    pi_sim = pi_series(sim_acts, cfg.pi_window, cfg.n_boot, cfg.seed, n_windows=n_win)
    pi_real = pi_series(real_acts, cfg.pi_window, cfg.n_boot, cfg.seed, n_windows=n_win)
    fit_d_sim = _fit_alpha(degree_sequence(g_sim), cfg.min_tail)
    fit_d_real = _fit_alpha(degree_sequence(g_real), cfg.min_tail)
    emergence = {
        "pi_series": [asdict(x) for x in pi_sim],
        "pi_series_reference": [asdict(x) for x in pi_real],
        "arousal": arousal_metrics(sim_acts, cfg.pi_window, cfg.high_arousal, cfg.low_arousal),
        "arousal_reference": arousal_metrics(real_acts, cfg.pi_window, cfg.high_arousal, cfg.low_arousal),
        "degree_fit": fit_d_sim.to_dict(), "degree_fit_reference": fit_d_real.to_dict(),
        "cascade_fit": fit_c_sim.to_dict(), "cascade_fit_reference": fit_c_real.to_dict(),
    }

    header = {"jsd_log_base": JSD_LOG_BASE, "n_sim_actions": len(sim_acts), "n_reference_actions": len(real_acts),
              "bin_width": cfg.bin_width, "pi_window": cfg.pi_window, "hotness_actions": cfg.hotness_actions,
              "high_arousal": list(cfg.high_arousal), "low_arousal": list(cfg.low_arousal)}

    ns, nr = max_normalize(h_sim.counts), max_normalize(h_real.counts)
    cs, cr = np.cumsum(h_sim.counts), np.cumsum(h_real.counts)
    tables = {
        "hotness": [{"bin": i, "t_start": i * cfg.bin_width, "sim": float(h_sim.counts[i]),
                     "reference": float(h_real.counts[i]), "sim_norm": float(ns[i]), "reference_norm": float(nr[i]),
                     "sim_cumulative": float(cs[i] / cs[-1]) if cs[-1] else 0.0,
                     "reference_cumulative": float(cr[i] / cr[-1]) if cr[-1] else 0.0} for i in range(n_bins)],
        "action_distribution": [{"action_type": k, "sim": None if p is None else float(p[i]),
                                 "reference": None if q is None else float(q[i])}
                                for i, k in enumerate(ACTION_TYPES)],
        "pi_series": [dict(series="sim", **asdict(x)) for x in pi_sim]
                     + [dict(series="reference", **asdict(x)) for x in pi_real],
        "ccdf_cascade": _ccdf_rows("sim", fit_c_sim) + _ccdf_rows("reference", fit_c_real),
        "ccdf_degree": _ccdf_rows("sim", fit_d_sim) + _ccdf_rows("reference", fit_d_real),
    }
    return MetricReport(behavior, content, topology, emergence, header, tables)


def write_report(report: MetricReport, out_dir: str) -> Dict[str, str]:
    """report.json plus one CSV per plot-ready table."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"report": os.path.join(out_dir, "report.json")}
    with open(paths["report"], "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    for name, rows in report.tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        cols = list(rows[0]) if rows else ["empty"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for r in rows:
                w.writerow({k: ("" if v is None else v) for k, v in r.items()})
        paths[name] = path
    return paths

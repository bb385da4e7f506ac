"""Comparison metrics, emergence measures and report generation."""
from .emergence import arousal_metrics, emotion_outcomes, pi_series, polarization_index
from .logs import Act, SchemaError, load_actions, read_jsonl
from .metrics import (action_distribution, hotness_corr_rmse, hotness_series, irrationality_similarity, jsd,
                      sentiment_delta, ttr_delta, type_token_ratio)
from .powerlaw import PowerLawFit, fit_power_law, sample_discrete_power_law
from .report import MetricReport, ReportConfig, build_report, write_report
from .topology import cascade_similarity, cascade_sizes, exponent_similarity, interaction_graph, topology_similarity

__all__ = [
    "Act", "SchemaError", "load_actions", "read_jsonl", "jsd", "action_distribution", "hotness_series",
    "hotness_corr_rmse", "irrationality_similarity", "ttr_delta", "sentiment_delta", "type_token_ratio",
    "PowerLawFit", "fit_power_law", "sample_discrete_power_law", "polarization_index", "pi_series",
    "arousal_metrics", "emotion_outcomes", "interaction_graph", "topology_similarity", "cascade_sizes",
    "cascade_similarity", "exponent_similarity", "MetricReport", "ReportConfig", "build_report", "write_report",
]

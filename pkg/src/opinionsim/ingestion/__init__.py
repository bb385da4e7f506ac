"""Dataset schema, cleaning, roster initialization and synthetic data."""
from .initialize import InitConfig, assign_kind, derive_follow_edges, initial_emotion, initialize_agents
from .preprocess import Dataset, FilterConfig, PreprocessSummary, preprocess
from .schema import (HistoricalPost, ScenarioSpec, UserRecord, parse_records, read_follows, read_records,
                     write_records)
from .synthetic import SyntheticConfig, generate, scenario_events, synthetic_roster

__all__ = [
    "InitConfig", "assign_kind", "derive_follow_edges", "initial_emotion", "initialize_agents",
    "Dataset", "FilterConfig", "PreprocessSummary", "preprocess",
    "HistoricalPost", "ScenarioSpec", "UserRecord", "parse_records", "read_follows", "read_records",
    "write_records", "SyntheticConfig", "generate", "scenario_events", "synthetic_roster",
]

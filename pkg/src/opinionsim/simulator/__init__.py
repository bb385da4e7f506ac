"""Simulation loop, configuration and checkpointing."""
from .config import GatewayConfig, SimConfig, load_config, merge
from .engine import (
    CheckpointError,
    Roster,
    Simulation,
    StepRecord,
    build_gateway,
    checkpoint_bytes,
    latest_checkpoint,
    load_checkpoint,
    read_checkpoint,
    resume,
    run,
    save_checkpoint,
    truncate_logs,
)

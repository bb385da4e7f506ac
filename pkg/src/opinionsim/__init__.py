"""Hawkes-scheduled LLM agents on a simulated social platform."""

__version__ = "0.1.0"

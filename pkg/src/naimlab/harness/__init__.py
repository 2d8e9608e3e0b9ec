"""Batch experiment runner: specs in, CSV tables and JSON summaries out."""

from .core import (
    ExperimentReport,
    ExperimentSpec,
    RateFit,
    Recorder,
    RunContext,
    SpecError,
    load_specs,
    rate_fit,
    run,
    run_many,
)

__all__ = [
    "ExperimentReport",
    "ExperimentSpec",
    "RateFit",
    "Recorder",
    "RunContext",
    "SpecError",
    "load_specs",
    "rate_fit",
    "run",
    "run_many",
]

from .batch import WorldRef, run_batch
from .episode import CSV_HEADER, EpisodeRecord, StepRow, run_episode
from .metrics import MetricsSummary, compute_metrics

__all__ = [
    "run_episode",
    "EpisodeRecord",
    "StepRow",
    "CSV_HEADER",
    "compute_metrics",
    "MetricsSummary",
    "run_batch",
    "WorldRef",
]

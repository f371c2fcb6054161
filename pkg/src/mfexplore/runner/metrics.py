"""Episode metrics: coverage ratio/area, area per path length, success."""

from __future__ import annotations

from dataclasses import dataclass

from .episode import EpisodeRecord


@dataclass(frozen=True)
class MetricsSummary:
    cr: float  # mean coverage ratio over all world floors
    ca: float  # total covered area, m^2
    apl: float  # ca / path length (0 and flagged when no motion)
    sr: int  # 1 iff cr > 0.95
    steps: int
    path_length: float
    apl_degenerate: bool = False


def compute_metrics(record: EpisodeRecord, success_cr: float = 0.95) -> MetricsSummary:
    s = record.summary
    path_len = float(s["path_length"])
    ca = float(s["ca_total"])
    degenerate = path_len <= 0.0
    apl = 0.0 if degenerate else ca / path_len
    cr = float(s["mean_cr"])
    return MetricsSummary(
        cr=cr,
        ca=ca,
        apl=apl,
        sr=1 if cr > success_cr else 0,
        steps=int(s["total_steps"]),
        path_length=path_len,
        apl_degenerate=degenerate,
    )

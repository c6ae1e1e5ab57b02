"""Trace statistics.

Responsibilities:
- Length statistics (mean, p50/p95/p99) for prompts and generations
- Per-category request counts
- Reuse structure: share of reused blocks, skew curve, inter-reuse gaps

Public API:
- class TraceStats:
      to_dict() -> dict             # JSON-friendly
- trace_stats(trace) -> TraceStats
- reuse_skew(trace, fraction) -> float
- skew_curve(trace, fractions) -> list[tuple[float, float]]

Notes:
- A reuse event is every occurrence of a block id after its first.
- The skew curve ranks reused blocks (those with at least one reuse event)
  by reuse count; point (x, y) says the top x of them carry y of all events.
- Inter-reuse gaps are measured between consecutive accesses of the same
  block and attributed to the category of the later access.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
import math

import numpy as np

from .request import Category, Trace

SKEW_POINTS: Tuple[float, ...] = (0.01, 0.05, 0.10, 0.20, 0.50, 1.00)


@dataclass(slots=True)
class TraceStats:
    requests: int
    raw_qps: float
    mean_prompt: float
    mean_gen: float
    prompt_pct: Dict[str, float]
    gen_pct: Dict[str, float]
    per_category: Dict[str, int]
    distinct_blocks: int
    reuse_fraction: float
    reuse_events: int
    skew: List[Tuple[float, float]]
    inter_reuse: Dict[str, List[float]] = field(default_factory=dict)
    reordered: int = 0

    def to_dict(self) -> dict:
        return {
            "requests": self.requests,
            "raw_qps": self.raw_qps,
            "mean_prompt": self.mean_prompt,
            "mean_gen": self.mean_gen,
            "prompt_pct": dict(self.prompt_pct),
            "gen_pct": dict(self.gen_pct),
            "per_category": dict(self.per_category),
            "distinct_blocks": self.distinct_blocks,
            "reuse_fraction": self.reuse_fraction,
            "reuse_events": self.reuse_events,
            "skew": [[x, y] for x, y in self.skew],
            "inter_reuse_mean_s": {
                c: (float(np.mean(v)) if v else None) for c, v in self.inter_reuse.items()
            },
            "inter_reuse_samples": {c: len(v) for c, v in self.inter_reuse.items()},
            "reordered": self.reordered,
        }


def _block_counts(trace: Trace) -> np.ndarray:
    counts: Dict[int, int] = {}
    for r in trace.requests:
        for b in r.block_ids:
            counts[b] = counts.get(b, 0) + 1
    return np.fromiter(counts.values(), dtype=np.int64, count=len(counts))


def _sorted_reuse(trace: Trace) -> np.ndarray:
    reuse = _block_counts(trace) - 1
    reuse = reuse[reuse > 0]
    return np.sort(reuse)[::-1]


def _skew_at(sorted_reuse: np.ndarray, fraction: float) -> float:
    total = int(sorted_reuse.sum()) if sorted_reuse.size else 0
    if total == 0:
        return 0.0
    k = max(1, math.ceil(fraction * sorted_reuse.size - 1e-9))
    return float(sorted_reuse[:k].sum()) / total


def reuse_skew(trace: Trace, fraction: float = 0.10) -> float:
    """Share of reuse events carried by the hottest ``fraction`` of reused blocks.

    Returns 0.0 when the trace has no reuse.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    return _skew_at(_sorted_reuse(trace), fraction)


def skew_curve(trace: Trace, fractions: Sequence[float] = SKEW_POINTS) -> List[Tuple[float, float]]:
    ordered = _sorted_reuse(trace)
    return [(float(f), _skew_at(ordered, f)) for f in fractions]


def _pct(values: np.ndarray) -> Dict[str, float]:
    return {
        f"p{p}": float(np.percentile(values, p, method="inverted_cdf"))
        for p in (50, 95, 99)
    }


def trace_stats(trace: Trace) -> TraceStats:
    """Summarise lengths, categories and reuse structure of a trace.

    Raises:
        ValueError: If the trace is empty
    """
    if not trace.requests:
        raise ValueError("trace_stats needs a non-empty trace")

    prompts = np.array([r.prompt_len for r in trace.requests], dtype=np.float64)
    gens = np.array([r.gen_len for r in trace.requests], dtype=np.float64)

    per_category = {c.value: 0 for c in Category}
    inter_reuse: Dict[str, List[float]] = {c.value: [] for c in Category}
    last_seen: Dict[int, float] = {}
    for r in trace.requests:
        per_category[r.category.value] += 1
        gaps = inter_reuse[r.category.value]
        for b in r.block_ids:
            prev = last_seen.get(b)
            if prev is not None:
                gaps.append(r.arrival - prev)
            last_seen[b] = r.arrival

    counts = _block_counts(trace)
    reused = int(np.count_nonzero(counts > 1))
    ordered = np.sort(counts[counts > 1] - 1)[::-1]

    return TraceStats(
        requests=len(trace),
        raw_qps=trace.raw_qps,
        mean_prompt=float(prompts.mean()),
        mean_gen=float(gens.mean()),
        prompt_pct=_pct(prompts),
        gen_pct=_pct(gens),
        per_category=per_category,
        distinct_blocks=int(counts.size),
        reuse_fraction=reused / counts.size if counts.size else 0.0,
        reuse_events=int(ordered.sum()),
        skew=[(float(f), _skew_at(ordered, f)) for f in SKEW_POINTS],
        inter_reuse=inter_reuse,
        reordered=trace.reordered,
    )


__all__ = ["TraceStats", "trace_stats", "reuse_skew", "skew_curve", "SKEW_POINTS"]

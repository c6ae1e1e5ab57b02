"""RunMetrics serialization (JSON-friendly dicts, metrics.json, events.jsonl).

Latency series are summarised as nearest-rank percentiles. Per-request TTFT,
E2E, queue delay and mean TBT stay in the dict so reports can be re-derived
from stored files; the flattened TBT series is summarised only.
"""

from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence
import json
import logging

from ..harness.stats import percentile
from .metrics import RunMetrics

log = logging.getLogger("pimstack.engine.serialization")

SUMMARY_PERCENTILES = (50, 95, 99)


def summarize_series(values: Sequence[float]) -> Dict[str, Optional[float]]:
    """p50/p95/p99, mean and count; percentiles are None for an empty series."""
    out: Dict[str, Optional[float]] = {
        f"p{p}": (percentile(values, p) if values else None) for p in SUMMARY_PERCENTILES
    }
    out["mean"] = float(sum(values) / len(values)) if values else None
    out["n"] = len(values)
    return out


def serialize_metrics(m: RunMetrics, *, include_series: bool = True) -> Dict[str, Any]:
    """Build a JSON-compatible dict from run metrics.

    Args:
        m: Run metrics
        include_series: Also emit per-request series (ttft, e2e, queue_delay, tbt_mean)

    Returns:
        Dictionary with sorted keys in every nested mapping, so equal runs
        serialize to equal text.
    """
    out: Dict[str, Any] = {
        "mode": m.mode,
        "model": m.model,
        "qps": float(m.qps),
        "requests": m.requests,
        "feasible": m.feasible,
        "verdict": m.verdict,
    }
    if not m.feasible:
        return out
    out.update({
        "tp": m.tp,
        "groups": m.groups,
        "completed": m.completed,
        "rejected": m.rejected,
        "generated_tokens": m.generated_tokens,
        "steps": m.steps,
        "makespan_s": m.makespan,
        "token_throughput": m.token_throughput,
        "request_throughput": m.request_throughput,
        "latency": {
            "ttft": summarize_series(m.ttft),
            "tbt": summarize_series(m.tbt),
            "e2e": summarize_series(m.e2e),
            "queue_delay": summarize_series(m.queue_delay),
        },
        "hits": {
            "accesses": dict(m.hits.accesses),
            "bytes": dict(m.hits.bytes),
            "rates": m.hits.rates(),
            "hit_rate": m.hits.hit_rate,
        },
        "energy": m.energy.to_dict(),
        "energy_per_token": m.energy_per_token.to_dict(),
        "transfer_bytes": dict(sorted(m.transfer_bytes.items())),
        "ledger": {**m.ledger.to_dict(), "balance": m.ledger_balance},
        "metadata": {
            "records": m.metadata_records,
            "bytes": m.metadata_bytes,
            "peak_bytes": m.metadata_peak_bytes,
        },
        "layout_steps": dict(sorted(m.layout_steps.items())),
        "counters": dict(sorted(m.counters.items())),
    })
    if include_series:
        out["series"] = {
            "ttft": list(m.ttft),
            "e2e": list(m.e2e),
            "queue_delay": list(m.queue_delay),
            "tbt_mean": list(m.tbt_mean),
        }
    return out


def to_json(data: Dict[str, Any], *, indent: int | None = None) -> str:
    """Convert dict to JSON string (UTF-8 safe, compact by default)."""
    return json.dumps(data, ensure_ascii=False, indent=indent, separators=(",", ":") if indent is None else None)


def write_metrics(m: RunMetrics, path: str | Path, *, include_series: bool = True) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(to_json(serialize_metrics(m, include_series=include_series), indent=1) + "\n", encoding="utf-8")
    log.debug("Metrics written: %s", p)
    return p


def write_events(events: Iterable[Dict[str, Any]], path: str | Path) -> Path:
    """Write policy events as JSONL, one event per line."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(to_json(ev))
            fh.write("\n")
    return p


def read_metrics(path: str | Path) -> Dict[str, Any]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)


__all__ = [
    "SUMMARY_PERCENTILES", "summarize_series", "serialize_metrics",
    "to_json", "write_metrics", "write_events", "read_metrics",
]

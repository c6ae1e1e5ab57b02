"""Report emission and reload.

Layout of a report directory:

    summary.json            derived tables + cell index
    cells.csv               one row per (label, qps) cell
    energy_per_token.csv    five energy components + total per cell (J/token)
    cells/<label>_q<qps>/metrics.json
    cells/<label>_q<qps>/events.jsonl   (only when events were recorded)

Files carry no timestamps or host data; the same sweep writes the same bytes.
"""

from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, List, Optional
import csv
import json
import logging

from ..engine.energy import COMPONENTS
from ..engine.serialization import to_json, write_events
from .sweep import CellKey, SweepResult

log = logging.getLogger("pimstack.harness.report")

SUMMARY_FILE = "summary.json"
CELLS_CSV = "cells.csv"
ENERGY_CSV = "energy_per_token.csv"
CELL_DIR = "cells"

CELL_COLUMNS = (
    "label", "qps", "feasible", "verdict", "completed", "rejected",
    "token_throughput", "request_throughput", "normalized_throughput", "makespan_s",
    "ttft_p50", "ttft_p95", "ttft_p99",
    "tbt_p50", "tbt_p95", "tbt_p99",
    "e2e_p50", "e2e_p95", "e2e_p99",
    "queue_delay_p50", "queue_delay_p95",
    "hit_rate", "hit_rate_bytes", "energy_total_j", "energy_per_token_j",
)
ENERGY_COLUMNS = ("label", "qps", "feasible") + COMPONENTS + ("total",)


def cell_dirname(label: str, qps: float) -> str:
    safe = "".join(c if c.isalnum() or c in "-+." else "_" for c in label)
    return f"{safe}_q{qps:g}"


def _num(v: Any) -> Any:
    return "" if v is None else v


def _lat(m: Dict[str, Any], series: str, p: str) -> Any:
    return _num(m.get("latency", {}).get(series, {}).get(p))


def _cell_row(res: SweepResult, key: CellKey) -> Dict[str, Any]:
    m = res.cells[key]
    row: Dict[str, Any] = {c: "" for c in CELL_COLUMNS}
    row.update(label=key[0], qps=key[1], feasible=bool(m.get("feasible")),
               verdict=m.get("error") or m.get("verdict", ""))
    if not m.get("feasible"):
        return row
    hits = m.get("hits", {})
    row.update(
        completed=m.get("completed"),
        rejected=m.get("rejected"),
        token_throughput=m.get("token_throughput"),
        request_throughput=m.get("request_throughput"),
        normalized_throughput=_num(res.normalized.get(key)),
        makespan_s=m.get("makespan_s"),
        hit_rate=_num(hits.get("hit_rate")),
        hit_rate_bytes=_byte_hit_rate(hits),
        energy_total_j=_num(m.get("energy", {}).get("total")),
        energy_per_token_j=_num(m.get("energy_per_token", {}).get("total")),
    )
    for series in ("ttft", "tbt", "e2e"):
        for p in ("p50", "p95", "p99"):
            row[f"{series}_{p}"] = _lat(m, series, p)
    row["queue_delay_p50"] = _lat(m, "queue_delay", "p50")
    row["queue_delay_p95"] = _lat(m, "queue_delay", "p95")
    return row


def _byte_hit_rate(hits: Dict[str, Any]) -> Any:
    per_byte = hits.get("rates", {}).get("per_byte")
    if not per_byte or not any(per_byte.values()):
        return ""
    return 1.0 - per_byte.get("miss", 0.0)


def _energy_row(res: SweepResult, key: CellKey) -> Dict[str, Any]:
    m = res.cells[key]
    row: Dict[str, Any] = {"label": key[0], "qps": key[1], "feasible": bool(m.get("feasible"))}
    ept = m.get("energy_per_token", {}) if m.get("feasible") else {}
    for c in COMPONENTS + ("total",):
        row[c] = _num(ept.get(c))
    return row


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def summarize(res: SweepResult) -> Dict[str, Any]:
    """JSON-friendly summary: grid, derived tables and cell index."""
    order = [(lab, q) for lab in res.labels for q in res.qps]
    return {
        "name": res.name,
        "kind": res.kind,
        "model": res.model,
        "labels": list(res.labels),
        "qps": list(res.qps),
        "baseline": res.baseline,
        "slo_capacity": {lab: res.slo[lab] for lab in res.labels},
        "knee_qps": {lab: res.knee[lab] for lab in res.labels},
        "normalized_throughput": {lab: [res.normalized[(lab, q)] for q in res.qps] for lab in res.labels},
        "gmean_normalized": {lab: res.gmean[lab] for lab in res.labels},
        "amean_normalized": {lab: res.amean[lab] for lab in res.labels},
        "energy_throughput_r": {lab: res.energy_throughput_r[lab] for lab in res.labels},
        "increments": {lab: res.increments[lab] for lab in res.labels if lab in res.increments},
        "infeasible": [
            {"label": k[0], "qps": k[1], "verdict": res.cells[k].get("verdict"), "error": res.cells[k].get("error")}
            for k in res.infeasible
        ],
        "cells": [{"label": k[0], "qps": k[1], "path": f"{CELL_DIR}/{cell_dirname(*k)}"} for k in order],
    }


def emit_report(res: SweepResult, out_dir: str | Path) -> List[Path]:
    """Write summary.json, CSV tables and per-cell metrics (and events).

    Returns:
        Written paths in write order

    Raises:
        OSError: If the directory cannot be created or written
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    order = [(lab, q) for lab in res.labels for q in res.qps]
    for key in order:
        d = root / CELL_DIR / cell_dirname(*key)
        d.mkdir(parents=True, exist_ok=True)
        p = d / "metrics.json"
        p.write_text(to_json(res.cells[key], indent=1) + "\n", encoding="utf-8")
        written.append(p)
        events = res.events.get(key)
        if events is not None:
            written.append(write_events(events, d / "events.jsonl"))

    cells_csv = root / CELLS_CSV
    _write_csv(cells_csv, CELL_COLUMNS, (_cell_row(res, k) for k in order))
    energy_csv = root / ENERGY_CSV
    _write_csv(energy_csv, ENERGY_COLUMNS, (_energy_row(res, k) for k in order))
    summary = root / SUMMARY_FILE
    summary.write_text(to_json(summarize(res), indent=1) + "\n", encoding="utf-8")
    written += [cells_csv, energy_csv, summary]

    log.info("Report written: %s (%d cells)", root, len(order))
    return written


def load_sweep(out_dir: str | Path) -> SweepResult:
    """Rebuild a SweepResult (derived tables included) from an emitted report.

    Raises:
        FileNotFoundError: If summary.json or a cell's metrics.json is missing
    """
    root = Path(out_dir)
    summary_path = root / SUMMARY_FILE
    if not summary_path.is_file():
        raise FileNotFoundError(f"no {SUMMARY_FILE} in {root}")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))

    cells: Dict[CellKey, Dict[str, Any]] = {}
    events: Dict[CellKey, Optional[List[dict]]] = {}
    for entry in summary["cells"]:
        key = (str(entry["label"]), float(entry["qps"]))
        d = root / entry["path"]
        cells[key] = json.loads((d / "metrics.json").read_text(encoding="utf-8"))
        ev = d / "events.jsonl"
        events[key] = (
            [json.loads(line) for line in ev.read_text(encoding="utf-8").splitlines() if line.strip()]
            if ev.is_file() else None
        )
    log.debug("Sweep loaded: %s (%d cells)", root, len(cells))
    return SweepResult.from_cells(
        name=summary["name"], kind=summary["kind"], model=summary["model"],
        labels=summary["labels"], qps=summary["qps"], cells=cells,
        baseline=summary.get("baseline"), events=events,
    )


__all__ = [
    "SUMMARY_FILE", "CELLS_CSV", "ENERGY_CSV", "CELL_COLUMNS", "ENERGY_COLUMNS",
    "cell_dirname", "summarize", "emit_report", "load_sweep",
]

"""Sweep Driver - QPS sweeps across modes, ablations and topology variants.

Responsibilities:
- build_trace(): trace from file or preset (optional Zipf tuning)
- run_sweep(): every (mode, qps) cell of an ExperimentConfig
- run_ablation(): cumulative feature toggles on TokenStack
- run_topology_sweep(): capN-compM variants against the AttAcc reference
- SweepResult: cells plus derived tables (SLO capacity, knee, normalized
  throughput, geometric/arithmetic means, energy/throughput coupling)

Public API:
- class SweepResult:
      from_cells(...) -> SweepResult     # derive tables from serialized cells
      cell(mode, qps) -> dict
      curve(mode, metric) -> Curve
- build_trace(cfg) -> Trace
- run_sweep(cfg) -> SweepResult
- run_ablation(cfg) -> SweepResult
- run_topology_sweep(cfg) -> SweepResult

Notes:
- Cells are keyed (label, qps) and built in label-major order; the worker
  pool returns them in that order, so outputs never depend on completion order.
- Normalization divides by the baseline label's cell at the same qps; every
  label shares the one qps grid of the config.
- Derived tables only use serialized cell dicts, so load_sweep() can rebuild
  them from stored metrics.json files.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
import logging
import math

from ..model.config import get_model
from ..runtime.config import ABLATION_ORDER, AblationFlags
from ..stack.config import Mode
from ..trace.io import load_trace
from ..trace.request import Trace
from ..trace.synth import TRACE_PRESETS, synthesize_trace, tune_zipf_exponent
from .config import ExperimentConfig
from .stats import Curve, amean, gmean, knee_qps, pearson, slo_capacity
from .workers import CellTask, run_cells

log = logging.getLogger("pimstack.harness.sweep")

BASELINE_MODE = Mode.ATTACC.value
SLO_FACTOR = 2.0      # p50 E2E within 2x of the mode's own minimum
KNEE_FRACTION = 0.9   # share of peak throughput
ABLATION_BARE = "bare"

CellKey = Tuple[str, float]


def _dig(d: Mapping[str, Any], *path: str) -> Optional[float]:
    cur: Any = d
    for k in path:
        if not isinstance(cur, Mapping) or k not in cur:
            return None
        cur = cur[k]
    return None if cur is None else float(cur)


@dataclass(slots=True)
class SweepResult:
    """Cells of one sweep and the tables derived from them.

    Attributes:
        name: Experiment label
        kind: "modes", "ablation" or "topology"
        model: Model preset name
        labels: Row labels in sweep order (modes, ablation steps or variants)
        qps: Swept arrival rates (shared by every label)
        baseline: Label the throughput is normalized to
        cells: Serialized RunMetrics per (label, qps)
        events: Policy event lists per cell (None unless recorded)
        slo: SLO-compliant capacity per label (None with fewer than two qps points)
        knee: Knee QPS per label
        normalized: Token throughput / baseline throughput per cell (None if either is infeasible)
        gmean / amean: Means of the normalized throughput per label
        energy_throughput_r: Pearson r of per-token energy vs. throughput per label
        increments: Ablation only; relative gain of each step over its predecessor
    """
    name: str
    kind: str
    model: str
    labels: Tuple[str, ...]
    qps: Tuple[float, ...]
    baseline: Optional[str]
    cells: Dict[CellKey, Dict[str, Any]]
    events: Dict[CellKey, Optional[List[dict]]] = field(default_factory=dict)
    slo: Dict[str, Optional[float]] = field(default_factory=dict)
    knee: Dict[str, float] = field(default_factory=dict)
    normalized: Dict[CellKey, Optional[float]] = field(default_factory=dict)
    gmean: Dict[str, float] = field(default_factory=dict)
    amean: Dict[str, float] = field(default_factory=dict)
    energy_throughput_r: Dict[str, Optional[float]] = field(default_factory=dict)
    increments: Dict[str, Optional[float]] = field(default_factory=dict)

    def cell(self, label: str, qps: float) -> Dict[str, Any]:
        return self.cells[(label, float(qps))]

    def curve(self, label: str, *path: str) -> Curve:
        """(qps, value) pairs of one label; infeasible cells carry None."""
        return [
            (q, _dig(self.cells[(label, q)], *path) if self.cells[(label, q)].get("feasible") else None)
            for q in self.qps
        ]

    @property
    def infeasible(self) -> List[CellKey]:
        return [k for k in self._order() if not self.cells[k].get("feasible")]

    def _order(self) -> List[CellKey]:
        return [(lab, q) for lab in self.labels for q in self.qps]

    @classmethod
    def from_cells(
        cls,
        *,
        name: str,
        kind: str,
        model: str,
        labels: Sequence[str],
        qps: Sequence[float],
        cells: Mapping[CellKey, Dict[str, Any]],
        baseline: Optional[str] = None,
        events: Optional[Mapping[CellKey, Optional[List[dict]]]] = None,
    ) -> "SweepResult":
        """Build a result and derive its tables.

        Raises:
            ValueError: If a (label, qps) cell is missing
        """
        grid = tuple(float(q) for q in qps)
        missing = [(lab, q) for lab in labels for q in grid if (lab, q) not in cells]
        if missing:
            raise ValueError(f"sweep grid incomplete, missing cells: {missing}")
        res = cls(
            name=name, kind=kind, model=model, labels=tuple(labels), qps=grid,
            baseline=baseline if baseline in labels else None,
            cells={k: dict(v) for k, v in cells.items()},
            events=dict(events or {}),
        )
        res._derive()
        return res

    # ------------------------------------------------------------------
    # Derived tables
    # ------------------------------------------------------------------
    def _derive(self) -> None:
        for lab in self.labels:
            e2e = self.curve(lab, "latency", "e2e", "p50")
            self.slo[lab] = slo_capacity(e2e, SLO_FACTOR) if len(self.qps) >= 2 else None
            tput = self.curve(lab, "token_throughput")
            self.knee[lab] = knee_qps(tput, KNEE_FRACTION)

            pairs = [(t, e) for (_, t), (_, e) in zip(tput, self.curve(lab, "energy_per_token", "total"))
                     if t is not None and e is not None]
            r = pearson([p[0] for p in pairs], [p[1] for p in pairs]) if len(pairs) >= 2 else float("nan")
            self.energy_throughput_r[lab] = None if math.isnan(r) else r

        for lab in self.labels:
            vals: List[float] = []
            for q in self.qps:
                norm = self._normalize(lab, q)
                self.normalized[(lab, q)] = norm
                if norm is not None:
                    vals.append(norm)
            self.gmean[lab] = gmean(vals)
            self.amean[lab] = amean(vals)

        if self.kind == "ablation":
            for prev, lab in zip(self.labels, self.labels[1:]):
                ratios = []
                for q in self.qps:
                    a = _dig(self.cells[(prev, q)], "token_throughput")
                    b = _dig(self.cells[(lab, q)], "token_throughput")
                    if a and b:
                        ratios.append(b / a)
                self.increments[lab] = gmean(ratios) - 1.0 if ratios else None

    def _normalize(self, label: str, qps: float) -> Optional[float]:
        if self.baseline is None:
            return None
        base = self.cells[(self.baseline, qps)]
        cell = self.cells[(label, qps)]
        if not base.get("feasible") or not cell.get("feasible"):
            return None
        b = _dig(base, "token_throughput")
        v = _dig(cell, "token_throughput")
        if not b or v is None:
            return None
        return v / b


# ----------------------------------------------------------------------
# Trace
# ----------------------------------------------------------------------
def build_trace(cfg: ExperimentConfig) -> Trace:
    """Trace of the experiment: the JSONL file if set, else a synthesized preset.

    Raises:
        ValueError: Unknown trace preset
    """
    if cfg.trace_file:
        return load_trace(cfg.trace_file)
    if cfg.trace_preset not in TRACE_PRESETS:
        raise ValueError(f"unknown trace preset {cfg.trace_preset!r} (expected {', '.join(TRACE_PRESETS)})")
    spec = TRACE_PRESETS[cfg.trace_preset].with_(
        seed=cfg.seed if cfg.trace_seed is None else cfg.trace_seed,
        next_turn=dict(cfg.policy.next_turn),
    )
    if cfg.trace_requests is not None:
        spec = spec.with_(requests=cfg.trace_requests)
    if cfg.zipf_s is not None:
        spec = spec.with_(zipf_s=cfg.zipf_s)
    if cfg.think_time_s is not None:
        spec = spec.with_(think_time_s=cfg.think_time_s)
    if cfg.tune_zipf:
        spec = spec.with_(zipf_s=tune_zipf_exponent(spec, target=cfg.skew_target))
    trace = synthesize_trace(spec)
    log.info("Trace synthesized: %s, %d requests (zipf_s=%.3f, seed=%d)",
             cfg.trace_preset, len(trace), spec.zipf_s, spec.seed)
    return trace


# ----------------------------------------------------------------------
# Sweeps
# ----------------------------------------------------------------------
def _task(cfg: ExperimentConfig, trace: Trace, label: str, topo_name: str, qps: float,
          flags: Optional[AblationFlags] = None) -> CellTask:
    return CellTask(
        key=(label, float(qps)),
        model=get_model(cfg.model),
        trace=trace,
        topo=cfg.topology(topo_name),
        qps=float(qps),
        seed=cfg.seed,
        policy=cfg.policy,
        timing=cfg.timing,
        energy=cfg.energy,
        eviction=cfg.eviction,
        replication=cfg.replication,
        flags=cfg.flags if flags is None else flags,
        record_events=cfg.record_events,
    )


def _execute(cfg: ExperimentConfig, kind: str, labels: Sequence[str], tasks: Sequence[CellTask],
             baseline: Optional[str]) -> SweepResult:
    log.info("Sweep %s (%s): %d labels x %d qps, workers=%d", cfg.name, kind, len(labels), len(cfg.qps), cfg.workers)
    results = run_cells(tasks, workers=cfg.workers)
    cells: Dict[CellKey, Dict[str, Any]] = {}
    events: Dict[CellKey, Optional[List[dict]]] = {}
    for task, res in zip(tasks, results):
        key = (str(task.key[0]), float(task.key[1]))
        cells[key] = res["metrics"]
        events[key] = res.get("events")
        m = res["metrics"]
        if m.get("feasible"):
            log.info("Cell %s @ %g QPS: %.1f tok/s, p50 E2E %.3fs", key[0], key[1],
                     m["token_throughput"], m["latency"]["e2e"]["p50"] or float("nan"))
        else:
            log.info("Cell %s @ %g QPS: infeasible (%s)", key[0], key[1], m.get("verdict"))
    return SweepResult.from_cells(
        name=cfg.name, kind=kind, model=cfg.model, labels=labels, qps=cfg.qps,
        cells=cells, baseline=baseline, events=events,
    )


def run_sweep(cfg: ExperimentConfig, trace: Optional[Trace] = None) -> SweepResult:
    """Every (mode, qps) cell of ``cfg``, normalized to AttAcc when it is swept
    (else to the first mode). Infeasible cells are recorded and the sweep continues."""
    trace = build_trace(cfg) if trace is None else trace
    labels = [build_label(m) for m in cfg.modes]
    tasks = [_task(cfg, trace, lab, m, q) for lab, m in zip(labels, cfg.modes) for q in cfg.qps]
    baseline = BASELINE_MODE if BASELINE_MODE in labels else labels[0]
    return _execute(cfg, "modes", labels, tasks, baseline)


def ablation_steps() -> List[Tuple[str, AblationFlags]]:
    """(label, flags) for bare hardware plus each cumulative toggle."""
    steps = [(ABLATION_BARE, AblationFlags.cumulative(0))]
    steps += [(f"+{name}", AblationFlags.cumulative(i + 1)) for i, name in enumerate(ABLATION_ORDER)]
    return steps


def run_ablation(cfg: ExperimentConfig, trace: Optional[Trace] = None) -> SweepResult:
    """Cumulative toggles on TokenStack; normalized to bare hardware."""
    trace = build_trace(cfg) if trace is None else trace
    steps = ablation_steps()
    tasks = [_task(cfg, trace, lab, Mode.TOKENSTACK.value, q, flags) for lab, flags in steps for q in cfg.qps]
    return _execute(cfg, "ablation", [s[0] for s in steps], tasks, ABLATION_BARE)


def run_topology_sweep(cfg: ExperimentConfig, trace: Optional[Trace] = None) -> SweepResult:
    """capN-compM variants, with AttAcc as the normalization reference."""
    trace = build_trace(cfg) if trace is None else trace
    labels = [BASELINE_MODE] + [t for t in cfg.topologies if t != BASELINE_MODE]
    tasks = [_task(cfg, trace, lab, lab, q) for lab in labels for q in cfg.qps]
    return _execute(cfg, "topology", labels, tasks, BASELINE_MODE)


def build_label(name: str) -> str:
    """Canonical row label of a mode or variant name ("tokenstack" -> "TokenStack")."""
    try:
        return Mode.parse(name).value
    except ValueError:
        return name.strip().lower()


__all__ = [
    "BASELINE_MODE", "SLO_FACTOR", "KNEE_FRACTION", "ABLATION_BARE",
    "SweepResult", "build_trace", "build_label", "ablation_steps",
    "run_sweep", "run_ablation", "run_topology_sweep",
]

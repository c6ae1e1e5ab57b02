"""Simulation Facade - one (model, trace, topology, qps) run.

This module bootstraps a full run:
- trace rescaling to the target QPS
- node construction (tensor parallelism, capacity plan, residency)
- delegation into the event loop
- conversion of capacity infeasibility into an OOM verdict

Main entry point:
- `run(model, trace, topo, ...)` -> RunMetrics

See also:
- [loop] for event dispatch
- [state] for admission, demotion and step costing
"""

from __future__ import annotations
from typing import Optional
import logging
import time

from ..model.config import ModelConfig
from ..runtime.config import AblationFlags, EvictionConfig, PolicyConfig, ReplicationConfig
from ..stack.config import CapacityError, NodeTopology
from ..trace.request import Trace, rescale_qps
from .energy import EnergyParams
from .loop import run_loop
from .metrics import RunMetrics
from .state import Node
from .timing import TimingParams

log = logging.getLogger("pimstack.engine")

LOG_THRESHOLD_SECONDS = 60  # Warn when a single run takes longer (wall clock)


def run(
    model: ModelConfig,
    trace: Trace,
    topo: NodeTopology,
    *,
    policy: Optional[PolicyConfig] = None,
    timing: Optional[TimingParams] = None,
    energy: Optional[EnergyParams] = None,
    seed: int = 0,
    qps: Optional[float] = None,
    eviction: Optional[EvictionConfig] = None,
    replication: Optional[ReplicationConfig] = None,
    flags: Optional[AblationFlags] = None,
    record_events: bool = False,
) -> RunMetrics:
    """Serve every request of ``trace`` on ``topo`` and return the metrics.

    Args:
        model: Model preset
        trace: Requests to serve
        topo: Node topology (mode preset or capN-compM variant)
        policy / timing / energy / eviction / replication / flags: Parameter groups (defaults if None)
        seed: Recorded with the run; the engine itself draws no random numbers
        qps: Replay rate; None keeps the trace's own arrival times
        record_events: Keep policy events on the metrics for events.jsonl

    Returns:
        RunMetrics; feasible=False with an "OOM: ..." verdict when the node
        cannot hold the model.
    """
    if qps is not None and trace.requests:
        trace = rescale_qps(trace, qps)
    label_qps = float(qps) if qps is not None else trace.raw_qps

    try:
        node = Node(
            model, topo,
            policy=policy, eviction=eviction, replication=replication,
            timing=timing, energy=energy, flags=flags, record_events=record_events,
        )
    except CapacityError as e:
        log.info("Infeasible: %s / %s: %s", topo.label, model.name, e)
        return RunMetrics.infeasible(f"OOM: {e}", mode=topo.label, model=model.name,
                                     qps=label_qps, requests=len(trace))

    node.metrics.qps = label_qps
    node.metrics.requests = len(trace)
    log.info("Run start: %s / %s, %d requests at %.3f QPS (seed=%d)",
             topo.label, model.name, len(trace), label_qps, seed)

    t0 = time.perf_counter()
    events = run_loop(node, trace)
    metrics = node.finish()
    elapsed = time.perf_counter() - t0

    log.info("Run end: %s / %s, %d done, %d rejected, %.1f tok/s, %d events in %.2fs",
             topo.label, model.name, metrics.completed, metrics.rejected,
             metrics.token_throughput, events, elapsed)
    if elapsed > LOG_THRESHOLD_SECONDS:
        log.warning("Run took %.1fs (> %ds)", elapsed, LOG_THRESHOLD_SECONDS)
    return metrics


__all__ = ["run"]

"""Sweep Workers - cell execution and process lifecycle.

Responsibilities:
- CellTask: one (topology, qps, flags) cell of a sweep, picklable
- execute_cell(): run one cell in-process and serialize its metrics
- cell_entry(): child-process entry posting status dicts on a queue
- run_cells(): execute cells in-process or on a pool of 'spawn' children
- Process helpers (spawn, non-blocking queue reads, terminate/kill cleanup)

Public API:
- class CellTask
- execute_cell(task) -> dict                # {"key", "metrics", "events"}
- cell_entry(q, task) -> None               # child entry
- run_cells(tasks, workers=1) -> list[dict] # results in task order
- spawn_worker(target, *, args=(), kwargs=None, daemon=True) -> mp.Process
- cleanup_worker(p, timeout=2.0) -> None
- ctx(), make_queue(), qget_nowait(q), is_running(p), safe_join(p, timeout)

Usage:
    tasks = [CellTask(key=("TokenStack", 2.0), model=m, trace=tr, topo=topo, qps=2.0)]
    results = run_cells(tasks, workers=4)

Notes:
- Children post {"status": "ok", "key": ..., "result": {...}} or
  {"status": "error", "key": ..., "error": "..."}.
- A child that dies without posting is reported as an error for its cell.
- Results are returned in task order regardless of completion order.
- Does NOT configure logging (app responsibility).
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging
import multiprocessing as mp
import os
import queue as _queue
import signal
import time

from ..engine.energy import EnergyParams
from ..engine.serialization import serialize_metrics
from ..engine.simulation import run
from ..engine.timing import TimingParams
from ..model.config import ModelConfig
from ..runtime.config import AblationFlags, EvictionConfig, PolicyConfig, ReplicationConfig
from ..stack.config import NodeTopology
from ..trace.request import Trace

log = logging.getLogger("pimstack.harness.workers")

QUEUE_POLL_INTERVAL = 0.1  # Seconds between queue polls


@dataclass(frozen=True, slots=True)
class CellTask:
    """One sweep cell; every field must pickle under 'spawn'."""
    key: Tuple[Any, ...]
    model: ModelConfig
    trace: Trace
    topo: NodeTopology
    qps: float
    seed: int = 0
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    timing: TimingParams = field(default_factory=TimingParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    eviction: EvictionConfig = field(default_factory=EvictionConfig)
    replication: ReplicationConfig = field(default_factory=ReplicationConfig)
    flags: AblationFlags = field(default_factory=AblationFlags)
    record_events: bool = False


def execute_cell(task: CellTask) -> Dict[str, Any]:
    """Run one cell and return its serialized metrics (and events when recorded)."""
    m = run(
        task.model, task.trace, task.topo,
        policy=task.policy, timing=task.timing, energy=task.energy,
        seed=task.seed, qps=task.qps, eviction=task.eviction,
        replication=task.replication, flags=task.flags, record_events=task.record_events,
    )
    return {
        "key": list(task.key),
        "metrics": serialize_metrics(m),
        "events": list(m.events) if task.record_events else None,
    }


def cell_entry(q, task: CellTask) -> None:
    """Child entry: run the cell and post exactly one status message."""
    try:
        q.put({"status": "ok", "key": task.key, "result": execute_cell(task)})
    except KeyboardInterrupt:
        q.put({"status": "aborted", "key": task.key})
    except Exception as e:
        q.put({"status": "error", "key": task.key, "error": f"{type(e).__name__}: {e}"})


# -----------------------------------------------------------------------------
# Context & IPC helpers
# -----------------------------------------------------------------------------
def ctx() -> mp.context.BaseContext:
    """'spawn' context; children never inherit the parent's RNG or logging state."""
    return mp.get_context("spawn")


def make_queue() -> Any:
    q = ctx().Queue()
    log.debug("IPC queue created")
    return q


def qget_nowait(q) -> Any | None:
    """Non-blocking read; None if the queue is empty or unreadable."""
    try:
        return q.get_nowait()
    except _queue.Empty:
        return None
    except Exception as e:
        log.debug("Queue nowait read ignored error: %r", e)
        return None


def is_running(p: Optional[mp.Process]) -> bool:
    return bool(p and p.is_alive())


def safe_join(p: Optional[mp.Process], timeout: float | None = None) -> None:
    """Join with logging; never raises."""
    if p is None:
        return
    try:
        p.join(timeout=timeout)
    except Exception as e:
        log.warning("Join failed (pid=%s): %r", getattr(p, "pid", None), e)


# -----------------------------------------------------------------------------
# Process creation / cleanup
# -----------------------------------------------------------------------------
def spawn_worker(target: Callable, *, args=(), kwargs=None, daemon: bool = True) -> mp.Process:
    """Start ``target`` in a 'spawn' child (target must be top-level picklable)."""
    p = ctx().Process(target=target, args=args, kwargs=kwargs or {}, daemon=daemon)
    p.start()
    log.debug("Child started: target=%s pid=%s", getattr(target, "__name__", str(target)), p.pid)
    return p


def kill_process_hard(pid: Optional[int]) -> None:
    """SIGKILL; errors are swallowed."""
    if pid is None:
        return
    try:
        log.warning("Hard-Kill (SIGKILL) for pid=%s", pid)
        os.kill(pid, getattr(signal, "SIGKILL", signal.SIGTERM))
    except Exception as e:
        log.debug("Hard-Kill ignored error (pid=%s): %r", pid, e)


def cleanup_worker(p: Optional[mp.Process], timeout: float = 2.0) -> None:
    """terminate() -> join(timeout) -> hard kill if still alive. Never raises."""
    if p is None:
        return
    try:
        pid = getattr(p, "pid", None)
        if is_running(p):
            try:
                p.terminate()
            except Exception as e:
                log.debug("terminate() ignored error (pid=%s): %r", pid, e)
        safe_join(p, timeout=timeout)
        if is_running(p):
            log.warning("Cleanup: pid=%s still alive after terminate+join", pid)
            try:
                kill_process_hard(pid)
            finally:
                safe_join(p, timeout=timeout)
    except Exception as e:
        log.debug("cleanup_worker: ignored error: %r", e)


# -----------------------------------------------------------------------------
# Pool
# -----------------------------------------------------------------------------
def _error_result(task: CellTask, error: str) -> Dict[str, Any]:
    qps, mode = task.qps, task.topo.label
    return {
        "key": list(task.key),
        "metrics": {"mode": mode, "model": task.model.name, "qps": float(qps),
                    "requests": len(task.trace), "feasible": False, "verdict": "error", "error": error},
        "events": None,
    }


def run_cells(tasks: Sequence[CellTask], workers: int = 1) -> List[Dict[str, Any]]:
    """Execute cells, ``workers`` at a time, and return results in task order.

    Raises:
        ValueError: If workers < 1
        KeyboardInterrupt: After all children are cleaned up
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(tasks) <= 1:
        return [execute_cell(t) for t in tasks]

    results: Dict[int, Dict[str, Any]] = {}
    pending = list(enumerate(tasks))
    running: Dict[int, Tuple[mp.Process, Any]] = {}
    try:
        while pending or running:
            while pending and len(running) < workers:
                i, task = pending.pop(0)
                q = make_queue()
                running[i] = (spawn_worker(cell_entry, args=(q, task)), q)

            for i, (p, q) in list(running.items()):
                msg = qget_nowait(q)
                if msg is None and is_running(p):
                    continue
                if msg is None:
                    # Exited; the message may still be in flight.
                    msg = qget_nowait(q) or {"status": "error", "error": f"worker exited with code {p.exitcode}"}
                st = msg.get("status")
                if st == "ok":
                    results[i] = msg["result"]
                elif st == "aborted":
                    raise KeyboardInterrupt("cell aborted")
                else:
                    log.error("Cell %s failed: %s", tasks[i].key, msg.get("error"))
                    results[i] = _error_result(tasks[i], str(msg.get("error")))
                cleanup_worker(p)
                del running[i]
            time.sleep(QUEUE_POLL_INTERVAL)
    finally:
        for p, _ in running.values():
            cleanup_worker(p)
    return [results[i] for i in range(len(tasks))]


__all__ = [
    "QUEUE_POLL_INTERVAL", "CellTask", "execute_cell", "cell_entry", "run_cells",
    "spawn_worker", "cleanup_worker", "kill_process_hard",
    "ctx", "make_queue", "qget_nowait", "is_running", "safe_join",
]

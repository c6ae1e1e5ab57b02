"""Event Loop - Arrival → Step → Transfer → Refit.

This module contains the central discrete-event loop of one run.

Core Function:
- run_loop(): drain the event queue until every request has left the node

Responsibilities:
1. Arrivals: assign a home group, wake an idle group
2. StepComplete: account the finished step, plan and cost the next one
3. TransferComplete: background transfers (demotion, fanout, GC) land; an
   event whose transfer was pushed back by foreground traffic is re-queued
4. RefitCDF: periodic policy tick, re-armed while other events remain
5. Invariants: capacity conservation is checked after every event

Constants:
- MAX_EVENTS_DEFAULT: safety bound on processed events (None = unbounded)

See Also:
- state.py: Node / GroupState doing the per-event work
- simulation.py: run() facade calling run_loop()
"""

from __future__ import annotations
from typing import Optional
import logging

from ..trace.request import Trace
from .events import EventKind, EventQueue
from .state import GroupState, Node

log = logging.getLogger("pimstack.engine.loop")

MAX_EVENTS_DEFAULT: Optional[int] = None


def _wake(node: Node, q: EventQueue, grp: GroupState, now: float) -> None:
    started = node.start_step(grp, now)
    if started is not None:
        t_end, plan = started
        q.push(t_end, EventKind.STEP_COMPLETE, (grp.index, plan))


def run_loop(node: Node, trace: Trace, *, max_events: Optional[int] = MAX_EVENTS_DEFAULT) -> int:
    """Run every request of ``trace`` through ``node``.

    Args:
        node: Freshly built node
        trace: Arrival-sorted trace (already rescaled)
        max_events: Stop with RuntimeError after this many events (None = no bound)

    Returns:
        Number of processed events.

    Raises:
        RuntimeError: If max_events is exceeded
        CapacityError: If a tier exceeds its budget (engine bug)

    Note:
        Events at equal times run in insertion order; all arrivals are queued
        up front, so an arrival precedes a step completion at the same time.
    """
    q = EventQueue()
    for req in trace.requests:
        q.push(req.arrival, EventKind.ARRIVAL, req)
    if not q:
        return 0
    period = node.policy.refit_period_s
    q.push(trace.requests[0].arrival + period, EventKind.REFIT_CDF)

    processed = 0
    while q:
        ev = q.pop()
        now = ev.time
        processed += 1
        if max_events is not None and processed > max_events:
            raise RuntimeError(f"event bound {max_events} exceeded at t={now:.6f}")

        # ----------------------------------------------------------------
        # Dispatch
        # ----------------------------------------------------------------
        if ev.kind is EventKind.ARRIVAL:
            g = node.arrive(ev.payload)
            grp = node.groups[g]
            if not grp.busy:
                _wake(node, q, grp, now)
        elif ev.kind is EventKind.STEP_COMPLETE:
            g, plan = ev.payload
            grp = node.groups[g]
            node.complete_step(grp, plan, now)
            grp.busy = False
            _wake(node, q, grp, now)
        elif ev.kind is EventKind.TRANSFER_COMPLETE:
            booking = ev.payload
            if booking.end > now:
                q.push(booking.end, EventKind.TRANSFER_COMPLETE, booking)
                continue
            node.transfer_done(booking.xfer, now)
            grp = node.groups[booking.xfer.group]
            if booking.xfer.held and not grp.busy and grp.waiting:
                _wake(node, q, grp, now)
        elif ev.kind is EventKind.REFIT_CDF:
            node.refit(now)
            for grp in node.groups:
                if not grp.busy and grp.waiting:
                    _wake(node, q, grp, now)
            if q:
                q.push(now + period, EventKind.REFIT_CDF)

        for booking in node.drain_outbox():
            q.push(max(booking.end, now), EventKind.TRANSFER_COMPLETE, booking)
        node.residency.check()

    # Retire what finished with the last step
    for grp in node.groups:
        for a in [a for a in grp.running if a.done]:
            grp.retire(a, a.finished_at if a.finished_at is not None else 0.0)
        grp.running = [a for a in grp.running if not a.done]
        if grp.running or grp.waiting:
            log.warning("Group %d ended with %d running / %d waiting requests",
                        grp.index, len(grp.running), len(grp.waiting))
    log.debug("Event loop done: %d events", processed)
    return processed


__all__ = ["run_loop", "MAX_EVENTS_DEFAULT"]

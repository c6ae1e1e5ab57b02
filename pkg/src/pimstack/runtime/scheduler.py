"""Continuous-batching scheduler.

One call plans one step of one serving group:
1. retire finished requests (their slots free up in the same step)
2. admit arrived requests in FIFO order while slots and memory allow; a
   request that does not fit waits while the group still runs requests or
   has demotions in flight, otherwise it is rejected
3. fill the token budget with one decode token per running request
4. spend what is left on prefill chunks, oldest admission first

The same scheduler serves every stack organization.
"""

from __future__ import annotations
from collections import deque
from typing import Deque, List, Optional, Protocol
import logging

from ..trace.request import Request
from .config import PolicyConfig
from .state import ActiveRequest, StepPlan

log = logging.getLogger("pimstack.runtime.scheduler")


class SchedulableGroup(Protocol):
    waiting: Deque[Request]
    running: List[ActiveRequest]

    def try_admit(self, req: Request, now: float) -> Optional[ActiveRequest]: ...

    def retire(self, active: ActiveRequest, now: float) -> None: ...

    def reject(self, req: Request, now: float) -> None: ...

    def in_flight_bytes(self) -> float: ...


def schedule_step(state: SchedulableGroup, now: float, cfg: PolicyConfig) -> StepPlan:
    plan = StepPlan()

    finished = [a for a in state.running if a.done]
    if finished:
        for a in finished:
            state.retire(a, now)
        state.running = [a for a in state.running if not a.done]

    while state.waiting and len(state.running) < cfg.max_running:
        req = state.waiting[0]
        if req.arrival > now:
            break
        active = state.try_admit(req, now)
        if active is None:
            if state.running or state.in_flight_bytes() > 0:
                break
            state.waiting.popleft()
            state.reject(req, now)
            continue
        state.waiting.popleft()
        state.running.append(active)
        plan.admitted.append(active)

    budget = cfg.token_budget
    for a in state.running:
        if budget <= 0:
            break
        if a.in_decode:
            plan.decode.append(a)
            budget -= 1

    for a in state.running:
        if budget <= 0:
            break
        if a.in_prefill:
            n = min(cfg.chunk_tokens, a.prefill_left, budget)
            plan.prefill.append((a, n))
            budget -= n

    return plan


def make_waiting() -> Deque[Request]:
    return deque()


__all__ = ["SchedulableGroup", "schedule_step", "make_waiting"]

"""Simulation events and the event queue.

Events run in non-decreasing time order; equal times run in insertion order.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Tuple
import heapq


class EventKind(str, Enum):
    ARRIVAL = "arrival"
    STEP_COMPLETE = "step_complete"
    TRANSFER_COMPLETE = "transfer_complete"
    REFIT_CDF = "refit_cdf"


@dataclass(slots=True)
class Event:
    time: float
    kind: EventKind
    payload: Any = None
    seq: int = 0


@dataclass(slots=True)
class EventQueue:
    _heap: List[Tuple[float, int, Event]] = field(default_factory=list)
    _seq: int = 0

    def push(self, time: float, kind: EventKind, payload: Any = None) -> Event:
        if time < 0:
            raise ValueError(f"event time must be >= 0, got {time}")
        ev = Event(time, kind, payload, self._seq)
        heapq.heappush(self._heap, (time, self._seq, ev))
        self._seq += 1
        return ev

    def pop(self) -> Event:
        return heapq.heappop(self._heap)[2]

    def peek_time(self) -> float:
        return self._heap[0][0]

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


__all__ = ["EventKind", "Event", "EventQueue"]

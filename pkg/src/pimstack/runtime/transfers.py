"""Transfer descriptors and per-link scheduling.

Promotions and callbacks are latency-visible (foreground); demotions, replica
fanout and GC run in the background on whatever bandwidth the foreground
leaves. LinkScheduler keeps the two classes on separate clocks so a
foreground transfer finishes exactly when it would on an idle link, and
pushes back the background transfers it overlaps.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple

from ..stack.config import Path


class TransferKind(str, Enum):
    PROMOTION = "promotion"
    CALLBACK = "callback"
    DEMOTION = "demotion"
    REPLICA_FANOUT = "replica_fanout"
    GC = "gc"


class TransferClass(str, Enum):
    FOREGROUND = "foreground"
    BACKGROUND = "background"


_FOREGROUND = frozenset({TransferKind.PROMOTION, TransferKind.CALLBACK})


def classify_transfer(kind: TransferKind) -> TransferClass:
    return TransferClass.FOREGROUND if kind in _FOREGROUND else TransferClass.BACKGROUND


@dataclass(frozen=True, slots=True)
class Transfer:
    """One DMA descriptor.

    Attributes:
        kind: Transfer kind
        path: Link it uses
        nbytes: Bytes on the link
        group: Serving group that issues it
        block: Block id (0 for aggregated transfers)
        quantized: Passes through the K8V4 engine
        blocks: Number of KV blocks covered
        held: Compute-layer bytes held until the transfer lands
    """
    kind: TransferKind
    path: Path
    nbytes: float
    group: int
    block: int = 0
    quantized: bool = False
    blocks: int = 1
    held: float = 0.0

    @property
    def cls(self) -> TransferClass:
        return classify_transfer(self.kind)


@dataclass(eq=False, slots=True)
class Booking:
    """A transfer reserved on its link.

    ``end`` moves later when foreground traffic pre-empts a background
    transfer that is still in flight.
    """
    xfer: Transfer
    start: float
    end: float


class LinkScheduler:
    """Busy-until clocks per (group, path) and class.

    Foreground transfers see an idle link. Background transfers run back to
    back on the time the foreground leaves over.
    """

    def __init__(self) -> None:
        self._fg: Dict[Tuple[int, Path], float] = {}
        self._bg: Dict[Tuple[int, Path], float] = {}
        self._inflight: Dict[Tuple[int, Path], List[Booking]] = {}

    def schedule(self, xfer: Transfer, now: float, duration: float) -> Booking:
        """Reserve the link; the booking's ``end`` is the completion time."""
        key = (xfer.group, xfer.path)
        live = [b for b in self._inflight.get(key, ()) if b.end > now]
        self._inflight[key] = live
        if xfer.cls is TransferClass.FOREGROUND:
            start = max(now, self._fg.get(key, 0.0))
            end = start + duration
            self._fg[key] = end
            if duration > 0 and live:
                _preempt(live, start, end)
                self._bg[key] = max(self._bg.get(key, 0.0), live[-1].end)
            return Booking(xfer, start, end)
        start = max(now, self._bg.get(key, 0.0), self._fg.get(key, 0.0))
        booking = Booking(xfer, start, start + duration)
        self._bg[key] = booking.end
        live.append(booking)
        return booking

    def busy_until(self, group: int, path: Path) -> float:
        key = (group, path)
        return max(self._fg.get(key, 0.0), self._bg.get(key, 0.0))

    def in_flight(self, group: int, path: Path) -> List[Booking]:
        return list(self._inflight.get((group, path), ()))


def _preempt(live: List[Booking], start: float, end: float) -> None:
    """Pause background bookings while the link carries foreground [start, end)."""
    prev_end = start
    for b in live:
        if b.end <= start:
            continue
        if b.start < start:
            b.end += end - start
        else:
            dur = b.end - b.start
            b.start = max(b.start, end, prev_end)
            b.end = b.start + dur
        prev_end = b.end


__all__ = [
    "TransferKind", "TransferClass", "classify_transfer", "Transfer", "Booking", "LinkScheduler",
]

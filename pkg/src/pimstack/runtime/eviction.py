"""Compute-layer demotion.

Responsibilities:
- demotion_score(): lexicographic key (reuse probability, -offset, remote hits),
  smallest first: least reusable, deepest in the prompt, least remotely hit
- CandidateQueues: per-category min-heaps keyed (t_last, block_id) with lazy
  invalidation; only unpinned, unretained compute blocks are candidates
- select_victim(): category policy looks at the queue fronts only and picks the
  smallest score; LRU picks the oldest front
- run_demotion(): pop victims until occupancy <= theta_lo (or a byte target is
  freed) and hand them to the target, which returns the background transfers

Public API:
- demotion_score(b, now, cm) -> tuple
- class CandidateQueues: push(meta) / fronts() / pop(block) / __len__()
- select_victim(queues, metas, models, now, lru=False) -> int | None
- run_demotion(target, now, cfg, lru=False, need_bytes=0.0) -> list[Transfer]

Notes:
- Each selection costs O(|categories|) front inspections plus amortised heap
  cleanup; the loop ends after at most one iteration per candidate.
- Ties on the full score keep the earlier category in Category order.
"""

from __future__ import annotations
import heapq
from typing import Dict, List, Mapping, Optional, Protocol, Tuple

from ..stack.residency import Tier
from ..trace.request import Category
from .config import EvictionConfig
from .metadata import BlockMeta
from .reuse import CategoryModel, reuse_prob
from .transfers import Transfer

Score = Tuple[float, int, int]


def demotion_score(b: BlockMeta, now: float, cm: CategoryModel) -> Score:
    """Smaller demotes first: low reuse, then deep prompt offset, then few remote hits.

    Raises:
        ValueError: If the block is not compute-resident
    """
    if b.tier is not Tier.COMPUTE:
        raise ValueError(f"block {b.block_id:#x} is not compute-resident")
    return (reuse_prob(cm, max(0.0, now - b.t_last)), -b.offset, b.n_remote)


class CandidateQueues:
    """Per-category demotion candidates of one serving group."""

    def __init__(self) -> None:
        self._heaps: Dict[Category, List[Tuple[float, int, int]]] = {c: [] for c in Category}
        self._live: Dict[int, int] = {}  # block -> version of its valid entry

    def push(self, meta: BlockMeta) -> None:
        """(Re-)insert a block at its current t_last; older entries become stale."""
        self._live[meta.block_id] = meta.version
        heapq.heappush(self._heaps[meta.category], (meta.t_last, meta.block_id, meta.version))

    def discard(self, block: int) -> None:
        self._live.pop(block, None)

    def __contains__(self, block: int) -> bool:
        return block in self._live

    def __len__(self) -> int:
        return len(self._live)

    def fronts(self) -> List[Tuple[Category, int]]:
        """Valid front of every non-empty category, in Category order."""
        out: List[Tuple[Category, int]] = []
        for cat in Category:
            heap = self._heaps[cat]
            while heap:
                _, block, version = heap[0]
                if self._live.get(block) == version:
                    out.append((cat, block))
                    break
                heapq.heappop(heap)
        return out

    def pop(self, block: int) -> None:
        """Remove a selected front."""
        self._live.pop(block, None)

    def blocks(self) -> List[int]:
        return sorted(self._live)


def select_victim(
    queues: CandidateQueues,
    metas: Mapping[int, BlockMeta],
    models: Mapping[Category, CategoryModel],
    now: float,
    lru: bool = False,
) -> Optional[int]:
    best: Optional[int] = None
    best_key: Optional[tuple] = None
    for cat, block in queues.fronts():
        m = metas[block]
        key = (m.t_last, m.block_id) if lru else demotion_score(m, now, models[cat])
        if best_key is None or key < best_key:
            best, best_key = block, key
    return best


class DemotionTarget(Protocol):
    """What run_demotion needs from a serving group."""
    queues: CandidateQueues
    metas: Mapping[int, BlockMeta]
    models: Mapping[Category, CategoryModel]

    def occupancy(self) -> float: ...

    def demote(self, block: int, now: float) -> Tuple[Optional[Transfer], float]:
        """Demote or discard ``block``; returns (transfer or None, compute bytes freed)."""
        ...


def run_demotion(
    target: DemotionTarget,
    now: float,
    cfg: EvictionConfig,
    lru: bool = False,
    need_bytes: float = 0.0,
) -> List[Transfer]:
    """Demote until occupancy <= theta_lo and ``need_bytes`` are freed.

    Without a byte target the loop only runs when occupancy > theta_hi.
    """
    if need_bytes <= 0 and target.occupancy() <= cfg.theta_hi:
        return []
    transfers: List[Transfer] = []
    freed = 0.0
    while target.occupancy() > cfg.theta_lo or freed < need_bytes:
        victim = select_victim(target.queues, target.metas, target.models, now, lru)
        if victim is None:
            break
        target.queues.pop(victim)
        xfer, nbytes = target.demote(victim, now)
        freed += nbytes
        if xfer is not None:
            transfers.append(xfer)
    return transfers


__all__ = ["Score", "demotion_score", "CandidateQueues", "select_victim", "DemotionTarget", "run_demotion"]

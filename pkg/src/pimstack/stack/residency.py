"""Base-die residency table: layered address translation and byte accounting.

Responsibilities:
- Track where every KV block lives (serving group, tier, page) plus replicas
- Allocate pages per (group, tier) and map them to card/stack/bank
- Account bytes per tier, replica reserve and non-block reservations
- Check capacity conservation

Public API:
- class Tier(str, Enum):       compute | capacity | evicted
- class LayerKind(str, Enum):  compute | capacity
- class PhysicalLocation
- capacity_page_bank(p, B_cap) -> int
- class ResidencyTable:
      place(block, group, tier, nbytes) -> PhysicalLocation
      move(block, tier, nbytes) -> PhysicalLocation
      remove(block) -> Residency | None
      translate(block, group=None) -> PhysicalLocation | None
      add_replica(block, group, nbytes) / drop_replica(block, group)
      reserve(group, tier, nbytes) / release(group, tier, nbytes)
      hold(group, nbytes) / unhold(group, nbytes)   # compute bytes of in-flight demotions
      used(group, tier) / free(group, tier) / check()

Usage:
    table = ResidencyTable(groups=1, tp=1, stacks_per_gpu=5, comp_stacks=5, cap_stacks=5,
                           B=256, B_cap=64, comp_bytes=20e9, cap_bytes=32e9)
    loc = table.place(block_id, 0, Tier.COMPUTE, 368_640 * 16)
    table.move(block_id, Tier.CAPACITY, quantized_size(368_640 * 16))

Notes:
- One logical block has exactly one primary location; replicas are separate
  entries in the compute layers of other groups and never become primaries.
- Capacity-tier bytes are stored (quantized) bytes.
- A demoted block leaves the compute tier at once, but its bytes stay held
  until the DMA lands: held bytes reduce free() and not occupancy().
- translate() returns None for an unknown block: the caller treats it as a
  miss and recomputes the prefix.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple
import heapq

from ..layout.kv_layout import key_bank
from ..trace.request import BLOCK_TOKENS
from .config import CapacityError

_EPS = 1e-3  # bytes


class Tier(str, Enum):
    COMPUTE = "compute"
    CAPACITY = "capacity"
    EVICTED = "evicted"


class LayerKind(str, Enum):
    COMPUTE = "compute"
    CAPACITY = "capacity"


@dataclass(frozen=True, slots=True)
class PhysicalLocation:
    card: int
    stack: int
    layer_kind: LayerKind
    bank: int
    page_offset: int


@dataclass(slots=True)
class Residency:
    """Primary placement of one block."""
    group: int
    tier: Tier
    page: int
    nbytes: float


def capacity_page_bank(p: int, B_cap: int) -> int:
    """Bank of capacity page p under page interleaving: p mod B_cap."""
    if B_cap < 1:
        raise ValueError(f"B_cap must be >= 1, got {B_cap}")
    return p % B_cap


class _PageAllocator:
    """Lowest-free-page allocator."""
    __slots__ = ("_free", "_next")

    def __init__(self) -> None:
        self._free: List[int] = []
        self._next = 0

    def take(self) -> int:
        if self._free:
            return heapq.heappop(self._free)
        p = self._next
        self._next += 1
        return p

    def give(self, page: int) -> None:
        heapq.heappush(self._free, page)


class ResidencyTable:
    """Residency of KV blocks across the serving groups of one node."""

    def __init__(
        self,
        groups: int,
        tp: int,
        stacks_per_gpu: int,
        comp_stacks: int,
        cap_stacks: int,
        B: int,
        B_cap: int,
        comp_bytes: float,
        cap_bytes: float,
        reserve_bytes: float = 0.0,
    ) -> None:
        if groups < 1 or tp < 1:
            raise ValueError("groups and tp must be >= 1")
        self.groups = groups
        self.tp = tp
        self.stacks_per_gpu = stacks_per_gpu
        self.comp_stacks = max(1, comp_stacks)
        self.cap_stacks = max(1, cap_stacks)
        self.B = max(1, B)
        self.B_cap = B_cap
        self._capacity = {Tier.COMPUTE: float(comp_bytes), Tier.CAPACITY: float(cap_bytes)}
        self._reserve_cap = float(reserve_bytes)

        self._primary: Dict[int, Residency] = {}
        self._replicas: Dict[int, Dict[int, Tuple[int, float]]] = {}  # block -> group -> (page, bytes)
        self._used: Dict[Tuple[int, Tier], float] = {}
        self._reserved: Dict[Tuple[int, Tier], float] = {}
        self._replica_used: List[float] = [0.0] * groups
        self._held: List[float] = [0.0] * groups
        self._pages: Dict[Tuple[int, str], _PageAllocator] = {}

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------
    def __contains__(self, block: int) -> bool:
        return block in self._primary

    def __len__(self) -> int:
        return len(self._primary)

    def entry(self, block: int) -> Optional[Residency]:
        return self._primary.get(block)

    def capacity(self, group: int, tier: Tier) -> float:
        return self._capacity.get(tier, 0.0)

    def used(self, group: int, tier: Tier) -> float:
        """Block bytes plus reservations in one tier of one group."""
        key = (group, tier)
        return self._used.get(key, 0.0) + self._reserved.get(key, 0.0)

    def block_bytes(self, group: int, tier: Tier) -> float:
        return self._used.get((group, tier), 0.0)

    def reserved(self, group: int, tier: Tier) -> float:
        return self._reserved.get((group, tier), 0.0)

    def held(self, group: int) -> float:
        return self._held[group]

    def free(self, group: int, tier: Tier) -> float:
        held = self._held[group] if tier is Tier.COMPUTE else 0.0
        return max(0.0, self.capacity(group, tier) - self.used(group, tier) - held)

    def occupancy(self, group: int, tier: Tier = Tier.COMPUTE) -> float:
        cap = self.capacity(group, tier)
        return self.used(group, tier) / cap if cap > 0 else 1.0

    def replica_capacity(self, group: int) -> float:
        return self._reserve_cap

    def replica_used(self, group: int) -> float:
        return self._replica_used[group]

    def replica_free(self, group: int) -> float:
        return max(0.0, self._reserve_cap - self._replica_used[group])

    def replica_groups(self, block: int) -> List[int]:
        return sorted(self._replicas.get(block, {}))

    def has_replica(self, block: int, group: int) -> bool:
        return group in self._replicas.get(block, {})

    # ------------------------------------------------------------------
    # Translation
    # ------------------------------------------------------------------
    def _location(self, group: int, kind: LayerKind, page: int) -> PhysicalLocation:
        per_card = self.comp_stacks if kind is LayerKind.COMPUTE else self.cap_stacks
        n_stacks = self.tp * per_card
        slot = page % n_stacks
        offset = page // n_stacks
        card = group * self.tp + slot // per_card
        if kind is LayerKind.COMPUTE:
            bank = key_bank(offset * BLOCK_TOKENS, self.B)
        else:
            bank = capacity_page_bank(offset, self.B_cap)
        return PhysicalLocation(card=card, stack=slot % per_card, layer_kind=kind, bank=bank, page_offset=offset)

    def translate(self, block: int, group: Optional[int] = None) -> Optional[PhysicalLocation]:
        """Current physical location of a block; a replica on ``group`` wins over the primary.

        Returns None if the block is not resident.
        """
        if group is not None:
            rep = self._replicas.get(block, {}).get(group)
            if rep is not None:
                return self._location(group, LayerKind.COMPUTE, rep[0])
        e = self._primary.get(block)
        if e is None or e.tier is Tier.EVICTED:
            return None
        kind = LayerKind.COMPUTE if e.tier is Tier.COMPUTE else LayerKind.CAPACITY
        return self._location(e.group, kind, e.page)

    # ------------------------------------------------------------------
    # Mutation
    # ------------------------------------------------------------------
    def _alloc(self, group: int, pool: str) -> _PageAllocator:
        key = (group, pool)
        a = self._pages.get(key)
        if a is None:
            a = self._pages[key] = _PageAllocator()
        return a

    def _add(self, group: int, tier: Tier, nbytes: float) -> None:
        key = (group, tier)
        self._used[key] = self._used.get(key, 0.0) + nbytes

    def place(self, block: int, group: int, tier: Tier, nbytes: float) -> PhysicalLocation:
        """Register a new primary copy.

        Raises:
            ValueError: If the block is already resident or tier is EVICTED
            CapacityError: If the tier lacks free bytes
        """
        if block in self._primary:
            raise ValueError(f"block {block:#x} already resident")
        if tier is Tier.EVICTED:
            raise ValueError("cannot place a block in the evicted tier")
        if nbytes > self.free(group, tier) + _EPS:
            raise CapacityError(f"group {group} {tier.value}: {nbytes:.0f} B requested, {self.free(group, tier):.0f} B free")
        page = self._alloc(group, tier.value).take()
        self._primary[block] = Residency(group, tier, page, float(nbytes))
        self._add(group, tier, nbytes)
        return self._location(group, LayerKind(tier.value), page)

    def move(self, block: int, tier: Tier, nbytes: float) -> PhysicalLocation:
        """Move a primary copy to another tier of the same group (promotion/demotion)."""
        e = self._primary.get(block)
        if e is None:
            raise KeyError(block)
        if tier is e.tier:
            raise ValueError(f"block {block:#x} already in {tier.value}")
        if tier is Tier.EVICTED:
            raise ValueError("use remove() to evict")
        if nbytes > self.free(e.group, tier) + _EPS:
            raise CapacityError(f"group {e.group} {tier.value}: {nbytes:.0f} B requested, {self.free(e.group, tier):.0f} B free")
        self._add(e.group, e.tier, -e.nbytes)
        self._alloc(e.group, e.tier.value).give(e.page)
        e.tier, e.nbytes = tier, float(nbytes)
        e.page = self._alloc(e.group, tier.value).take()
        self._add(e.group, tier, e.nbytes)
        return self._location(e.group, LayerKind(tier.value), e.page)

    def remove(self, block: int) -> Optional[Residency]:
        """Drop the primary copy (and any replicas). Returns the old entry."""
        e = self._primary.pop(block, None)
        if e is None:
            return None
        self._add(e.group, e.tier, -e.nbytes)
        self._alloc(e.group, e.tier.value).give(e.page)
        for g in list(self._replicas.get(block, {})):
            self.drop_replica(block, g)
        return e

    def add_replica(self, block: int, group: int, nbytes: float) -> PhysicalLocation:
        """Place a replica in the compute-layer reserve of ``group``.

        Raises:
            CapacityError: If the reserve is full
            ValueError: If the block has no compute primary or already lives on group
        """
        e = self._primary.get(block)
        if e is None or e.tier is not Tier.COMPUTE:
            raise ValueError(f"block {block:#x} has no compute-resident primary")
        if e.group == group or self.has_replica(block, group):
            raise ValueError(f"block {block:#x} already on group {group}")
        if nbytes > self.replica_free(group) + _EPS:
            raise CapacityError(f"group {group}: replica reserve full")
        page = self._alloc(group, "replica").take()
        self._replicas.setdefault(block, {})[group] = (page, float(nbytes))
        self._replica_used[group] += nbytes
        return self._location(group, LayerKind.COMPUTE, page)

    def drop_replica(self, block: int, group: int) -> float:
        reps = self._replicas.get(block)
        if not reps or group not in reps:
            return 0.0
        page, nbytes = reps.pop(group)
        if not reps:
            del self._replicas[block]
        self._replica_used[group] -= nbytes
        self._alloc(group, "replica").give(page)
        return nbytes

    def reserve(self, group: int, tier: Tier, nbytes: float) -> None:
        """Account non-block bytes (generation KV, callback copies).

        Raises:
            CapacityError: If the tier lacks free bytes
        """
        if nbytes > self.free(group, tier) + _EPS:
            raise CapacityError(f"group {group} {tier.value}: cannot reserve {nbytes:.0f} B")
        key = (group, tier)
        self._reserved[key] = self._reserved.get(key, 0.0) + nbytes

    def release(self, group: int, tier: Tier, nbytes: float) -> None:
        key = (group, tier)
        left = self._reserved.get(key, 0.0) - nbytes
        if left < -_EPS:
            raise ValueError(f"group {group} {tier.value}: releasing more than reserved")
        self._reserved[key] = max(0.0, left)

    def hold(self, group: int, nbytes: float) -> None:
        """Keep compute bytes of a demoted block until its transfer completes."""
        self._held[group] += nbytes

    def unhold(self, group: int, nbytes: float) -> None:
        left = self._held[group] - nbytes
        if left < -_EPS:
            raise ValueError(f"group {group}: releasing more held bytes than in flight")
        self._held[group] = max(0.0, left)

    # ------------------------------------------------------------------
    # Invariants
    # ------------------------------------------------------------------
    def check(self) -> None:
        """Raise CapacityError if any tier or replica reserve is over its budget."""
        for g in range(self.groups):
            for tier in (Tier.COMPUTE, Tier.CAPACITY):
                used = self.used(g, tier) + (self._held[g] if tier is Tier.COMPUTE else 0.0)
                if used > self.capacity(g, tier) + _EPS:
                    raise CapacityError(
                        f"group {g} {tier.value}: {used:.0f} B used > {self.capacity(g, tier):.0f} B"
                    )
            if self._replica_used[g] > self._reserve_cap + _EPS:
                raise CapacityError(f"group {g}: replica bytes exceed reserve")


def translate(block: int, table: ResidencyTable, group: Optional[int] = None) -> Optional[PhysicalLocation]:
    """Physical location of ``block``; None signals a miss (recompute by prefill)."""
    return table.translate(block, group)


__all__ = [
    "Tier", "LayerKind", "PhysicalLocation", "Residency", "ResidencyTable", "capacity_page_bank", "translate",
]

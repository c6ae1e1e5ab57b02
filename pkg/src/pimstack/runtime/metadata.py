"""Per-block metadata record.

BlockMeta carries what the eviction and replication policies read: category,
last access, prompt offset, remote hits and the set of accessing groups. The
base die keeps this as a compact record; META_DTYPE is that packed layout and
pack_table() builds the table the engine charges against the base die.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from ..stack.residency import Tier
from ..trace.request import Category

# Packed record as the base die stores it
META_DTYPE = np.dtype([
    ("block_id", "<u8"),
    ("t_last", "<f4"),
    ("offset", "<u4"),
    ("n_remote", "<u2"),
    ("cards", "<u1"),      # bitmask of accessing groups
    ("category", "<u1"),
    ("home", "<u2"),       # group << 8 | stack
    ("flags", "<u1"),      # tier (2 bits) | quantized (1 bit)
])
META_RECORD_BYTES = 32   # slot size; META_DTYPE packs into 23 B

_CATEGORY_CODE = {c: i for i, c in enumerate(Category)}
_TIER_CODE = {t: i for i, t in enumerate(Tier)}


@dataclass(slots=True)
class BlockMeta:
    """Metadata of one KV block.

    Attributes:
        block_id: 64-bit block hash
        category: Category of the request that created the block
        t_last: Last access (s)
        offset: Token offset of the block within its prompt
        n_remote: Remote hits (callbacks) served from this block
        cards: Bitmask of serving groups that accessed the block
        home: (group, stack) of the primary copy
        tier: Current tier
        quantized: Stored K8V4 (capacity tier only)
        bytes_fp16: Unquantized size
        pins: Running requests using the block
        retained_until: Retention deadline (s), 0 when not retained
        evicted_at: Time of eviction, for metadata GC
        version: Bumped on every change that invalidates queue entries
    """
    block_id: int
    category: Category
    t_last: float
    offset: int
    bytes_fp16: int
    home: Tuple[int, int] = (0, 0)
    n_remote: int = 0
    cards: int = 0
    tier: Tier = Tier.COMPUTE
    quantized: bool = False
    pins: int = 0
    retained_until: float = 0.0
    evicted_at: float = 0.0
    version: int = 0

    @property
    def n_cards(self) -> int:
        """Distinct serving groups that accessed the block (one group spans tp cards)."""
        return bin(self.cards).count("1")

    @property
    def group(self) -> int:
        return self.home[0]

    def mark_access(self, group: int, now: float) -> float:
        """Record an access from ``group``; returns the gap since the previous access."""
        gap = max(0.0, now - self.t_last)
        self.t_last = now
        self.cards |= 1 << group
        self.version += 1
        return gap

    def pack(self) -> np.void:
        rec = np.zeros((), dtype=META_DTYPE)
        rec["block_id"] = self.block_id
        rec["t_last"] = self.t_last
        rec["offset"] = self.offset
        rec["n_remote"] = min(self.n_remote, 0xFFFF)
        rec["cards"] = self.cards & 0xFF
        rec["category"] = _CATEGORY_CODE[self.category]
        rec["home"] = (self.home[0] & 0xFF) << 8 | (self.home[1] & 0xFF)
        rec["flags"] = _TIER_CODE[self.tier] | (int(self.quantized) << 2)
        return rec[()]


def pack_table(metas: Iterable[BlockMeta]) -> np.ndarray:
    """Packed metadata table, one META_DTYPE record per block."""
    records = list(metas)
    table = np.zeros(len(records), dtype=META_DTYPE)
    for i, m in enumerate(records):
        table[i] = m.pack()
    return table


__all__ = ["BlockMeta", "META_DTYPE", "META_RECORD_BYTES", "pack_table"]

"""Prefix replication.

A compute-resident block is copied into the replica reserve of the groups that
keep calling it back when it passes three gates: it sits early in the prompt
(offset <= tau_off), it is shared widely (n_cards > tau_cards) and it is hot
remotely (n_remote > tau_hits). Replicas are revoked when, over a check
window, they eliminate too small a share of the block's remote accesses.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, List, Tuple

from .config import ReplicationConfig
from .metadata import BlockMeta


def replication_gate(b: BlockMeta, rc: ReplicationConfig) -> bool:
    return b.offset <= rc.tau_off and b.n_cards > rc.tau_cards and b.n_remote > rc.tau_hits


@dataclass(slots=True)
class ReplicaStats:
    """Window counters of one replica.

    eliminated: remote accesses the replica served locally
    accesses: remote accesses of the block from any non-primary group
    """
    created_at: float
    eliminated: int = 0
    accesses: int = 0

    @property
    def ratio(self) -> float:
        return self.eliminated / self.accesses if self.accesses else 0.0

    def reset(self) -> None:
        self.eliminated = 0
        self.accesses = 0


def replica_revoke_check(stats: ReplicaStats, rc: ReplicationConfig) -> bool:
    """True (revoke) iff the callback-elimination ratio is below the threshold.

    An idle window (no accesses) counts as ratio 0.
    """
    return stats.ratio < rc.revoke_threshold


class ReplicaBook:
    """Window statistics of all live replicas."""

    def __init__(self) -> None:
        self._stats: Dict[Tuple[int, int], ReplicaStats] = {}
        self._by_block: Dict[int, List[int]] = {}

    def __len__(self) -> int:
        return len(self._stats)

    def add(self, block: int, group: int, now: float) -> None:
        self._stats[(block, group)] = ReplicaStats(created_at=now)
        self._by_block.setdefault(block, []).append(group)

    def remove(self, block: int, group: int) -> None:
        self._stats.pop((block, group), None)
        groups = self._by_block.get(block)
        if groups and group in groups:
            groups.remove(group)
            if not groups:
                del self._by_block[block]

    def forget(self, block: int) -> None:
        for g in list(self._by_block.get(block, ())):
            self.remove(block, g)

    def record_remote_access(self, block: int, group: int) -> bool:
        """Count a remote access of ``block`` from ``group``; True if a replica served it."""
        groups = self._by_block.get(block)
        if not groups:
            return False
        served = group in groups
        for g in groups:
            st = self._stats[(block, g)]
            st.accesses += 1
            if g == group:
                st.eliminated += 1
        return served

    def revoke_pass(self, rc: ReplicationConfig, now: float, min_age: float = 0.0) -> List[Tuple[int, int]]:
        """Replicas to revoke; surviving replicas start a fresh window."""
        out: List[Tuple[int, int]] = []
        for key in sorted(self._stats):
            st = self._stats[key]
            if now - st.created_at < min_age:
                continue
            if replica_revoke_check(st, rc):
                out.append(key)
            else:
                st.reset()
        return out


__all__ = ["replication_gate", "ReplicaStats", "replica_revoke_check", "ReplicaBook"]

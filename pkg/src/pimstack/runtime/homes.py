"""Home assignment.

A new request goes to the serving group that holds the longest
compute-resident run of its leading blocks, so its prefix hits stay local.
"""

from __future__ import annotations
from typing import Dict, Mapping, Optional, Sequence, Tuple


def prefix_groups(block_ids: Sequence[int], index: Mapping[int, int]) -> Dict[int, int]:
    """Blocks per group along the resident leading prefix (stops at the first miss)."""
    counts: Dict[int, int] = {}
    for b in block_ids:
        g = index.get(b)
        if g is None:
            break
        counts[g] = counts.get(g, 0) + 1
    return counts


def least_loaded(loads: Sequence[float]) -> int:
    return min(range(len(loads)), key=lambda g: (loads[g], g))


def assign_home(
    block_ids: Sequence[int],
    index: Mapping[int, int],
    loads: Sequence[float],
    slack: Optional[float] = None,
    stacks: int = 1,
    request_id: int = 0,
) -> Tuple[int, int]:
    """(group, stack) for a new request.

    Args:
        block_ids: Prompt block ids
        index: Compute-resident block -> group
        loads: Current load per group (fraction of compute capacity, waiting demand included)
        slack: Use the least-loaded group when the prefix group exceeds the
            minimum load by more than this (None disables the override)
        stacks: Stacks per group; the home stack is spread round-robin by request id
        request_id: Request id

    Ties on prefix length go to the lower load, then the lower index.
    """
    if not loads:
        raise ValueError("loads must not be empty")
    counts = prefix_groups(block_ids, index)
    if counts:
        group = min(counts, key=lambda g: (-counts[g], loads[g], g))
        if slack is not None and loads[group] > min(loads) + slack:
            group = least_loaded(loads)
    else:
        group = least_loaded(loads)
    return group, request_id % max(1, stacks)


__all__ = ["assign_home", "prefix_groups", "least_loaded"]

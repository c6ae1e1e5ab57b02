"""Prefix retention for multi-turn conversations.

When a request finishes, the first blocks of its prompt stay pinned in compute
layers if its category is likely to send a next turn. Each conversation may
hold at most ``budget`` retained blocks; release happens after the category
lifespan.
"""

from __future__ import annotations
from typing import Dict, List, Sequence

from ..trace.request import Category


def prefix_retention(
    block_ids: Sequence[int],
    category: Category,
    next_turn: Dict[Category, float],
    threshold: float = 0.5,
    budget: int = 32,
    already_retained: int = 0,
) -> List[int]:
    """Blocks to keep: the first k of the prompt, or none.

    k is bounded by the conversation's remaining budget. Categories whose
    next-turn probability does not exceed ``threshold`` keep nothing.
    """
    if next_turn.get(category, 0.0) <= threshold:
        return []
    k = max(0, min(len(block_ids), budget - already_retained))
    return list(block_ids[:k])


class RetentionBook:
    """Retained-block counts per conversation."""

    def __init__(self) -> None:
        self._count: Dict[int, int] = {}
        self._owner: Dict[int, int] = {}  # block -> conversation

    def retained(self, conversation: int) -> int:
        return self._count.get(conversation, 0)

    def keep(self, conversation: int, blocks: Sequence[int]) -> List[int]:
        """Register blocks; ones already retained by any conversation are skipped."""
        added = [b for b in blocks if b not in self._owner]
        for b in added:
            self._owner[b] = conversation
        if added:
            self._count[conversation] = self._count.get(conversation, 0) + len(added)
        return added

    def release(self, block: int) -> bool:
        conv = self._owner.pop(block, None)
        if conv is None:
            return False
        left = self._count.get(conv, 0) - 1
        if left > 0:
            self._count[conv] = left
        else:
            self._count.pop(conv, None)
        return True

    def __contains__(self, block: int) -> bool:
        return block in self._owner

    def __len__(self) -> int:
        return len(self._owner)


__all__ = ["prefix_retention", "RetentionBook"]

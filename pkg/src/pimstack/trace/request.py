"""Serving requests and traces.

Responsibilities:
- Request: one serving request (arrival, category, lengths, hashed block ids)
- Trace: immutable, arrival-sorted request list with its raw arrival rate
- rescale_qps(): replay a trace at a different arrival rate

Public API:
- BLOCK_TOKENS: int                 # Tokens per KV block (hash granularity)
- class Category(str, Enum):        # API / Text / Code / Thinking
- class Request:
      n_blocks: int                 # == ceil(prompt_len / BLOCK_TOKENS)
      block_tokens(i) -> int        # Tokens held by prompt block i
- class Trace:
      from_requests(reqs) -> Trace  # Sorts by arrival, derives raw_qps
- rescale_qps(trace, target_qps) -> Trace

Usage:
    trace = Trace.from_requests(reqs)
    fast = rescale_qps(trace, target_qps=4.0)

Notes:
- Trace is frozen after construction and safe to share read-only between runs.
- raw_qps = count / span; a zero span counts as one second so a single
  request still has a positive rate.
"""

from __future__ import annotations
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Tuple
import math

BLOCK_TOKENS = 16  # Tokens per hashed KV block


class Category(str, Enum):
    """Request category driving reuse behavior."""
    API = "api"
    TEXT = "text"
    CODE = "code"
    THINKING = "thinking"

    @classmethod
    def parse(cls, value: "str | Category") -> "Category":
        if isinstance(value, Category):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown category {value!r} (expected api|text|code|thinking)") from None


@dataclass(frozen=True, slots=True)
class Request:
    """One serving request.

    Attributes:
        id: Unique integer id
        arrival: Arrival time in seconds (>= 0)
        category: Request category
        prompt_len: Prompt tokens
        gen_len: Tokens to generate (>= 1)
        turn: Conversation turn (>= 1)
        block_ids: One 64-bit hash per 16-token prompt chunk
        parent: Id of the previous turn of the same conversation (-1 for none)
    """
    id: int
    arrival: float
    category: Category
    prompt_len: int
    gen_len: int
    turn: int = 1
    block_ids: Tuple[int, ...] = ()
    parent: int = -1

    def __post_init__(self) -> None:
        if self.arrival < 0:
            raise ValueError(f"request {self.id}: arrival must be >= 0, got {self.arrival}")
        if self.prompt_len < 1:
            raise ValueError(f"request {self.id}: prompt_len must be >= 1, got {self.prompt_len}")
        if self.gen_len < 1:
            raise ValueError(f"request {self.id}: gen_len must be >= 1, got {self.gen_len}")
        if self.turn < 1:
            raise ValueError(f"request {self.id}: turn must be >= 1, got {self.turn}")
        expected = math.ceil(self.prompt_len / BLOCK_TOKENS)
        if len(self.block_ids) != expected:
            raise ValueError(
                f"request {self.id}: {len(self.block_ids)} block ids for prompt_len "
                f"{self.prompt_len} (expected {expected})"
            )

    @property
    def n_blocks(self) -> int:
        return len(self.block_ids)

    def block_tokens(self, i: int) -> int:
        """Tokens held by prompt block i (the last block may be partial)."""
        return min(BLOCK_TOKENS, self.prompt_len - i * BLOCK_TOKENS)


@dataclass(frozen=True, slots=True)
class Trace:
    """Arrival-sorted request list.

    Attributes:
        requests: Requests sorted by (arrival, id)
        raw_qps: Requests per second over the trace span
        reordered: Number of out-of-order arrivals repaired on construction
    """
    requests: Tuple[Request, ...]
    raw_qps: float
    reordered: int = 0

    @classmethod
    def from_requests(cls, reqs: Iterable[Request]) -> "Trace":
        items = list(reqs)
        reordered = sum(1 for a, b in zip(items, items[1:]) if b.arrival < a.arrival)
        items.sort(key=lambda r: (r.arrival, r.id))
        if not items:
            return cls((), 0.0, 0)
        span = items[-1].arrival - items[0].arrival
        raw_qps = len(items) / (span if span > 0 else 1.0)
        return cls(tuple(items), raw_qps, reordered)

    def __len__(self) -> int:
        return len(self.requests)

    @property
    def span(self) -> float:
        if not self.requests:
            return 0.0
        return self.requests[-1].arrival - self.requests[0].arrival


def rescale_qps(trace: Trace, target_qps: float) -> Trace:
    """Replay a trace at target_qps by scaling every arrival by raw_qps/target_qps.

    Request order, lengths and block ids are unchanged.

    Raises:
        ValueError: If target_qps <= 0
    """
    if not target_qps > 0:
        raise ValueError(f"target_qps must be > 0, got {target_qps}")
    if target_qps == trace.raw_qps or not trace.requests:
        return replace(trace, raw_qps=float(target_qps) if trace.requests else trace.raw_qps)
    factor = trace.raw_qps / target_qps
    scaled = tuple(replace(r, arrival=r.arrival * factor) for r in trace.requests)
    return Trace(scaled, float(target_qps), trace.reordered)


__all__ = ["BLOCK_TOKENS", "Category", "Request", "Trace", "rescale_qps"]

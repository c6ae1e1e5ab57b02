"""Per-request serving state and step plans.

Pure containers shared by the scheduler and the engine. No policy lives here.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..layout.kv_layout import LayoutMode
from ..stack.residency import Tier
from ..trace.request import Request


@dataclass(slots=True)
class ActiveRequest:
    """A request admitted to a serving group.

    Attributes:
        req: The request
        group: Home serving group
        stack: Home stack within the group
        admitted_at: Admission time (s)
        prefill_total: Tokens to prefill (prompt misses, at least 1)
        prefill_done: Prefilled tokens so far
        generated: Output tokens produced (the first comes with the last prefill chunk)
        first_token_at: Time of the first output token
        last_token_at: Time of the latest output token
        finished_at: Completion time
        tbt: Gaps between consecutive output tokens
        pinned: Primary blocks pinned by this request
        private_bytes: Compute bytes of private copies (callbacks, recomputed shared blocks)
        gen_bytes: Reserved bytes for generated KV
        gen_tier: Tier holding the generated KV
        cold_fp16: Prompt KV bytes (FP16) read from capacity layers
        layout: Layout mode chosen at admission
        fg_stall: Foreground transfer time charged to the first step
    """
    req: Request
    group: int
    stack: int
    admitted_at: float
    prefill_total: int
    prefill_done: int = 0
    generated: int = 0
    first_token_at: Optional[float] = None
    last_token_at: Optional[float] = None
    finished_at: Optional[float] = None
    tbt: List[float] = field(default_factory=list)
    pinned: List[int] = field(default_factory=list)
    private_bytes: float = 0.0
    gen_bytes: float = 0.0
    gen_tier: Tier = Tier.COMPUTE
    cold_fp16: float = 0.0
    layout: LayoutMode = LayoutMode.TM_DH
    fg_stall: float = 0.0

    @property
    def prefill_left(self) -> int:
        return self.prefill_total - self.prefill_done

    @property
    def in_prefill(self) -> bool:
        return self.prefill_left > 0

    @property
    def in_decode(self) -> bool:
        return not self.in_prefill and self.generated < self.req.gen_len

    @property
    def done(self) -> bool:
        return not self.in_prefill and self.generated >= self.req.gen_len

    @property
    def context(self) -> int:
        """Tokens whose KV the next decode step reads."""
        return self.req.prompt_len + self.generated


@dataclass(slots=True)
class StepPlan:
    """Work of one batched forward pass."""
    decode: List[ActiveRequest] = field(default_factory=list)
    prefill: List[Tuple[ActiveRequest, int]] = field(default_factory=list)
    admitted: List[ActiveRequest] = field(default_factory=list)

    @property
    def tokens(self) -> int:
        return len(self.decode) + sum(n for _, n in self.prefill)

    @property
    def empty(self) -> bool:
        return not self.decode and not self.prefill


__all__ = ["ActiveRequest", "StepPlan"]

"""Serving-policy configuration.

Responsibilities:
- EvictionConfig: occupancy water marks of the demotion loop
- ReplicationConfig: three-gate thresholds, revocation ratio, replica reserve
- PolicyConfig: batching limits, category windows/lifespans, retention, refit
- AblationFlags: the five cumulative toggles of the ablation study

Notes:
- All defaults are exposed in the experiment config file ([policy],
  [replication], [ablation]).
- Per-category dicts are keyed by Category; missing categories fall back to
  the defaults below.
"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from typing import Dict

from ..trace.request import Category
from ..trace.synth import DEFAULT_NEXT_TURN


@dataclass(frozen=True, slots=True)
class EvictionConfig:
    theta_hi: float = 0.95
    theta_lo: float = 0.85

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_lo < self.theta_hi <= 1.0):
            raise ValueError(f"need 0 < theta_lo < theta_hi <= 1, got {self.theta_lo}, {self.theta_hi}")


@dataclass(frozen=True, slots=True)
class ReplicationConfig:
    """Replication thresholds.

    Attributes:
        tau_off: Largest token offset a replicated block may have
        tau_cards: Distinct accessing groups must exceed this
        tau_hits: Remote hits must exceed this
        revoke_threshold: Replicas below this callback-elimination ratio are revoked
        reserve_fraction: Share of compute-layer KV bytes held back for replicas
    """
    tau_off: int = 512
    tau_cards: int = 2
    tau_hits: int = 8
    revoke_threshold: float = 0.5
    reserve_fraction: float = 0.1

    def __post_init__(self) -> None:
        if min(self.tau_off, self.tau_cards, self.tau_hits) < 0 or self.revoke_threshold < 0:
            raise ValueError("replication thresholds must be >= 0")
        if not 0.0 <= self.reserve_fraction <= 0.5:
            raise ValueError(f"reserve_fraction must lie in [0, 0.5], got {self.reserve_fraction}")


def _per_category(api: float, text: float, code: float, thinking: float) -> Dict[Category, float]:
    return {Category.API: api, Category.TEXT: text, Category.CODE: code, Category.THINKING: thinking}


@dataclass(frozen=True, slots=True)
class PolicyConfig:
    """Batching and category policy knobs.

    Attributes:
        chunk_tokens: Chunked-prefill chunk size
        token_budget: Tokens per step (decode slots + prefill chunks)
        max_running: Concurrent requests per serving group
        admission_window_s: Age after which unpinned blocks of a category are demoted
        lifespan_s: Prior reuse lifespan per category (replaced by refits)
        next_turn: Next-turn probability per category
        retention_threshold: Retain prefixes when next_turn exceeds this
        retention_budget: Retained blocks per conversation
        refit_period_s: Period of CDF refits, retention release and revocation checks
        fit_window_s: History the refit looks at
        lambda_max: Clamp for degenerate (all-zero) reuse gaps
        lifespan_quantile: Fitted lifespan is this quantile of the reuse-time CDF
        metadata_gc_s: Evicted metadata is dropped after this horizon
        affinity_slack: Prefix home is overridden when its load exceeds the minimum by more
    """
    chunk_tokens: int = 512
    token_budget: int = 8192
    max_running: int = 32
    admission_window_s: Dict[Category, float] = field(default_factory=lambda: _per_category(60.0, 300.0, 600.0, 0.0))
    lifespan_s: Dict[Category, float] = field(default_factory=lambda: _per_category(60.0, 300.0, 600.0, 30.0))
    next_turn: Dict[Category, float] = field(default_factory=lambda: dict(DEFAULT_NEXT_TURN))
    retention_threshold: float = 0.5
    retention_budget: int = 32
    refit_period_s: float = 60.0
    fit_window_s: float = 600.0
    lambda_max: float = 1e3
    lifespan_quantile: float = 0.9
    metadata_gc_s: float = 600.0
    affinity_slack: float = 0.25

    def __post_init__(self) -> None:
        if self.chunk_tokens < 1 or self.token_budget < 1 or self.max_running < 1:
            raise ValueError("chunk_tokens, token_budget and max_running must be >= 1")
        if any(v < 0 for v in self.admission_window_s.values()):
            raise ValueError("admission windows must be >= 0")
        if any(not v > 0 for v in self.lifespan_s.values()):
            raise ValueError("lifespans must be > 0")
        if self.retention_budget < 0:
            raise ValueError("retention_budget must be >= 0")
        if not self.refit_period_s > 0 or not self.lambda_max > 0:
            raise ValueError("refit_period_s and lambda_max must be > 0")
        if not 0.0 < self.lifespan_quantile < 1.0:
            raise ValueError("lifespan_quantile must lie in (0, 1)")

    def with_(self, **changes) -> "PolicyConfig":
        return replace(self, **changes)


ABLATION_ORDER = ("layout", "topology", "quantization", "category_eviction", "replication")


@dataclass(frozen=True, slots=True)
class AblationFlags:
    """Feature toggles; all on is the full system, all off is bare heterogeneous hardware.

    layout: KV-aware layout selection at full bank bandwidth
    topology: prefix-affine home assignment
    quantization: K8V4 on demotion
    category_eviction: category-aware demotion, admission windows and retention (off = LRU)
    replication: three-gate prefix replication
    """
    layout: bool = True
    topology: bool = True
    quantization: bool = True
    category_eviction: bool = True
    replication: bool = True

    @classmethod
    def bare(cls) -> "AblationFlags":
        return cls(**{k: False for k in ABLATION_ORDER})

    @classmethod
    def cumulative(cls, n: int) -> "AblationFlags":
        """First n toggles of ABLATION_ORDER enabled."""
        if not 0 <= n <= len(ABLATION_ORDER):
            raise ValueError(f"n must lie in [0, {len(ABLATION_ORDER)}]")
        return cls(**{k: i < n for i, k in enumerate(ABLATION_ORDER)})

    def enabled(self) -> Dict[str, bool]:
        return {k: getattr(self, k) for k in ABLATION_ORDER}


__all__ = [
    "EvictionConfig", "ReplicationConfig", "PolicyConfig", "AblationFlags", "ABLATION_ORDER",
]

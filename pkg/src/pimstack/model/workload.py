"""KV bytes, FLOPs and weight traffic of a model.

All functions are pure and take a ModelConfig.
"""

from __future__ import annotations
from typing import Literal, Tuple

from .config import ModelConfig

Phase = Literal["prefill", "decode"]


def kv_bytes_per_token(m: ModelConfig) -> int:
    """K and V bytes one token adds across all layers: 2 * layers * kv_width * dtype."""
    return 2 * m.layers * m.kv_width * m.dtype_bytes


def decode_attention_traffic(m: ModelConfig, context_len: int) -> Tuple[int, float]:
    """KV bytes one decode step rereads, and the attention FLOPs that go with them.

    Returns:
        (bytes, flops) with flops = 2 * bytes / dtype_bytes (one MAC per element)

    Raises:
        ValueError: If context_len < 1
    """
    if context_len < 1:
        raise ValueError(f"context_len must be >= 1, got {context_len}")
    nbytes = context_len * kv_bytes_per_token(m)
    return nbytes, 2.0 * nbytes / m.dtype_bytes


def fc_work(m: ModelConfig, tokens_in_batch: int, phase: Phase = "decode") -> Tuple[float, float]:
    """Dense FC work of one forward pass.

    Returns:
        (flops, weight_bytes) with flops = 2 * params * tokens; the weights are
        read once per pass regardless of phase.

    Raises:
        ValueError: If tokens_in_batch < 1 or phase is unknown
    """
    if tokens_in_batch < 1:
        raise ValueError(f"tokens_in_batch must be >= 1, got {tokens_in_batch}")
    if phase not in ("prefill", "decode"):
        raise ValueError(f"phase must be 'prefill' or 'decode', got {phase!r}")
    return 2.0 * m.params * tokens_in_batch, weight_bytes(m)


def weight_bytes(m: ModelConfig) -> float:
    return m.params * m.dtype_bytes


def prefill_attention_flops(m: ModelConfig, chunk: int, context: int) -> float:
    """GPU attention FLOPs for a prefill chunk of ``chunk`` tokens whose last
    token sees ``context`` tokens (QK^T and PV, causal average)."""
    if chunk <= 0:
        return 0.0
    mean_ctx = max(1.0, context - (chunk - 1) / 2.0)
    return 4.0 * m.layers * m.hidden * chunk * mean_ctx


__all__ = ["Phase", "kv_bytes_per_token", "decode_attention_traffic", "fc_work", "weight_bytes", "prefill_attention_flops"]

"""Model geometry and presets.

Responsibilities:
- ModelConfig: layers, hidden size, heads, parameter count, dtype width
- MODEL_PRESETS: the four evaluated models
- get_model(name): case-insensitive preset lookup

Public API:
- class ModelConfig:
      head_dim: int          # hidden / heads
      kv_width: int          # hidden * kv_heads / heads
      with_(**changes) -> ModelConfig
- MODEL_PRESETS: dict[str, ModelConfig]
- get_model(name) -> ModelConfig

Notes:
- Attention is plain multi-head by default (kv_heads == heads). Setting
  kv_heads below heads scales KV bytes for grouped-query sensitivity studies.
- dtype_bytes is 2 (FP16 weights and activations).
"""

from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Dict, Optional


@dataclass(frozen=True, slots=True)
class ModelConfig:
    """LLM geometry.

    Attributes:
        name: Preset name
        layers: Transformer layers
        hidden: Hidden dimension
        heads: Attention heads
        params: Parameter count
        dtype_bytes: Bytes per element
        kv_heads: KV heads (None = heads)
    """
    name: str
    layers: int
    hidden: int
    heads: int
    params: float
    dtype_bytes: int = 2
    kv_heads: Optional[int] = None

    def __post_init__(self) -> None:
        if self.layers < 1 or self.heads < 1:
            raise ValueError(f"{self.name}: layers and heads must be >= 1")
        if self.hidden < 1 or self.hidden % self.heads != 0:
            raise ValueError(f"{self.name}: hidden ({self.hidden}) must be a positive multiple of heads ({self.heads})")
        if not self.params > 0:
            raise ValueError(f"{self.name}: params must be > 0")
        if self.dtype_bytes < 1:
            raise ValueError(f"{self.name}: dtype_bytes must be >= 1")
        if self.kv_heads is not None and not 1 <= self.kv_heads <= self.heads:
            raise ValueError(f"{self.name}: kv_heads must lie in [1, heads]")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    @property
    def n_kv_heads(self) -> int:
        return self.heads if self.kv_heads is None else self.kv_heads

    @property
    def kv_width(self) -> int:
        """Elements per token per layer for K (and again for V)."""
        return self.head_dim * self.n_kv_heads

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


MODEL_PRESETS: Dict[str, ModelConfig] = {
    "Qwen3-4B": ModelConfig("Qwen3-4B", layers=36, hidden=2560, heads=32, params=4e9),
    "Qwen3-32B": ModelConfig("Qwen3-32B", layers=64, hidden=5120, heads=64, params=32e9),
    "Mixtral-Devstral-123B": ModelConfig("Mixtral-Devstral-123B", layers=80, hidden=12288, heads=96, params=123e9),
    "GPT-175B": ModelConfig("GPT-175B", layers=96, hidden=12288, heads=96, params=175e9),
}


def get_model(name: str) -> ModelConfig:
    """Look up a preset by name (case-insensitive).

    Raises:
        ValueError: Unknown preset name
    """
    for key, m in MODEL_PRESETS.items():
        if key.lower() == name.strip().lower():
            return m
    raise ValueError(f"unknown model {name!r} (choose from {', '.join(MODEL_PRESETS)})")


__all__ = ["ModelConfig", "MODEL_PRESETS", "get_model"]

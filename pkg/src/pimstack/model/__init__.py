"""Model Package - LLM geometry presets and work accounting.

Core Components:
- config: ModelConfig, MODEL_PRESETS, get_model
- workload: kv_bytes_per_token, decode_attention_traffic, fc_work
- units: GB/GBps/us/pJ helpers
"""

from .config import ModelConfig, MODEL_PRESETS, get_model
from .workload import (
    kv_bytes_per_token, decode_attention_traffic, fc_work, weight_bytes, prefill_attention_flops,
)

__all__ = [
    "ModelConfig", "MODEL_PRESETS", "get_model",
    "kv_bytes_per_token", "decode_attention_traffic", "fc_work", "weight_bytes", "prefill_attention_flops",
]

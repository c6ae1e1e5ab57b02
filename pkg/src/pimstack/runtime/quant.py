"""K8V4 size accounting.

Keys go FP16 -> INT8 and values FP16 -> INT4, so a demoted block shrinks to
3/8 of its FP16 size (8/3 more blocks fit in the capacity tier).
DemotionLedger tracks FP16 bytes in and out of the capacity tier and closes
exactly: stored == promoted + gc + resident.
"""

from __future__ import annotations
from dataclasses import dataclass
import math

K8V4_RATIO = 8.0 / 3.0  # fp16 bytes per stored byte


def quantized_size(bytes_fp16: int) -> float:
    """Stored bytes of a K8V4 block; each half of an odd size is rounded up.

    Raises:
        ValueError: If bytes_fp16 < 0
    """
    if bytes_fp16 < 0:
        raise ValueError(f"bytes_fp16 must be >= 0, got {bytes_fp16}")
    half = math.ceil(bytes_fp16 / 2)
    return half / 2 + half / 4


@dataclass(slots=True)
class DemotionLedger:
    """FP16 bytes entering and leaving the capacity tier."""
    demoted: int = 0
    spilled: int = 0
    promoted: int = 0
    gc: int = 0

    @property
    def stored(self) -> int:
        return self.demoted + self.spilled

    def balance(self, resident: int) -> int:
        """Zero when every stored byte is promoted, collected or still resident."""
        return self.stored - (self.promoted + self.gc + resident)

    def to_dict(self) -> dict:
        return {"demoted": self.demoted, "spilled": self.spilled, "promoted": self.promoted, "gc": self.gc}


__all__ = ["K8V4_RATIO", "quantized_size", "DemotionLedger"]

"""Asymmetric Key/Value bank layout and its communication cost.

Responsibilities:
- Bank mappings: keys token-major (n mod B), values dim-major (j mod B)
- Per-head, per-decode-step communication volumes of the three layout modes
- Cost model t_bank + gamma * t_agg and the threshold-based mode selection

Public API:
- class LayoutMode(str, Enum):  TM_DH | TM_TM | DH_DH
- class LayoutParams(L, d, B, gamma=None, hysteresis=2.0)
- class CommVolumes(t_bank, t_agg)
- key_bank(n, B) / value_bank(j, B) -> int
- comm_volumes(mode, p) -> CommVolumes
- cost(mode, p) -> float
- thresholds(p) -> (L_dh, L_tm)
- select_layout(p, forced=None) -> LayoutMode

Usage:
    p = LayoutParams(L=1024, d=128, B=256)
    mode = select_layout(p)              # TM_TM: L > 4d
    v = comm_volumes(mode, p)

Notes:
- gamma defaults to 1/B, so d * (1 + gamma * B) == 2d and with hysteresis 2
  the switch points are L = 4d (to TM_TM) and L = d/4 (to DH_DH).
- TM_DH never reduces across banks: its t_agg is L + d for every B.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class LayoutMode(str, Enum):
    TM_DH = "TM_DH"   # keys token-major, values dim-major (default)
    TM_TM = "TM_TM"   # both token-major
    DH_DH = "DH_DH"   # both dim-major


@dataclass(frozen=True, slots=True)
class LayoutParams:
    """Inputs of the layout cost model.

    Attributes:
        L: Context length (tokens)
        d: Head dimension
        B: PIM banks
        gamma: Aggregation cost weight (None = 1/B)
        hysteresis: Multiplicative widening of the TM_DH band (>= 1)
    """
    L: float
    d: float
    B: int
    gamma: Optional[float] = None
    hysteresis: float = 2.0

    def __post_init__(self) -> None:
        if not self.L > 0 or not self.d > 0:
            raise ValueError(f"L and d must be > 0, got L={self.L}, d={self.d}")
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.hysteresis < 1:
            raise ValueError(f"hysteresis must be >= 1, got {self.hysteresis}")

    @property
    def g(self) -> float:
        return 1.0 / self.B if self.gamma is None else self.gamma


@dataclass(frozen=True, slots=True)
class CommVolumes:
    t_bank: float  # elements per bank
    t_agg: float   # elements reduced at the base die


def key_bank(n: int, B: int) -> int:
    """Bank of key token n: n mod B."""
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    return n % B


def value_bank(j: int, B: int) -> int:
    """Bank of value dimension j: j mod B."""
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    return j % B


def comm_volumes(mode: LayoutMode, p: LayoutParams) -> CommVolumes:
    L, d, B = float(p.L), float(p.d), p.B
    if mode is LayoutMode.TM_DH:
        return CommVolumes(d + L / B + L + d / B, L + d)
    if mode is LayoutMode.TM_TM:
        return CommVolumes(2 * d + 2 * L / B, L + B * d)
    if mode is LayoutMode.DH_DH:
        return CommVolumes(2 * L + 2 * d / B, B * L + d)
    raise ValueError(f"unknown layout mode {mode!r}")


def cost(mode: LayoutMode, p: LayoutParams) -> float:
    """t_bank + gamma * t_agg."""
    v = comm_volumes(mode, p)
    return v.t_bank + p.g * v.t_agg


def thresholds(p: LayoutParams) -> Tuple[float, float]:
    """(L below which DH_DH wins, L above which TM_TM wins), hysteresis applied."""
    base = p.d * (1.0 + p.g * p.B)
    return p.d / (p.hysteresis * (1.0 + p.g * p.B)), p.hysteresis * base


def select_layout(p: LayoutParams, forced: Optional[LayoutMode] = None) -> LayoutMode:
    """Pick the layout mode for context length p.L.

    TM_TM if L > h*d*(1+gamma*B), DH_DH if L < d/(h*(1+gamma*B)), else TM_DH.
    ``forced`` overrides the choice (layout ablation).
    """
    if forced is not None:
        return forced
    lo, hi = thresholds(p)
    if p.L > hi:
        return LayoutMode.TM_TM
    if p.L < lo:
        return LayoutMode.DH_DH
    return LayoutMode.TM_DH


__all__ = [
    "LayoutMode", "LayoutParams", "CommVolumes",
    "key_bank", "value_bank", "comm_volumes", "cost", "thresholds", "select_layout",
]

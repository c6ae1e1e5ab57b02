"""Stack and node configuration, capacity planning.

Responsibilities:
- StackConfig: layer counts, die sizes, banks and per-stack bandwidths
- NodeTopology: GPUs, stacks, organization and per-card domain capacities
- total_capacity(), link_bandwidth()
- choose_tp() / plan_capacity(): weight reservation and per-card KV budgets

Public API:
- class Mode(str, Enum):  TokenStack | AttAcc | FullGPU | Uniform
- class Path(str, Enum):  TSV | UCIE | XBAR | NVLINK
- class StackConfig / NodeTopology / CapacityPlan
- class CapacityError(RuntimeError)
- total_capacity(s) -> bytes
- link_bandwidth(path, topo) -> bytes/s
- choose_tp(weight_bytes, gpus) -> int
- plan_capacity(topo, weight_bytes, tp, reserve_fraction) -> CapacityPlan

Notes:
- Per-card comp/cap capacities are the authoritative budgets; layer counts
  only describe how a stack is built.
- Weights go to the capacity domain first. What does not fit spills into the
  compute domain with a warning; weights larger than both are an OOM.
"""

from __future__ import annotations
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional
import logging

from ..layout.placement import Domain, PlacementObject, greedy_placement
from . import constants as K

log = logging.getLogger("pimstack.stack.config")


class CapacityError(RuntimeError):
    """Node cannot hold the model (raised at initialization)."""


class Mode(str, Enum):
    TOKENSTACK = "TokenStack"
    ATTACC = "AttAcc"
    FULLGPU = "FullGPU"
    UNIFORM = "Uniform"

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, Mode):
            return value
        key = str(value).strip().lower()
        for m in cls:
            if m.value.lower() == key:
                return m
        raise ValueError(f"unknown mode {value!r} (expected {', '.join(m.value for m in cls)})")


class Path(str, Enum):
    TSV = "tsv"
    UCIE = "ucie"
    XBAR = "xbar"
    NVLINK = "nvlink"


@dataclass(frozen=True, slots=True)
class StackConfig:
    """One HBM stack.

    Attributes:
        C: Capacity layers
        P: Compute (PIM) layers
        B_full: Bytes per capacity layer
        B_half: Bytes per compute layer
        B: PIM banks across the compute layers
        B_cap: Banks across the capacity layers
        tsv_bw: Stack-internal DMA bandwidth (bytes/s)
        ucie_bw: Stack <-> GPU bandwidth (bytes/s)
        quant_engine_bw: Inline K8V4 engine bandwidth (bytes/s, None = tsv_bw)
    """
    C: int = 4
    P: int = 4
    B_full: float = K.CAPACITY_DIE_BYTES
    B_half: float = K.COMPUTE_DIE_BYTES
    B: int = K.PIM_BANKS
    B_cap: int = K.CAPACITY_BANKS
    tsv_bw: float = K.TSV_BW
    ucie_bw: float = K.UCIE_BW
    quant_engine_bw: Optional[float] = None

    def __post_init__(self) -> None:
        if self.C < 0 or self.P < 0 or self.C + self.P < 1:
            raise ValueError(f"invalid layer counts C={self.C}, P={self.P}")
        if self.P >= 1 and self.B < 1:
            raise ValueError("B must be >= 1 when the stack has compute layers")
        if self.B_cap < 1:
            raise ValueError("B_cap must be >= 1")
        for name in ("tsv_bw", "ucie_bw"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.quant_engine_bw is not None and not self.quant_engine_bw > 0:
            raise ValueError("quant_engine_bw must be > 0")

    @property
    def quant_bw(self) -> float:
        return self.tsv_bw if self.quant_engine_bw is None else self.quant_engine_bw


def total_capacity(s: StackConfig) -> float:
    """Addressable bytes of one stack: C * B_full + P * B_half."""
    return s.C * s.B_full + s.P * s.B_half


@dataclass(frozen=True, slots=True)
class NodeTopology:
    """One serving node.

    Attributes:
        gpus: Cards in the node
        stacks_per_gpu: HBM stacks per card
        stack: Representative stack (the one holding KV)
        nvlink_bw: Card <-> card bandwidth (bytes/s)
        gpu_flops: Dense FLOP/s per card
        mode: Stack organization
        comp_capacity_per_card: Compute-domain bytes per card
        cap_capacity_per_card: Capacity-domain bytes per card
        pim_stacks: Stacks per card with PIM attention
        xbar_bw: Intra-package crossbar bandwidth (None = destination stack UCIe)
        pim_bw: Bank-level attention bandwidth of one PIM stack (None = 4x UCIe)
        name: Label, e.g. "TokenStack" or "cap3-comp5"
    """
    gpus: int
    stacks_per_gpu: int
    stack: StackConfig
    nvlink_bw: float
    gpu_flops: float
    mode: Mode
    comp_capacity_per_card: float
    cap_capacity_per_card: float
    pim_stacks: int = 0
    xbar_bw: Optional[float] = None
    pim_bw: Optional[float] = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.gpus < 1 or self.stacks_per_gpu < 1:
            raise ValueError("gpus and stacks_per_gpu must be >= 1")
        if self.comp_capacity_per_card < 0 or self.cap_capacity_per_card < 0:
            raise ValueError("per-card capacities must be >= 0")
        if not self.nvlink_bw > 0 or not self.gpu_flops > 0:
            raise ValueError("nvlink_bw and gpu_flops must be > 0")
        if not 0 <= self.pim_stacks <= self.stacks_per_gpu:
            raise ValueError("pim_stacks must lie in [0, stacks_per_gpu]")

    @property
    def label(self) -> str:
        return self.name or self.mode.value

    @property
    def has_pim(self) -> bool:
        return self.pim_stacks > 0

    @property
    def has_kv_capacity_tier(self) -> bool:
        """Only the heterogeneous organization keeps demoted KV in capacity layers."""
        return self.mode is Mode.TOKENSTACK

    @property
    def pim_stack_bw(self) -> float:
        return self.pim_bw if self.pim_bw is not None else K.PIM_BW_PER_UCIE * self.stack.ucie_bw

    def with_(self, **changes) -> "NodeTopology":
        return replace(self, **changes)


def link_bandwidth(path: "Path | str", topo: NodeTopology) -> float:
    """Configured bandwidth of one link (bytes/s, per stack for TSV/UCIe/XBAR)."""
    p = Path(path) if not isinstance(path, Path) else path
    if p is Path.TSV:
        return topo.stack.tsv_bw
    if p is Path.UCIE:
        return topo.stack.ucie_bw
    if p is Path.XBAR:
        return topo.xbar_bw if topo.xbar_bw is not None else topo.stack.ucie_bw
    return topo.nvlink_bw


# ----------------------------------------------------------------------
# Capacity planning
# ----------------------------------------------------------------------
@dataclass(frozen=True, slots=True)
class CapacityPlan:
    """Per-card byte budgets after weight reservation."""
    tp: int
    weights_per_card: float
    weights_in_cap: float
    weights_in_comp: float
    comp_kv: float
    cap_kv: float
    replica_reserve: float


def choose_tp(weight_bytes: float, gpus: int, card_bytes: float = K.GPU_HBM_BYTES,
              share: float = K.TP_WEIGHT_SHARE) -> int:
    """Smallest power-of-two divisor of gpus whose weight shard fits share*card_bytes.

    Falls back to all gpus.
    """
    tp = 1
    while tp <= gpus:
        if gpus % tp == 0 and weight_bytes / tp <= share * card_bytes:
            return tp
        tp *= 2
    return gpus


_WEIGHTS, _KV_POOL = 0, 1


def plan_capacity(topo: NodeTopology, weight_bytes: float, tp: int,
                  reserve_fraction: float = 0.0) -> CapacityPlan:
    """Reserve weights and split the remaining per-card bytes.

    The weight shard (no PIM affinity) and the KV pool (consumed by PIM
    attention) go through greedy_placement against the compute-layer budget.
    Weights that do not fit the capacity layers spill into compute layers.

    Raises:
        CapacityError: If the weight shard exceeds comp + cap of a card
        ValueError: If tp does not divide gpus
    """
    if tp < 1 or topo.gpus % tp != 0:
        raise ValueError(f"tp={tp} must divide gpus={topo.gpus}")
    if not 0.0 <= reserve_fraction <= 0.5:
        raise ValueError(f"reserve_fraction must lie in [0, 0.5], got {reserve_fraction}")
    per_card = weight_bytes / tp
    comp, cap = topo.comp_capacity_per_card, topo.cap_capacity_per_card
    if per_card > comp + cap:
        raise CapacityError(
            f"{topo.label}: weights need {per_card / 1e9:.2f} GB per card, "
            f"only {(comp + cap) / 1e9:.2f} GB available"
        )
    objects = []
    if per_card > 0:
        objects.append(PlacementObject(_WEIGHTS, per_card, alpha=1.0, beta=0))
    if comp > 0:
        objects.append(PlacementObject(_KV_POOL, comp, alpha=1.0, beta=1))
    placement = greedy_placement(objects, comp)

    in_cap = min(per_card, cap) if placement.get(_WEIGHTS) is Domain.CAPACITY else 0.0
    in_comp = per_card - in_cap
    if in_comp > 0:
        log.warning("%s: %.2f GB of weights per card spill into compute layers", topo.label, in_comp / 1e9)
    comp_left = comp - in_comp if placement.get(_KV_POOL) is Domain.COMPUTE else 0.0
    reserve = reserve_fraction * comp_left
    cap_kv = cap - in_cap if topo.has_kv_capacity_tier else 0.0
    return CapacityPlan(
        tp=tp,
        weights_per_card=per_card,
        weights_in_cap=in_cap,
        weights_in_comp=in_comp,
        comp_kv=comp_left - reserve,
        cap_kv=cap_kv,
        replica_reserve=reserve,
    )


__all__ = [
    "CapacityError", "Mode", "Path", "StackConfig", "NodeTopology", "CapacityPlan",
    "total_capacity", "link_bandwidth", "choose_tp", "plan_capacity",
]

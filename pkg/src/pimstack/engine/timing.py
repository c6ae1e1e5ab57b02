"""Roofline timing of steps and transfers.

Responsibilities:
- TimingParams: GPU/PIM throughput knobs and fixed latencies
- GroupTiming: bandwidths of one serving group, resolved once per run
- transfer_time(): bytes over one link, quantized TSV path at min(tsv, quant)
- decode_attention_time(): one decode step of a batch on PIM or on the GPU
- fc_time() / prefill_attention_time(): GPU-side work of a step

Public API:
- class TimingParams
- class AttentionWork(hot_bytes, cold_fp16_bytes, flops, comm_bytes, mixed)
- class GroupTiming:
      resolve(topo, tp, timing, layout_on) -> GroupTiming
- transfer_time(nbytes, path, quantized, topo, lanes=1) -> seconds
- decode_attention_time(work, gt) -> seconds
- fc_time(flops, weight_bytes, gt) -> seconds
- prefill_attention_time(flops, gt) -> seconds

Notes:
- PIM attention bandwidth per stack defaults to 4x UCIe, so all-hot PIM
  attention beats the UCIe-streamed GPU path by that ratio.
- With bare hardware (layout off) hot reads are capped by the TSV, which is
  what a layout without bank-local reductions can sustain.
- Cold (capacity-resident) KV is dequantized through the base die at
  min(tsv, quant) per stack.
"""

from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Optional

from ..model.units import US
from ..stack.config import Mode, NodeTopology, Path, link_bandwidth

# Defaults
T_FIXED_STEP = 10 * US               # Per-decode-step launch/sync overhead
T_MODE_SWITCH = 0.5 * US             # Uniform AB/SB switch, paid twice per layer
PROMOTION_FIXED_LATENCY = 1.5 * US   # Per promoted block


@dataclass(frozen=True, slots=True)
class TimingParams:
    """Timing knobs (SI units).

    Attributes:
        gpu_flops: Dense FLOP/s per card (None = topology value)
        pim_bw: Bank-level attention bandwidth per PIM stack (None = topology value)
        pim_flops: Attention FLOP/s per PIM stack (None = 1 FLOP per byte of pim_bw)
        basedie_agg_bw: Base-die reduction bandwidth per stack (None = tsv_bw)
        t_fixed_step: Fixed overhead of a step with decode work
        t_mode_switch: Uniform-mode switch stall per switch
        promotion_fixed_latency: Fixed cost per promoted block
    """
    gpu_flops: Optional[float] = None
    pim_bw: Optional[float] = None
    pim_flops: Optional[float] = None
    basedie_agg_bw: Optional[float] = None
    t_fixed_step: float = T_FIXED_STEP
    t_mode_switch: float = T_MODE_SWITCH
    promotion_fixed_latency: float = PROMOTION_FIXED_LATENCY

    def __post_init__(self) -> None:
        for name in ("gpu_flops", "pim_bw", "pim_flops", "basedie_agg_bw"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"TimingParams.{name} must be > 0, got {v}")
        for name in ("t_fixed_step", "t_mode_switch", "promotion_fixed_latency"):
            if getattr(self, name) < 0:
                raise ValueError(f"TimingParams.{name} must be >= 0")

    def with_(self, **changes) -> "TimingParams":
        return replace(self, **changes)


@dataclass(frozen=True, slots=True)
class AttentionWork:
    """Decode-attention work of one step (summed over the batch).

    Attributes:
        hot_bytes: KV bytes read from compute layers (or HBM for FullGPU)
        cold_fp16_bytes: FP16-equivalent KV bytes read from capacity layers
        flops: Attention FLOPs
        comm_bytes: Bank-to-base-die bytes of the chosen layouts
        mixed: Step mixes PIM attention with regular FC access
    """
    hot_bytes: float = 0.0
    cold_fp16_bytes: float = 0.0
    flops: float = 0.0
    comm_bytes: float = 0.0
    mixed: bool = False

    @property
    def total_bytes(self) -> float:
        return self.hot_bytes + self.cold_fp16_bytes


@dataclass(frozen=True, slots=True)
class GroupTiming:
    """Aggregate bandwidths of one serving group (tp cards)."""
    pim: bool
    gpu_flops: float
    weight_bw: float
    stream_bw: float
    hot_bw: float
    attn_flops: float
    agg_bw: float
    cold_bw: float
    nvlink_bw: float
    tsv_bw: float
    t_fixed_step: float
    t_mode_switch_step: float
    promotion_fixed_latency: float

    @classmethod
    def resolve(
        cls,
        topo: NodeTopology,
        tp: int,
        timing: TimingParams,
        layout_on: bool = True,
        layers: int = 1,
    ) -> "GroupTiming":
        s = topo.stack
        stacks = tp * topo.stacks_per_gpu
        pim_stacks = tp * topo.pim_stacks
        pim_bw = timing.pim_bw if timing.pim_bw is not None else topo.pim_stack_bw
        if topo.mode is Mode.TOKENSTACK and not layout_on:
            pim_bw = min(pim_bw, s.tsv_bw)
        pim_flops = timing.pim_flops if timing.pim_flops is not None else pim_bw
        agg = timing.basedie_agg_bw if timing.basedie_agg_bw is not None else s.tsv_bw
        gpu = timing.gpu_flops if timing.gpu_flops is not None else topo.gpu_flops
        switch = 2 * layers * timing.t_mode_switch if topo.mode is Mode.UNIFORM else 0.0
        return cls(
            pim=topo.has_pim,
            gpu_flops=tp * gpu,
            weight_bw=stacks * s.ucie_bw,
            stream_bw=stacks * s.ucie_bw,
            hot_bw=max(1, pim_stacks) * pim_bw,
            attn_flops=max(1, pim_stacks) * pim_flops,
            agg_bw=max(1, pim_stacks) * agg,
            cold_bw=stacks * min(s.tsv_bw, s.quant_bw),
            nvlink_bw=tp * topo.nvlink_bw,
            tsv_bw=stacks * s.tsv_bw,
            t_fixed_step=timing.t_fixed_step,
            t_mode_switch_step=switch,
            promotion_fixed_latency=timing.promotion_fixed_latency,
        )


def transfer_time(nbytes: float, path: "Path | str", quantized: bool, topo: NodeTopology, lanes: int = 1) -> float:
    """Seconds to move ``nbytes`` over ``lanes`` parallel links of ``path``.

    Quantized TSV transfers run at min(tsv_bw, quant_engine_bw). Sharing with
    background traffic is handled by LinkScheduler, not here.

    Raises:
        ValueError: If nbytes < 0 or lanes < 1
    """
    if nbytes < 0:
        raise ValueError(f"nbytes must be >= 0, got {nbytes}")
    if lanes < 1:
        raise ValueError(f"lanes must be >= 1, got {lanes}")
    if nbytes == 0:
        return 0.0
    p = Path(path)
    bw = link_bandwidth(p, topo)
    if quantized and p is Path.TSV:
        bw = min(bw, topo.stack.quant_bw)
    return nbytes / (bw * lanes)


def decode_attention_time(work: AttentionWork, gt: GroupTiming) -> float:
    """One decode step of attention for a whole batch.

    PIM: max(hot / pim_bw, flops / pim_flops) + comm / agg_bw
         + cold_fp16 / min(tsv, quant) + t_fixed_step (+ mode switches)
    GPU: max(all KV / UCIe, flops / gpu_flops) + t_fixed_step
    """
    t = gt.t_fixed_step
    if work.total_bytes <= 0 and work.flops <= 0:
        return t
    if not gt.pim:
        return t + max(work.total_bytes / gt.stream_bw, work.flops / gt.gpu_flops)
    t += max(work.hot_bytes / gt.hot_bw, work.flops / gt.attn_flops)
    t += work.comm_bytes / gt.agg_bw
    t += work.cold_fp16_bytes / gt.cold_bw
    if work.mixed:
        t += gt.t_mode_switch_step
    return t


def fc_time(flops: float, weight_bytes: float, gt: GroupTiming) -> float:
    """Dense layers: compute- or weight-bandwidth-bound."""
    return max(flops / gt.gpu_flops, weight_bytes / gt.weight_bw)


def prefill_attention_time(flops: float, gt: GroupTiming) -> float:
    return flops / gt.gpu_flops


__all__ = [
    "TimingParams", "AttentionWork", "GroupTiming",
    "transfer_time", "decode_attention_time", "fc_time", "prefill_attention_time",
    "T_FIXED_STEP", "T_MODE_SWITCH", "PROMOTION_FIXED_LATENCY",
]

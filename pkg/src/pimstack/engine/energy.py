"""Five-component energy accounting.

Components (joules):
- fc_offchip: weight bytes read over UCIe
- attn_offchip: KV bytes crossing UCIe (GPU attention) or NVLink (callbacks, fanout)
- fc_onchip: FC FLOPs on the GPU
- attn_onchip: attention FLOPs, on the GPU or in PIM banks
- communication: TSV / crossbar bytes inside the package, plus K8V4 engine work

Coefficients are config values in pJ; only ratios between modes are meaningful.
"""

from __future__ import annotations
from dataclasses import dataclass, fields, replace

from ..model.units import PJ

COMPONENTS = ("fc_offchip", "attn_offchip", "fc_onchip", "attn_onchip", "communication")


@dataclass(frozen=True, slots=True)
class EnergyParams:
    """Energy coefficients in pJ per byte or per FLOP."""
    fc_offchip: float = 6.0        # pJ/B, weights over UCIe
    attn_offchip: float = 6.0      # pJ/B, KV over UCIe
    nvlink: float = 10.0           # pJ/B, card to card
    fc_onchip: float = 0.8         # pJ/FLOP
    attn_onchip: float = 0.8       # pJ/FLOP on the GPU
    attn_onchip_pim: float = 1.0   # pJ/FLOP in PIM banks (array read included)
    communication: float = 1.0     # pJ/B, TSV and crossbar
    quant: float = 0.5             # pJ/B through the K8V4 engine

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"EnergyParams.{f.name} must be >= 0")

    def with_(self, **changes) -> "EnergyParams":
        return replace(self, **changes)


@dataclass(slots=True)
class StepWork:
    """Data movement and FLOPs of one step (or of transfers between steps)."""
    weight_bytes: float = 0.0
    fc_flops: float = 0.0
    ucie_kv_bytes: float = 0.0
    nvlink_bytes: float = 0.0
    attn_flops_gpu: float = 0.0
    attn_flops_pim: float = 0.0
    tsv_bytes: float = 0.0
    quant_bytes: float = 0.0


@dataclass(slots=True)
class EnergyBreakdown:
    fc_offchip: float = 0.0
    attn_offchip: float = 0.0
    fc_onchip: float = 0.0
    attn_onchip: float = 0.0
    communication: float = 0.0

    @property
    def total(self) -> float:
        return self.fc_offchip + self.attn_offchip + self.fc_onchip + self.attn_onchip + self.communication

    def add(self, other: "EnergyBreakdown") -> None:
        for name in COMPONENTS:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def per_token(self, tokens: int) -> "EnergyBreakdown":
        if tokens <= 0:
            return EnergyBreakdown()
        return EnergyBreakdown(**{name: getattr(self, name) / tokens for name in COMPONENTS})

    def to_dict(self) -> dict:
        d = {name: getattr(self, name) for name in COMPONENTS}
        d["total"] = self.total
        return d


def account_energy(work: StepWork, params: EnergyParams) -> EnergyBreakdown:
    """Energy delta of one step."""
    return EnergyBreakdown(
        fc_offchip=work.weight_bytes * params.fc_offchip * PJ,
        attn_offchip=(work.ucie_kv_bytes * params.attn_offchip + work.nvlink_bytes * params.nvlink) * PJ,
        fc_onchip=work.fc_flops * params.fc_onchip * PJ,
        attn_onchip=(work.attn_flops_gpu * params.attn_onchip + work.attn_flops_pim * params.attn_onchip_pim) * PJ,
        communication=(work.tsv_bytes * params.communication + work.quant_bytes * params.quant) * PJ,
    )


__all__ = ["COMPONENTS", "EnergyParams", "StepWork", "EnergyBreakdown", "account_energy"]

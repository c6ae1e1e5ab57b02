"""Stack organizations.

Four built-in organizations, plus the capN-compM variants used by the
topology sweep. All use 5 stacks of 8 DRAM dies per card.

    Mode        Composition per card                   comp / cap
    TokenStack  5 stacks, C=4 + P=4                    20 / 40 GB
    AttAcc      4 PIM stacks (P=8) + 1 HBM stack (C=8) 32 / 16 GB
    FullGPU     5 HBM stacks (C=8)                     80 /  0 GB
    Uniform     5 PIM stacks (P=8)                     40 /  0 GB

FullGPU has no PIM; its "compute" domain is plain HBM read by the GPU.
"""

from __future__ import annotations
from typing import Callable, Dict
import re

from . import constants as K
from .config import Mode, NodeTopology, StackConfig

_VARIANT = re.compile(r"^cap(\d+)-comp(\d+)$", re.IGNORECASE)


def _node(mode: Mode, stack: StackConfig, comp: float, cap: float, pim_stacks: int, name: str = "") -> NodeTopology:
    return NodeTopology(
        gpus=K.GPUS,
        stacks_per_gpu=K.STACKS_PER_GPU,
        stack=stack,
        nvlink_bw=K.NVLINK_BW,
        gpu_flops=K.GPU_FLOPS,
        mode=mode,
        comp_capacity_per_card=comp,
        cap_capacity_per_card=cap,
        pim_stacks=pim_stacks,
        name=name or mode.value,
    )


def _tokenstack() -> NodeTopology:
    s = StackConfig(C=4, P=4)
    n = K.STACKS_PER_GPU
    return _node(Mode.TOKENSTACK, s, n * s.P * s.B_half, n * s.C * s.B_full, pim_stacks=n)


def _attacc() -> NodeTopology:
    s = StackConfig(C=0, P=K.LAYERS_PER_STACK)
    pim = K.STACKS_PER_GPU - 1
    return _node(Mode.ATTACC, s, pim * s.P * s.B_half, K.LAYERS_PER_STACK * s.B_full, pim_stacks=pim)


def _fullgpu() -> NodeTopology:
    s = StackConfig(C=K.LAYERS_PER_STACK, P=0)
    return _node(Mode.FULLGPU, s, K.STACKS_PER_GPU * s.C * s.B_full, 0.0, pim_stacks=0)


def _uniform() -> NodeTopology:
    s = StackConfig(C=0, P=K.LAYERS_PER_STACK)
    n = K.STACKS_PER_GPU
    return _node(Mode.UNIFORM, s, n * s.P * s.B_half, 0.0, pim_stacks=n)


MODE_PRESETS: Dict[Mode, Callable[[], NodeTopology]] = {
    Mode.TOKENSTACK: _tokenstack,
    Mode.ATTACC: _attacc,
    Mode.FULLGPU: _fullgpu,
    Mode.UNIFORM: _uniform,
}


def topology_variant(name: str) -> NodeTopology:
    """Heterogeneous organization ``capN-compM`` with N + M == 8 dies per stack.

    Raises:
        ValueError: Malformed name or wrong die count
    """
    m = _VARIANT.match(name.strip())
    if not m:
        raise ValueError(f"topology variant must look like 'cap3-comp5', got {name!r}")
    c, p = int(m.group(1)), int(m.group(2))
    if c < 1 or p < 1 or c + p != K.LAYERS_PER_STACK:
        raise ValueError(f"{name}: need cap >= 1, comp >= 1 and cap + comp == {K.LAYERS_PER_STACK}")
    s = StackConfig(C=c, P=p)
    n = K.STACKS_PER_GPU
    return _node(Mode.TOKENSTACK, s, n * p * s.B_half, n * c * s.B_full, pim_stacks=n, name=f"cap{c}-comp{p}")


def build_topology(name: "str | Mode") -> NodeTopology:
    """Topology by mode name (TokenStack, AttAcc, FullGPU, Uniform) or variant (capN-compM)."""
    if isinstance(name, str) and _VARIANT.match(name.strip()):
        return topology_variant(name)
    return MODE_PRESETS[Mode.parse(name)]()


__all__ = ["MODE_PRESETS", "build_topology", "topology_variant"]

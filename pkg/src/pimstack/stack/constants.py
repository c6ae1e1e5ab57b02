# pimstack/stack/constants.py
"""Platform constants of the simulated DGX-class node.

Defaults for node size, die capacities, link bandwidths and bank counts.
Pure constants; config classes take their defaults from here.
"""
from __future__ import annotations

from ..model.units import gb, gbps, TFLOPS

# ------------------------------------------------------------
# Node
# ------------------------------------------------------------
GPUS: int = 8
STACKS_PER_GPU: int = 5
LAYERS_PER_STACK: int = 8          # DRAM dies per stack (C + P)
GPU_FLOPS: float = 312 * TFLOPS    # dense FP16
GPU_HBM_BYTES: float = gb(80)      # card memory used to size tensor parallelism

# ------------------------------------------------------------
# Dies
# ------------------------------------------------------------
CAPACITY_DIE_BYTES: float = gb(2)  # B_full, dense DRAM die
COMPUTE_DIE_BYTES: float = gb(1)   # B_half, PIM die pays half its area for logic

# ------------------------------------------------------------
# Banks
# ------------------------------------------------------------
PIM_BANKS: int = 256               # B, across the compute layers of one stack
CAPACITY_BANKS: int = 64           # B_cap, across the capacity layers of one stack

# ------------------------------------------------------------
# Links (per stack unless noted)
# ------------------------------------------------------------
TSV_BW: float = gbps(896)          # stack-internal DMA
UCIE_BW: float = gbps(512)         # stack <-> GPU
NVLINK_BW: float = gbps(600)       # card <-> card
PIM_BW_PER_UCIE: float = 4.0       # bank-level bandwidth of one PIM stack / UCIe

# ------------------------------------------------------------
# Tensor parallelism
# ------------------------------------------------------------
TP_WEIGHT_SHARE: float = 0.5       # weights may take at most this share of card HBM

"""Layout Package - Key/Value bank mappings, layout modes and placement.

Core Components:
- kv_layout: key_bank, value_bank, comm_volumes, select_layout
- placement: greedy_placement over PlacementObject
"""

from .kv_layout import (
    CommVolumes, LayoutMode, LayoutParams,
    comm_volumes, cost, key_bank, select_layout, thresholds, value_bank,
)
from .placement import Domain, PlacementObject, compute_bytes, greedy_placement, placement_utility

__all__ = [
    "CommVolumes", "LayoutMode", "LayoutParams",
    "comm_volumes", "cost", "key_bank", "select_layout", "thresholds", "value_bank",
    "Domain", "PlacementObject", "compute_bytes", "greedy_placement", "placement_utility",
]

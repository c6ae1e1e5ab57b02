"""Stack Package - Node topology, stack organizations and base-die residency.

Core Components:
- constants: platform defaults (dies, banks, link bandwidths)
- config: StackConfig, NodeTopology, Mode, Path, link_bandwidth, capacity planning
- modes: MODE_PRESETS, build_topology, topology_variant (capN-compM)
- residency: ResidencyTable (translation, page interleave, byte accounting)
"""

from .config import (
    CapacityError, CapacityPlan, Mode, NodeTopology, Path, StackConfig,
    choose_tp, link_bandwidth, plan_capacity, total_capacity,
)
from .modes import MODE_PRESETS, build_topology, topology_variant
from .residency import LayerKind, PhysicalLocation, ResidencyTable, Tier, capacity_page_bank, translate

__all__ = [
    "CapacityError", "CapacityPlan", "Mode", "NodeTopology", "Path", "StackConfig",
    "choose_tp", "link_bandwidth", "plan_capacity", "total_capacity",
    "MODE_PRESETS", "build_topology", "topology_variant",
    "LayerKind", "PhysicalLocation", "ResidencyTable", "Tier", "capacity_page_bank", "translate",
]

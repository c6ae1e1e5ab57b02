"""Compile-time placement of data objects onto compute or capacity layers.

Maximizes the summed alpha of PIM-eligible objects in compute layers subject
to the compute-layer byte budget. Objects without PIM affinity always go to
capacity layers.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Mapping


class Domain(str, Enum):
    COMPUTE = "compute"
    CAPACITY = "capacity"


@dataclass(frozen=True, slots=True)
class PlacementObject:
    """One live data object.

    Attributes:
        id: Object id
        size: Bytes
        alpha: Normalized access frequency in [0, 1]
        beta: PIM affinity (1 = KV consumed by PIM attention)
    """
    id: int
    size: float
    alpha: float
    beta: int

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise ValueError(f"object {self.id}: size must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"object {self.id}: alpha must lie in [0, 1]")
        if self.beta not in (0, 1):
            raise ValueError(f"object {self.id}: beta must be 0 or 1")


def greedy_placement(objects: Iterable[PlacementObject], c_comp: float) -> Dict[int, Domain]:
    """Admit PIM-eligible objects by descending alpha while they fit.

    Ties on alpha go to the smaller object, then the lower id. An object that
    no longer fits is skipped and later (smaller) ones are still tried.

    Raises:
        ValueError: If c_comp < 0
    """
    if c_comp < 0:
        raise ValueError(f"c_comp must be >= 0, got {c_comp}")
    objs = list(objects)
    placement: Dict[int, Domain] = {o.id: Domain.CAPACITY for o in objs}
    used = 0.0
    for o in sorted((o for o in objs if o.beta == 1), key=lambda o: (-o.alpha, o.size, o.id)):
        if used + o.size <= c_comp:
            placement[o.id] = Domain.COMPUTE
            used += o.size
    return placement


def placement_utility(objects: Iterable[PlacementObject], placement: Mapping[int, Domain]) -> float:
    """Summed alpha * beta of the objects placed in compute layers."""
    return sum(o.alpha * o.beta for o in objects if placement.get(o.id) is Domain.COMPUTE)


def compute_bytes(objects: Iterable[PlacementObject], placement: Mapping[int, Domain]) -> float:
    return sum(o.size for o in objects if placement.get(o.id) is Domain.COMPUTE)


__all__ = ["Domain", "PlacementObject", "greedy_placement", "placement_utility", "compute_bytes"]

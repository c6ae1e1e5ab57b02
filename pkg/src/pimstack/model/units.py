# pimstack/model/units.py
"""Conversion between config-file units and SI base units.

Config files use decimal GB, GB/s, microseconds and picojoules. The engine
works in bytes, bytes/s, seconds and joules throughout.
"""

from __future__ import annotations

GB: float = 1e9     # bytes
GiB: int = 1 << 30  # bytes
MiB: int = 1 << 20  # bytes
TFLOPS: float = 1e12
US: float = 1e-6    # seconds
PJ: float = 1e-12   # joules


def gb(x: float) -> float:
    """GB (decimal) → bytes."""
    return float(x) * GB


def gbps(x: float) -> float:
    """GB/s → bytes/s."""
    return float(x) * GB


def to_gb(nbytes: float) -> float:
    return float(nbytes) / GB


def us(x: float) -> float:
    """Microseconds → seconds."""
    return float(x) * US


def to_us(seconds: float) -> float:
    return float(seconds) / US


def pj(x: float) -> float:
    """Picojoules → joules."""
    return float(x) * PJ


def to_pj(joules: float) -> float:
    return float(joules) / PJ


__all__ = ["GB", "GiB", "MiB", "TFLOPS", "US", "PJ", "gb", "gbps", "to_gb", "us", "to_us", "pj", "to_pj"]

"""Metric post-processing.

Responsibilities:
- percentile(): nearest-rank percentile (no interpolation)
- slo_capacity(): largest swept QPS whose p50 E2E stays within factor x minimum
- knee_qps(): lowest swept QPS reaching a share of the curve's peak throughput
- gmean() / amean(): means of normalized throughput
- pearson(): energy/throughput coupling across QPS points

Notes:
- Curves are sequences of (qps, value) pairs; a value of None marks an
  infeasible point and is skipped.
"""

from __future__ import annotations
from typing import Iterable, Optional, Sequence, Tuple
import math

import numpy as np
from scipy import stats as _sps

Curve = Sequence[Tuple[float, Optional[float]]]


def percentile(series: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the smallest value with at least p% of the series at or below it.

    Raises:
        ValueError: If the series is empty or p is outside [0, 100]
    """
    if len(series) == 0:
        raise ValueError("percentile of an empty series")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"p must lie in [0, 100], got {p}")
    return float(np.percentile(np.asarray(series, dtype=np.float64), p, method="inverted_cdf"))


def _feasible(curve: Curve) -> list[Tuple[float, float]]:
    return [(float(q), float(v)) for q, v in curve if v is not None and not math.isnan(v)]


def slo_capacity(curve: Curve, factor: float = 2.0) -> float:
    """Largest QPS whose p50 latency is <= factor * (minimum p50 of the same curve).

    Returns 0.0 when no point is feasible.

    Raises:
        ValueError: If the curve has fewer than two points or factor < 1
    """
    if len(curve) < 2:
        raise ValueError("slo_capacity needs at least two curve points")
    if factor < 1.0:
        raise ValueError(f"factor must be >= 1, got {factor}")
    pts = _feasible(curve)
    if not pts:
        return 0.0
    limit = factor * min(v for _, v in pts)
    return max(q for q, v in pts if v <= limit)


def knee_qps(curve: Curve, fraction: float = 0.9) -> float:
    """Lowest QPS whose throughput reaches ``fraction`` of the curve maximum (0.0 if none)."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    pts = _feasible(curve)
    if not pts:
        return 0.0
    peak = max(v for _, v in pts)
    if peak <= 0:
        return 0.0
    return min(q for q, v in pts if v >= fraction * peak)


def gmean(values: Iterable[float]) -> float:
    """Geometric mean exp(mean(log x)) over positive values; 0.0 for none."""
    arr = np.fromiter((v for v in values if v is not None and v > 0), dtype=np.float64)
    return float(_sps.gmean(arr)) if arr.size else 0.0


def amean(values: Iterable[float]) -> float:
    arr = np.fromiter((v for v in values if v is not None), dtype=np.float64)
    return float(arr.mean()) if arr.size else 0.0


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson r; NaN when either side is constant.

    Raises:
        ValueError: On length mismatch or fewer than two points
    """
    if len(xs) != len(ys):
        raise ValueError("pearson needs equally long series")
    if len(xs) < 2:
        raise ValueError("pearson needs at least two points")
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return float("nan")
    return float(_sps.pearsonr(x, y)[0])


__all__ = ["Curve", "percentile", "slo_capacity", "knee_qps", "gmean", "amean", "pearson"]

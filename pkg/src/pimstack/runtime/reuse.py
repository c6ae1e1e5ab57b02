"""Per-category reuse-time model.

The reuse time of a block of category w follows F_w(t) = 1 - exp(-lambda t).
The probability that a block idle for dt is reused within the category
lifespan is F(dt + lifespan) - F(dt). Models are refit periodically from the
observed inter-access gaps (maximum likelihood: lambda = 1 / mean gap).
"""

from __future__ import annotations
from collections import deque
from dataclasses import dataclass
from typing import Deque, Iterable, List, Tuple
import math

import numpy as np

from ..trace.request import Category


@dataclass(frozen=True, slots=True)
class CategoryModel:
    """Exponential reuse-time model.

    Attributes:
        category: Category
        lam: Rate (1/s)
        lifespan: Reuse horizon (s)
        fit_window: History the fit used (s)
        samples: Number of samples behind the fit (0 = prior)
    """
    category: Category
    lam: float
    lifespan: float
    fit_window: float = 600.0
    samples: int = 0

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"{self.category.value}: lambda must be > 0")
        if not self.lifespan > 0:
            raise ValueError(f"{self.category.value}: lifespan must be > 0")

    def cdf(self, t: float) -> float:
        return 1.0 - math.exp(-self.lam * t) if t > 0 else 0.0


def prior_model(category: Category, lifespan: float, fit_window: float = 600.0) -> CategoryModel:
    """Prior with mean reuse time equal to the lifespan."""
    return CategoryModel(category, lam=1.0 / lifespan, lifespan=lifespan, fit_window=fit_window)


def reuse_prob(cm: CategoryModel, dt: float) -> float:
    """F(dt + lifespan) - F(dt) = exp(-lam dt) * (1 - exp(-lam lifespan)).

    Raises:
        ValueError: If dt < 0
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    return math.exp(-cm.lam * dt) * -math.expm1(-cm.lam * cm.lifespan)


def fit_category_cdf(
    samples: Iterable[float],
    prior: CategoryModel,
    lambda_max: float = 1e3,
    lifespan_quantile: float = 0.9,
) -> CategoryModel:
    """Refit lambda from inter-reuse gaps.

    Fewer than two samples keep the prior. An all-zero history clamps lambda
    to lambda_max. The lifespan becomes the ``lifespan_quantile`` of the fit.
    """
    arr = np.fromiter(samples, dtype=np.float64)
    if arr.size < 2:
        return prior
    mean = float(arr.mean())
    lam = lambda_max if mean <= 0 else min(1.0 / mean, lambda_max)
    lifespan = -math.log1p(-lifespan_quantile) / lam
    return CategoryModel(prior.category, lam=lam, lifespan=lifespan, fit_window=prior.fit_window, samples=int(arr.size))


class ReuseHistory:
    """Sliding window of (time, gap) samples for one category."""
    __slots__ = ("window", "_samples")

    def __init__(self, window: float) -> None:
        self.window = window
        self._samples: Deque[Tuple[float, float]] = deque()

    def add(self, t: float, gap: float) -> None:
        self._samples.append((t, gap))

    def prune(self, now: float) -> None:
        cutoff = now - self.window
        while self._samples and self._samples[0][0] < cutoff:
            self._samples.popleft()

    def gaps(self, now: float) -> List[float]:
        self.prune(now)
        return [g for _, g in self._samples]

    def __len__(self) -> int:
        return len(self._samples)


__all__ = ["CategoryModel", "prior_model", "reuse_prob", "fit_category_cdf", "ReuseHistory"]

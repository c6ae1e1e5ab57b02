"""Synthetic trace generation.

Responsibilities:
- Draw prompt/generation lengths from per-category log-normal distributions
- Share system-prompt prefixes from a per-category pool with Zipf skew
- Chain multi-turn conversations (follow-up turns reuse the parent's blocks)
- Tune the Zipf exponent so a target share of reuse lands on the hottest blocks

Public API:
- class LengthDist:             # log-normal parameterised by mean and sigma
- class TraceSpec:              # everything synthesize_trace needs, incl. seed
      with_(**changes) -> TraceSpec
- TRACE_PRESETS: dict[str, TraceSpec]
- synthesize_trace(spec) -> Trace
- tune_zipf_exponent(spec, block_fraction=0.10, target=0.77) -> float

Usage:
    spec = TRACE_PRESETS["traceB"].with_(requests=2000, qps=4.0)
    trace = synthesize_trace(spec)

Notes:
- synthesize_trace is a pure function of the spec: same spec, same trace.
- Block ids are 64-bit blake2b hashes of (seed, origin, index), so two
  requests share a block id exactly when they share the prefix it stands for.
"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from hashlib import blake2b
from typing import Dict, List, Mapping, Tuple
import heapq
import logging
import math

import numpy as np
from scipy.optimize import brentq

from .request import BLOCK_TOKENS, Category, Request, Trace

log = logging.getLogger("pimstack.trace.synth")

DEFAULT_SIGMA = 0.5           # Log-normal shape for all length distributions
DEFAULT_PREFIX_POOL = 256     # System prompts per category
DEFAULT_ZIPF_S = 1.1          # Pool popularity skew
DEFAULT_THINK_TIME_S = 30.0   # Mean gap between conversation turns

# Leading blocks a request takes from its system prompt
DEFAULT_PREFIX_BLOCKS: Dict[Category, int] = {
    Category.API: 32,
    Category.TEXT: 24,
    Category.CODE: 48,
    Category.THINKING: 8,
}

DEFAULT_NEXT_TURN: Dict[Category, float] = {
    Category.API: 0.6,
    Category.TEXT: 0.5,
    Category.CODE: 0.4,
    Category.THINKING: 0.05,
}


@dataclass(frozen=True, slots=True)
class LengthDist:
    """Log-normal length distribution with the given arithmetic mean."""
    mean: float
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self) -> None:
        if not self.mean > 0:
            raise ValueError(f"LengthDist.mean must be > 0, got {self.mean}")
        if self.sigma < 0:
            raise ValueError(f"LengthDist.sigma must be >= 0, got {self.sigma}")

    @property
    def mu(self) -> float:
        return math.log(self.mean) - 0.5 * self.sigma * self.sigma

    def sample(self, rng: np.random.Generator) -> int:
        return max(1, int(round(rng.lognormal(self.mu, self.sigma))))


@dataclass(frozen=True, slots=True)
class TraceSpec:
    """Parameters of a synthetic trace.

    Attributes:
        mix: Category fractions of conversation roots (sum to 1)
        prompt: Prompt-length distribution per category
        gen: Generation-length distribution per category
        requests: Total number of requests, follow-up turns included
        prefix_pool: System prompts per category
        zipf_s: Zipf exponent of system-prompt popularity
        seed: RNG seed
        qps: Poisson rate of conversation roots (requests/s)
        next_turn: Probability that a request gets a follow-up turn
        think_time_s: Mean exponential gap before a follow-up turn
        prefix_blocks: System-prompt length in blocks per category
    """
    mix: Mapping[Category, float]
    prompt: Mapping[Category, LengthDist]
    gen: Mapping[Category, LengthDist]
    requests: int
    prefix_pool: int = DEFAULT_PREFIX_POOL
    zipf_s: float = DEFAULT_ZIPF_S
    seed: int = 0
    qps: float = 1.0
    next_turn: Mapping[Category, float] = field(default_factory=lambda: dict(DEFAULT_NEXT_TURN))
    think_time_s: float = DEFAULT_THINK_TIME_S
    prefix_blocks: Mapping[Category, int] = field(default_factory=lambda: dict(DEFAULT_PREFIX_BLOCKS))

    def __post_init__(self) -> None:
        total = sum(self.mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"category mix must sum to 1, got {total}")
        if any(f < 0 for f in self.mix.values()):
            raise ValueError("category fractions must be >= 0")
        for cat, frac in self.mix.items():
            if frac > 0 and (cat not in self.prompt or cat not in self.gen):
                raise ValueError(f"no length distribution for category {cat.value}")
        if self.requests < 0:
            raise ValueError(f"requests must be >= 0, got {self.requests}")
        if self.prefix_pool < 1:
            raise ValueError(f"prefix_pool must be >= 1, got {self.prefix_pool}")
        if not self.zipf_s > 0:
            raise ValueError(f"zipf_s must be > 0, got {self.zipf_s}")
        if not self.qps > 0:
            raise ValueError(f"qps must be > 0, got {self.qps}")
        if any(not 0.0 <= p <= 1.0 for p in self.next_turn.values()):
            raise ValueError("next_turn probabilities must lie in [0, 1]")

    def with_(self, **changes) -> "TraceSpec":
        return replace(self, **changes)


def _uniform_spec(mix: Dict[Category, float], requests: int, p_mean: float, g_mean: float) -> TraceSpec:
    return TraceSpec(
        mix=mix,
        prompt={c: LengthDist(p_mean) for c in mix},
        gen={c: LengthDist(g_mean) for c in mix},
        requests=requests,
    )


# Workload rows: (requests, mean prompt, mean generation)
TRACE_PRESETS: Dict[str, TraceSpec] = {
    "traceB": _uniform_spec({Category.API: 0.6, Category.TEXT: 0.4}, 15_000, 832, 78),
    "traceA": _uniform_spec(
        {Category.API: 0.3, Category.TEXT: 0.3, Category.CODE: 0.2, Category.THINKING: 0.2},
        8_000, 2043, 394,
    ),
    "coder": _uniform_spec({Category.CODE: 1.0}, 2_500, 5538, 852),
    "thinking": _uniform_spec({Category.THINKING: 1.0}, 1_000, 3299, 3886),
}


# ----------------------------------------------------------------------
# Block hashing
# ----------------------------------------------------------------------
def block_hash(seed: int, origin: str, index: int) -> int:
    """64-bit content id of block ``index`` of ``origin``."""
    h = blake2b(f"{seed}:{origin}:{index}".encode("ascii"), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def zipf_cdf(n: int, s: float) -> np.ndarray:
    weights = np.power(np.arange(1, n + 1, dtype=np.float64), -s)
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


# ----------------------------------------------------------------------
# Synthesis
# ----------------------------------------------------------------------
def _block_ids(
    spec: TraceSpec,
    rid: int,
    cat: Category,
    n_blocks: int,
    pool_idx: int,
    parent: Request | None,
) -> Tuple[int, ...]:
    if parent is not None:
        shared = list(parent.block_ids[: min(parent.prompt_len // BLOCK_TOKENS, n_blocks - 1)])
    else:
        n_prefix = min(spec.prefix_blocks.get(cat, 0), n_blocks - 1)
        shared = [block_hash(spec.seed, f"sys/{cat.value}/{pool_idx}", i) for i in range(n_prefix)]
    own = [block_hash(spec.seed, f"req/{rid}", i) for i in range(len(shared), n_blocks)]
    return tuple(shared + own)


def synthesize_trace(spec: TraceSpec) -> Trace:
    """Generate a trace of exactly ``spec.requests`` requests.

    Conversation roots arrive as a Poisson process at ``spec.qps``. Every request
    spawns a follow-up turn of the same category with probability
    ``next_turn[category]``, arriving after an exponential think time.

    Raises:
        ValueError: If spec.requests is zero
    """
    if spec.requests <= 0:
        raise ValueError(f"requests must be >= 1, got {spec.requests}")

    rng = np.random.default_rng(spec.seed)
    cats = [c for c in Category if spec.mix.get(c, 0.0) > 0]
    probs = np.array([spec.mix[c] for c in cats], dtype=np.float64)
    cdf = zipf_cdf(spec.prefix_pool, spec.zipf_s)

    reqs: List[Request] = []
    followups: List[Tuple[float, int, Request]] = []  # (arrival, seq, parent)
    seq = 0
    next_root = float(rng.exponential(1.0 / spec.qps))

    while len(reqs) < spec.requests:
        rid = len(reqs)
        if followups and followups[0][0] <= next_root:
            arrival, _, parent = heapq.heappop(followups)
            cat = parent.category
        else:
            arrival, parent = next_root, None
            cat = cats[int(rng.choice(len(cats), p=probs))]
            next_root += float(rng.exponential(1.0 / spec.qps))

        prompt_len = spec.prompt[cat].sample(rng)
        gen_len = spec.gen[cat].sample(rng)
        n_blocks = math.ceil(prompt_len / BLOCK_TOKENS)
        pool_idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        req = Request(
            id=rid,
            arrival=arrival,
            category=cat,
            prompt_len=prompt_len,
            gen_len=gen_len,
            turn=parent.turn + 1 if parent else 1,
            block_ids=_block_ids(spec, rid, cat, n_blocks, min(pool_idx, spec.prefix_pool - 1), parent),
            parent=parent.id if parent else -1,
        )
        reqs.append(req)

        if rng.random() < spec.next_turn.get(cat, 0.0):
            gap = float(rng.exponential(spec.think_time_s)) if spec.think_time_s > 0 else 0.0
            heapq.heappush(followups, (arrival + gap, seq, req))
            seq += 1

    trace = Trace.from_requests(reqs)
    log.debug("Synthesized %d requests (zipf_s=%.3f, seed=%d)", len(trace), spec.zipf_s, spec.seed)
    return trace


# ----------------------------------------------------------------------
# Skew tuning
# ----------------------------------------------------------------------
def tune_zipf_exponent(
    spec: TraceSpec,
    block_fraction: float = 0.10,
    target: float = 0.77,
    bracket: Tuple[float, float] = (0.2, 4.0),
    xtol: float = 1e-3,
) -> float:
    """Find the Zipf exponent at which the hottest ``block_fraction`` of reused
    blocks receives ``target`` of all reuse events.

    The skew is measured on the generated trace with the same counter that
    ``trace_stats`` reports. If the target cannot be bracketed, the bracket end
    closest to it is returned with a warning.
    """
    from .stats import reuse_skew

    if not 0.0 < block_fraction < 1.0:
        raise ValueError(f"block_fraction must lie in (0, 1), got {block_fraction}")
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must lie in (0, 1), got {target}")

    def gap(s: float) -> float:
        return reuse_skew(synthesize_trace(spec.with_(zipf_s=s)), block_fraction) - target

    lo, hi = bracket
    f_lo, f_hi = gap(lo), gap(hi)
    if f_lo * f_hi > 0:
        best = lo if abs(f_lo) < abs(f_hi) else hi
        log.warning("Zipf target %.3f not bracketed in [%.2f, %.2f]; using s=%.2f", target, lo, hi, best)
        return best
    s = float(brentq(gap, lo, hi, xtol=xtol))
    log.info("Zipf exponent tuned: s=%.4f (top %.0f%% -> %.3f)", s, 100 * block_fraction, target)
    return s


__all__ = [
    "LengthDist", "TraceSpec", "TRACE_PRESETS", "DEFAULT_NEXT_TURN", "DEFAULT_PREFIX_BLOCKS",
    "block_hash", "zipf_cdf", "synthesize_trace", "tune_zipf_exponent",
]

"""Run metrics.

Responsibilities:
- HitCounters: prefix-block lookups per tier, by access and by byte
- RunMetrics: latency series, throughput, energy, transfer and policy ledgers

Public API:
- HIT_TIERS: tuple[str, ...]          # local, replica, remote, capacity, miss
- class HitCounters:
      record(tier, n, nbytes) / rates() -> dict
- class RunMetrics:
      makespan / token_throughput / request_throughput
      record_request(active)          # completed request
      record_transfer(path, cls, nbytes)
      infeasible(verdict, ...) -> RunMetrics

Notes:
- TTFT <= E2E holds per request; throughput = generated tokens / makespan,
  where the makespan runs from the first arrival to the last completion.
- Latency series stay raw here; percentiles are computed by the harness.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..runtime.metadata import META_DTYPE
from ..runtime.quant import DemotionLedger
from ..runtime.state import ActiveRequest
from .energy import EnergyBreakdown

HIT_TIERS = ("local", "replica", "remote", "capacity", "miss")

POLICY_COUNTERS = (
    "demotions", "evictions", "promotions", "cold_reads", "callbacks", "spills",
    "replicas", "revocations", "gc", "retained", "expired", "metadata_gc", "demotion_waits",
)


@dataclass(slots=True)
class HitCounters:
    accesses: Dict[str, int] = field(default_factory=lambda: {t: 0 for t in HIT_TIERS})
    bytes: Dict[str, float] = field(default_factory=lambda: {t: 0.0 for t in HIT_TIERS})

    def record(self, tier: str, n: int, nbytes: float) -> None:
        if tier not in self.accesses:
            raise ValueError(f"unknown hit tier {tier!r}")
        self.accesses[tier] += n
        self.bytes[tier] += nbytes

    def rates(self) -> Dict[str, Dict[str, float]]:
        """Share of lookups per tier, by access count and by bytes."""
        n = sum(self.accesses.values())
        b = sum(self.bytes.values())
        return {
            "per_access": {t: (self.accesses[t] / n if n else 0.0) for t in HIT_TIERS},
            "per_byte": {t: (self.bytes[t] / b if b else 0.0) for t in HIT_TIERS},
        }

    @property
    def hit_rate(self) -> float:
        n = sum(self.accesses.values())
        return 1.0 - self.accesses["miss"] / n if n else 0.0


@dataclass(slots=True)
class RunMetrics:
    """Result of one engine run.

    Attributes:
        mode: Topology label
        model: Model name
        qps: Arrival rate the trace was replayed at
        requests: Requests in the trace
        feasible: False when the node cannot hold the model
        verdict: "ok" or "OOM: ..."
        tp / groups: Tensor-parallel degree and number of serving groups
        ttft / e2e / queue_delay: One value per completed request
        tbt: All inter-token gaps, flattened
        tbt_mean: Mean inter-token gap per request (requests with >= 2 tokens)
        metadata_records / metadata_bytes: Packed base-die metadata table at the end of the run
        metadata_peak_records: Largest number of block records held during the run
    """
    mode: str = ""
    model: str = ""
    qps: float = 0.0
    requests: int = 0
    feasible: bool = True
    verdict: str = "ok"
    tp: int = 1
    groups: int = 1
    ttft: List[float] = field(default_factory=list)
    tbt: List[float] = field(default_factory=list)
    tbt_mean: List[float] = field(default_factory=list)
    e2e: List[float] = field(default_factory=list)
    queue_delay: List[float] = field(default_factory=list)
    completed: int = 0
    rejected: int = 0
    generated_tokens: int = 0
    first_arrival: Optional[float] = None
    last_completion: Optional[float] = None
    steps: int = 0
    hits: HitCounters = field(default_factory=HitCounters)
    energy: EnergyBreakdown = field(default_factory=EnergyBreakdown)
    transfer_bytes: Dict[str, float] = field(default_factory=dict)
    ledger: DemotionLedger = field(default_factory=DemotionLedger)
    ledger_balance: int = 0
    metadata_records: int = 0
    metadata_bytes: int = 0
    metadata_peak_records: int = 0
    layout_steps: Dict[str, int] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=lambda: {k: 0 for k in POLICY_COUNTERS})
    events: List[dict] = field(default_factory=list)

    # ------------------------------------------------------------------
    # Derived
    # ------------------------------------------------------------------
    @property
    def makespan(self) -> float:
        if self.first_arrival is None or self.last_completion is None:
            return 0.0
        return max(0.0, self.last_completion - self.first_arrival)

    @property
    def token_throughput(self) -> float:
        span = self.makespan
        return self.generated_tokens / span if span > 0 else 0.0

    @property
    def request_throughput(self) -> float:
        span = self.makespan
        return self.completed / span if span > 0 else 0.0

    @property
    def energy_per_token(self) -> EnergyBreakdown:
        return self.energy.per_token(self.generated_tokens)

    @property
    def metadata_peak_bytes(self) -> int:
        return self.metadata_peak_records * META_DTYPE.itemsize

    # ------------------------------------------------------------------
    # Recording
    # ------------------------------------------------------------------
    def record_request(self, a: ActiveRequest) -> None:
        if a.finished_at is None or a.first_token_at is None:
            raise ValueError(f"request {a.req.id} has not finished")
        arrival = a.req.arrival
        self.ttft.append(a.first_token_at - arrival)
        self.e2e.append(a.finished_at - arrival)
        self.queue_delay.append(a.admitted_at - arrival)
        if a.tbt:
            self.tbt.extend(a.tbt)
            self.tbt_mean.append(sum(a.tbt) / len(a.tbt))
        self.completed += 1
        if self.last_completion is None or a.finished_at > self.last_completion:
            self.last_completion = a.finished_at

    def record_transfer(self, path: str, cls: str, nbytes: float) -> None:
        key = f"{path}/{cls}"
        self.transfer_bytes[key] = self.transfer_bytes.get(key, 0.0) + nbytes

    def count(self, name: str, n: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + n

    @classmethod
    def infeasible(cls, verdict: str, *, mode: str = "", model: str = "", qps: float = 0.0, requests: int = 0) -> "RunMetrics":
        return cls(mode=mode, model=model, qps=qps, requests=requests, feasible=False, verdict=verdict)


__all__ = ["HIT_TIERS", "POLICY_COUNTERS", "HitCounters", "RunMetrics"]

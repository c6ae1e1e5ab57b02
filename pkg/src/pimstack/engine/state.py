"""Node state: serving groups, residency and the memory side of serving.

Responsibilities:
- Build a node for (model, topology): tensor-parallel groups, capacity plan,
  residency table, per-block metadata, reuse models
- Home assignment on arrival
- Admission: resolve prefix hits (local, replica, callback, promotion),
  reserve private and generation bytes, spill to capacity layers on shortage
- Step costing and token bookkeeping for one serving group
- Retirement: unpin, prefix retention, admission-window demotion
- Demotion, eviction, capacity GC, replication and the periodic refit tick

Public API:
- class Features:                  # effective toggles for one topology
- class GroupState:                # SchedulableGroup + DemotionTarget of one group
- class Node:
      arrive(req) -> int                       # home group
      start_step(group, now) -> (t_end, plan) | None
      complete_step(group, plan, now)
      refit(now)
      transfer_done(xfer, now)
      finish() -> RunMetrics

Notes:
- Baseline modes (AttAcc, FullGPU, Uniform) run with every TokenStack
  feature off: LRU, least-loaded homes, no quantization, no replication and
  a fixed TM_TM mapping.
- Raises CapacityError from the constructor when the weights do not fit.

See Also:
- loop.py: event dispatch
- simulation.py: run() facade
"""

from __future__ import annotations
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Mapping, Optional, Set, Tuple
import heapq
import logging

from ..layout.kv_layout import LayoutMode, LayoutParams, cost, select_layout
from ..model.config import ModelConfig
from ..model.workload import (
    decode_attention_traffic, fc_work, kv_bytes_per_token, prefill_attention_flops, weight_bytes,
)
from ..runtime.config import AblationFlags, EvictionConfig, PolicyConfig, ReplicationConfig
from ..runtime.eviction import CandidateQueues, run_demotion
from ..runtime.homes import assign_home, least_loaded
from ..runtime.metadata import BlockMeta, pack_table
from ..runtime.quant import DemotionLedger, quantized_size
from ..runtime.replication import ReplicaBook, replication_gate
from ..runtime.retention import RetentionBook, prefix_retention
from ..runtime.reuse import CategoryModel, ReuseHistory, fit_category_cdf, prior_model
from ..runtime.scheduler import make_waiting, schedule_step
from ..runtime.state import ActiveRequest, StepPlan
from ..runtime.transfers import Booking, LinkScheduler, Transfer, TransferClass, TransferKind
from ..stack.config import CapacityError, Mode, NodeTopology, Path, choose_tp, plan_capacity
from ..stack.residency import ResidencyTable, Tier
from ..trace.request import BLOCK_TOKENS, Category, Request
from .energy import EnergyParams, StepWork, account_energy
from .metrics import RunMetrics
from .timing import (
    AttentionWork, GroupTiming, TimingParams,
    decode_attention_time, fc_time, prefill_attention_time, transfer_time,
)

log = logging.getLogger("pimstack.engine.state")

_EPS = 1e-3  # bytes


@dataclass(frozen=True, slots=True)
class Features:
    """Toggles in effect for one run (all off for baseline modes)."""
    layout: bool
    topology: bool
    quantization: bool
    category_eviction: bool
    replication: bool

    @classmethod
    def for_topology(cls, topo: NodeTopology, flags: AblationFlags) -> "Features":
        ts = topo.mode is Mode.TOKENSTACK
        return cls(
            layout=ts and flags.layout,
            topology=ts and flags.topology,
            quantization=ts and flags.quantization,
            category_eviction=ts and flags.category_eviction,
            replication=ts and flags.replication,
        )


class GroupState:
    """One serving group: queue, running batch and demotion candidates."""

    def __init__(self, node: "Node", index: int) -> None:
        self.node = node
        self.index = index
        self.waiting = make_waiting()
        self.running: List[ActiveRequest] = []
        self.queues = CandidateQueues()
        self.busy = False
        self.pending = 0.0                      # KV demand of waiting requests
        self.work = StepWork()                  # transfer work since the last step
        self.cap_fifo: List[Tuple[int, int]] = []  # (demotion seq, block)

    @property
    def metas(self) -> Mapping[int, BlockMeta]:
        return self.node.metas

    @property
    def models(self) -> Mapping[Category, CategoryModel]:
        return self.node.models

    def occupancy(self) -> float:
        return self.node.residency.occupancy(self.index, Tier.COMPUTE)

    def in_flight_bytes(self) -> float:
        return self.node.residency.held(self.index)

    def demote(self, block: int, now: float) -> Tuple[Optional[Transfer], float]:
        return self.node.demote(self, block, now)

    def try_admit(self, req: Request, now: float) -> Optional[ActiveRequest]:
        return self.node.admit(self, req, now)

    def retire(self, active: ActiveRequest, now: float) -> None:
        self.node.retire(self, active, now)

    def reject(self, req: Request, now: float) -> None:
        self.node.reject(self, req, now)


class Node:
    """Mutable state of one simulated node."""

    def __init__(
        self,
        model: ModelConfig,
        topo: NodeTopology,
        *,
        policy: Optional[PolicyConfig] = None,
        eviction: Optional[EvictionConfig] = None,
        replication: Optional[ReplicationConfig] = None,
        timing: Optional[TimingParams] = None,
        energy: Optional[EnergyParams] = None,
        flags: Optional[AblationFlags] = None,
        record_events: bool = False,
    ) -> None:
        self.model = model
        self.topo = topo
        self.policy = policy or PolicyConfig()
        self.eviction = eviction or EvictionConfig()
        self.rc = replication or ReplicationConfig()
        self.energy_params = energy or EnergyParams()
        self.features = Features.for_topology(topo, flags or AblationFlags())
        self.record_events = record_events

        self.kvbpt = kv_bytes_per_token(model)
        self.weight_bytes = weight_bytes(model)
        self.tp = choose_tp(self.weight_bytes, topo.gpus)
        reserve = self.rc.reserve_fraction if self.features.replication else 0.0
        self.plan = plan_capacity(topo, self.weight_bytes, self.tp, reserve)
        if self.plan.comp_kv <= 0:
            raise CapacityError(f"{topo.label}: no compute-layer bytes left for KV after weights")
        self.n_groups = topo.gpus // self.tp
        if self.features.replication and self.n_groups <= self.rc.tau_cards:
            log.warning(
                "%s: replication needs more than %d accessing groups, node has %d (tp=%d); no replicas",
                topo.label, self.rc.tau_cards, self.n_groups, self.tp,
            )
        self.capacity_tier = topo.has_kv_capacity_tier and self.plan.cap_kv > 0

        comp_stacks = topo.pim_stacks or topo.stacks_per_gpu
        self.home_stacks = self.tp * comp_stacks
        self.tsv_lanes = self.tp * topo.stacks_per_gpu
        self.residency = ResidencyTable(
            groups=self.n_groups,
            tp=self.tp,
            stacks_per_gpu=topo.stacks_per_gpu,
            comp_stacks=comp_stacks,
            cap_stacks=topo.stacks_per_gpu,
            B=topo.stack.B,
            B_cap=topo.stack.B_cap,
            comp_bytes=self.plan.comp_kv * self.tp,
            cap_bytes=self.plan.cap_kv * self.tp,
            reserve_bytes=self.plan.replica_reserve * self.tp,
        )
        self.gt = GroupTiming.resolve(topo, self.tp, timing or TimingParams(),
                                      layout_on=self.features.layout, layers=model.layers)
        self.forced_layout: Optional[LayoutMode] = None if self.features.layout else LayoutMode.TM_TM

        self.metas: Dict[int, BlockMeta] = {}
        self.comp_index: Dict[int, int] = {}       # compute-resident primary -> group
        self.models: Dict[Category, CategoryModel] = {
            c: prior_model(c, self.policy.lifespan_s.get(c, 60.0), self.policy.fit_window_s) for c in Category
        }
        self.histories = {c: ReuseHistory(self.policy.fit_window_s) for c in Category}
        self.replicas = ReplicaBook()
        self.retention = RetentionBook()
        self.links = LinkScheduler()
        self.ledger = DemotionLedger()
        self.metrics = RunMetrics(mode=topo.label, model=model.name, tp=self.tp, groups=self.n_groups)
        self.groups = [GroupState(self, g) for g in range(self.n_groups)]
        self.outbox: List[Booking] = []

        self._homes: Dict[int, int] = {}            # request -> home stack
        self._conversations: Dict[int, int] = {}    # request -> conversation root
        self._retained: List[Tuple[float, int]] = []
        self._evicted: Deque[Tuple[float, int]] = deque()
        self._cap_seq = 0
        self._cap_stamp: Dict[int, int] = {}

        log.info(
            "Node ready: %s, %s, tp=%d, groups=%d, comp_kv=%.2f GB/card, cap_kv=%.2f GB/card",
            topo.label, model.name, self.tp, self.n_groups, self.plan.comp_kv / 1e9, self.plan.cap_kv / 1e9,
        )

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------
    def _event(self, kind: str, now: float, **fields) -> None:
        if self.record_events:
            self.metrics.events.append({"t": now, "event": kind, **fields})

    def _stored(self, fp16: float) -> float:
        return quantized_size(int(fp16)) if self.features.quantization else float(fp16)

    def demand(self, req: Request) -> float:
        return (req.prompt_len + req.gen_len) * self.kvbpt

    def load(self, g: int) -> float:
        cap = self.residency.capacity(g, Tier.COMPUTE)
        return (self.residency.used(g, Tier.COMPUTE) + self.groups[g].pending) / cap

    def _issue(self, xfer: Transfer, now: float, duration: float) -> float:
        """Book a transfer on its link; returns its completion time."""
        booking = self.links.schedule(xfer, now, duration)
        self.metrics.record_transfer(xfer.path.value, xfer.cls.value, xfer.nbytes)
        w = self.groups[xfer.group].work
        if xfer.path is Path.NVLINK:
            w.nvlink_bytes += xfer.nbytes
        else:
            w.tsv_bytes += xfer.nbytes
        if xfer.quantized:
            w.quant_bytes += xfer.nbytes
        if xfer.cls is TransferClass.BACKGROUND:
            self.outbox.append(booking)
        return booking.end

    def _touch(self, m: BlockMeta, g: int, now: float) -> None:
        gap = m.mark_access(g, now)
        self.histories[m.category].add(now, gap)

    # ------------------------------------------------------------------
    # Arrival
    # ------------------------------------------------------------------
    def arrive(self, req: Request) -> int:
        """Assign a home group and enqueue the request."""
        if self.metrics.first_arrival is None:
            self.metrics.first_arrival = req.arrival
        if req.parent >= 0:
            self._conversations[req.id] = self._conversations.get(req.parent, req.parent)
        loads = [self.load(g) for g in range(self.n_groups)]
        if self.features.topology:
            g, stack = assign_home(req.block_ids, self.comp_index, loads, slack=self.policy.affinity_slack,
                                   stacks=self.home_stacks, request_id=req.id)
        else:
            g, stack = least_loaded(loads), req.id % self.home_stacks
        self._homes[req.id] = stack
        grp = self.groups[g]
        grp.waiting.append(req)
        grp.pending += self.demand(req)
        return g

    # ------------------------------------------------------------------
    # Admission
    # ------------------------------------------------------------------
    def admit(self, grp: GroupState, req: Request, now: float) -> Optional[ActiveRequest]:
        """Reserve memory for ``req`` on its home group, or return None to wait."""
        g, rt, kv = grp.index, self.residency, self.kvbpt
        ids = req.block_ids

        local: List[int] = []
        replica: List[int] = []
        remote: List[int] = []
        cap_home: List[int] = []
        repeat: List[int] = []                  # later copies of an id in this request
        seen: Set[int] = set()
        first_miss = len(ids)
        for i, b in enumerate(ids):
            if b in seen:
                repeat.append(i)
                continue
            seen.add(b)
            if rt.has_replica(b, g):
                replica.append(i)
                continue
            e = rt.entry(b)
            if e is None:
                first_miss = i
                break
            if e.tier is Tier.COMPUTE:
                (local if e.group == g else remote).append(i)
            elif e.group == g:
                cap_home.append(i)
            else:
                remote.append(i)
        tail = range(first_miss, len(ids))
        fresh: List[int] = []
        shared_tail: List[int] = []
        for i in tail:
            b = ids[i]
            if b in seen and i != first_miss:
                repeat.append(i)
            elif b in rt:
                shared_tail.append(i)
            else:
                fresh.append(i)
            seen.add(b)
        repeated = set(repeat)
        missed = [i for i in tail if i not in repeated]

        def size(i: int) -> int:
            return req.block_tokens(i) * kv

        promotable = [i for i in cap_home if self.metas[ids[i]].pins == 0]
        promote_bytes = sum(self.metas[ids[i]].bytes_fp16 for i in promotable)
        private = float(sum(size(i) for i in remote + shared_tail))
        new_bytes = float(sum(size(i) for i in fresh))
        gen = float(req.gen_len * kv)

        pinned = [ids[i] for i in local + cap_home]
        for b in pinned:
            self.metas[b].pins += 1
            grp.queues.discard(b)

        promote, spill = True, False
        need = promote_bytes + private + new_bytes + gen
        free = rt.free(g, Tier.COMPUTE)
        if need > free + _EPS:
            run_demotion(grp, now, self.eviction, lru=not self.features.category_eviction, need_bytes=need - free)
            free = rt.free(g, Tier.COMPUTE)
        if need > free + _EPS and need <= free + rt.held(g) + _EPS:
            # Wait for in-flight demotions to land
            for b in pinned:
                self._unpin(grp, self.metas[b])
            self.metrics.count("demotion_waits")
            return None
        if need > free + _EPS:
            ok = self.capacity_tier
            if ok:
                spill = True
                if promote_bytes + private > free + _EPS:
                    promote = False
                    ok = private <= free + _EPS
            if ok:
                cold_need = sum(self._stored(size(i)) for i in fresh) + self._stored(gen)
                cap_free = rt.free(g, Tier.CAPACITY)
                if cold_need > cap_free + _EPS:
                    self._gc_capacity(grp, cold_need - cap_free, now)
                ok = cold_need <= rt.free(g, Tier.CAPACITY) + _EPS
            if not ok:
                for b in pinned:
                    self._unpin(grp, self.metas[b])
                return None

        a = ActiveRequest(
            req=req,
            group=g,
            stack=self._homes.pop(req.id, req.id % self.home_stacks),
            admitted_at=now,
            prefill_total=max(1, req.prompt_len - first_miss * BLOCK_TOKENS),
            pinned=pinned,
        )
        hits = self.metrics.hits

        # Leading hits
        for i in local:
            self._touch(self.metas[ids[i]], g, now)
            hits.record("local", 1, size(i))
        for i in repeat:
            hits.record("local", 1, size(i))
        for i in replica:
            self._touch(self.metas[ids[i]], g, now)
            self.replicas.record_remote_access(ids[i], g)
            hits.record("replica", 1, size(i))
        callback_bytes, callbacks = 0.0, 0
        for i in remote:
            m = self.metas[ids[i]]
            m.n_remote += 1
            self._touch(m, g, now)
            self.replicas.record_remote_access(m.block_id, g)
            hits.record("remote", 1, size(i))
            callback_bytes += size(i)
            callbacks += 1
            self._replicate(m, now)
        promoted_bytes, promoted = 0, 0
        for i in cap_home:
            m = self.metas[ids[i]]
            self._touch(m, g, now)
            hits.record("capacity", 1, m.bytes_fp16)
            if promote and i in promotable:
                self._promote(m)
                promoted_bytes += m.bytes_fp16
                promoted += 1
            else:
                a.cold_fp16 += m.bytes_fp16
                self.metrics.count("cold_reads")

        # Misses
        if missed:
            hits.record("miss", len(missed), float(sum(size(i) for i in missed)))
        for i in shared_tail:
            self._touch(self.metas[ids[i]], g, now)
        for i in fresh:
            b = ids[i]
            self._create(b, req.category, i * BLOCK_TOKENS, size(i), g, a.stack, now, cold=spill)
            a.pinned.append(b)
            if spill:
                a.cold_fp16 += size(i)

        # Reservations
        if private > 0:
            rt.reserve(g, Tier.COMPUTE, private)
            a.private_bytes = private
        if spill:
            a.gen_tier = Tier.CAPACITY
            a.gen_bytes = self._stored(gen)
            rt.reserve(g, Tier.CAPACITY, a.gen_bytes)
            self.metrics.count("spills")
        else:
            a.gen_bytes = gen
            rt.reserve(g, Tier.COMPUTE, gen)

        # Foreground transfers
        end = now
        if promoted:
            x = Transfer(TransferKind.PROMOTION, Path.TSV, promoted_bytes, g,
                         quantized=self.features.quantization, blocks=promoted)
            d = transfer_time(promoted_bytes, Path.TSV, x.quantized, self.topo, self.tsv_lanes)
            end = max(end, self._issue(x, now, d + promoted * self.gt.promotion_fixed_latency))
            self.metrics.count("promotions", promoted)
            self._event("promotion", now, group=g, request=req.id, blocks=promoted, bytes=promoted_bytes)
        if callbacks:
            x = Transfer(TransferKind.CALLBACK, Path.NVLINK, callback_bytes, g, blocks=callbacks)
            end = max(end, self._issue(x, now, transfer_time(callback_bytes, Path.NVLINK, False, self.topo, self.tp)))
            self.metrics.count("callbacks", callbacks)
            self._event("callback", now, group=g, request=req.id, blocks=callbacks, bytes=callback_bytes)
        a.fg_stall = end - now

        a.layout = select_layout(
            LayoutParams(L=req.prompt_len, d=self.model.head_dim, B=self.topo.stack.B), forced=self.forced_layout,
        )
        grp.pending = max(0.0, grp.pending - self.demand(req))
        log.debug("Admitted request %d on group %d (prefill=%d, spill=%s)", req.id, g, a.prefill_total, spill)
        return a

    def _create(self, b: int, cat: Category, offset: int, fp16: int, g: int, stack: int, now: float, cold: bool) -> None:
        old = self.metas.get(b)
        if old is not None:
            self.histories[cat].add(now, max(0.0, now - old.t_last))
        m = BlockMeta(block_id=b, category=cat, t_last=now, offset=offset, bytes_fp16=fp16,
                      home=(g, stack), cards=1 << g, pins=1)
        if cold:
            m.tier = Tier.CAPACITY
            m.quantized = self.features.quantization
            self.residency.place(b, g, Tier.CAPACITY, self._stored(fp16))
            self.ledger.spilled += fp16
            self._push_capacity(self.groups[g], b)
        else:
            self.residency.place(b, g, Tier.COMPUTE, fp16)
            self.comp_index[b] = g
        self.metas[b] = m
        if len(self.metas) > self.metrics.metadata_peak_records:
            self.metrics.metadata_peak_records = len(self.metas)

    def _promote(self, m: BlockMeta) -> None:
        self.residency.move(m.block_id, Tier.COMPUTE, m.bytes_fp16)
        self.ledger.promoted += m.bytes_fp16
        m.tier = Tier.COMPUTE
        m.quantized = False
        m.version += 1
        self.comp_index[m.block_id] = m.group
        self._cap_stamp.pop(m.block_id, None)

    def _unpin(self, grp: GroupState, m: BlockMeta) -> None:
        m.pins -= 1
        if m.pins == 0 and m.tier is Tier.COMPUTE and m.block_id not in self.retention:
            grp.queues.push(m)

    # ------------------------------------------------------------------
    # Retirement / rejection
    # ------------------------------------------------------------------
    def retire(self, grp: GroupState, a: ActiveRequest, now: float) -> None:
        g, req, rt = grp.index, a.req, self.residency
        self.metrics.record_request(a)
        if a.private_bytes:
            rt.release(g, Tier.COMPUTE, a.private_bytes)
        if a.gen_bytes:
            rt.release(g, a.gen_tier, a.gen_bytes)

        for b in a.pinned:
            m = self.metas[b]
            m.pins -= 1
            m.t_last = now
            m.version += 1

        cat = req.category
        if self.features.category_eviction:
            conv = self._conversations.get(req.id, req.id)
            cands = prefix_retention(req.block_ids, cat, self.policy.next_turn, self.policy.retention_threshold,
                                     self.policy.retention_budget, self.retention.retained(conv))
            eligible = [b for b in cands if self.metas[b].tier is Tier.COMPUTE and self.metas[b].pins == 0]
            kept = self.retention.keep(conv, eligible)
            until = now + self.models[cat].lifespan
            for b in kept:
                self.metas[b].retained_until = until
                heapq.heappush(self._retained, (until, b))
            if kept:
                self.metrics.count("retained", len(kept))

        immediate = (self.features.category_eviction and self.capacity_tier
                     and self.policy.admission_window_s.get(cat, 0.0) <= 0.0)
        for b in dict.fromkeys(a.pinned):
            m = self.metas[b]
            if m.pins or m.tier is not Tier.COMPUTE or b in self.retention:
                continue
            if immediate:
                self.demote(grp, b, now)
                self.metrics.count("expired")
            else:
                grp.queues.push(m)
        log.debug("Retired request %d on group %d", req.id, g)

    def reject(self, grp: GroupState, req: Request, now: float) -> None:
        grp.pending = max(0.0, grp.pending - self.demand(req))
        self._homes.pop(req.id, None)
        self.metrics.rejected += 1
        log.warning("Request %d rejected on group %d: %.2f GB of KV cannot fit",
                    req.id, grp.index, self.demand(req) / 1e9)

    # ------------------------------------------------------------------
    # Demotion, eviction, GC
    # ------------------------------------------------------------------
    def demote(self, grp: GroupState, block: int, now: float) -> Tuple[Optional[Transfer], float]:
        """Move a compute block to capacity layers, or discard it when there is no room."""
        m = self.metas.get(block)
        e = self.residency.entry(block)
        if m is None or e is None or e.tier is not Tier.COMPUTE or m.pins:
            return None, 0.0
        freed = e.nbytes
        g = grp.index
        if self.capacity_tier:
            stored = self._stored(m.bytes_fp16)
            free = self.residency.free(g, Tier.CAPACITY)
            if stored > free + _EPS:
                self._gc_capacity(grp, stored - free, now)
            if stored <= self.residency.free(g, Tier.CAPACITY) + _EPS:
                self.residency.move(block, Tier.CAPACITY, stored)
                self.residency.hold(g, freed)
                self.comp_index.pop(block, None)
                m.tier = Tier.CAPACITY
                m.quantized = self.features.quantization
                m.version += 1
                self.ledger.demoted += m.bytes_fp16
                self._push_capacity(grp, block)
                x = Transfer(TransferKind.DEMOTION, Path.TSV, float(m.bytes_fp16), g, block,
                             quantized=m.quantized, held=freed)
                self._issue(x, now, transfer_time(m.bytes_fp16, Path.TSV, m.quantized, self.topo, self.tsv_lanes))
                self.metrics.count("demotions")
                self._event("demotion", now, group=g, block=block, bytes=m.bytes_fp16, quantized=m.quantized)
                return x, freed
        self._evict(grp, block, now)
        self.metrics.count("evictions")
        return None, freed

    def _evict(self, grp: GroupState, block: int, now: float) -> None:
        m = self.metas[block]
        self.residency.remove(block)
        self.replicas.forget(block)
        self.retention.release(block)
        grp.queues.discard(block)
        self.comp_index.pop(block, None)
        self._cap_stamp.pop(block, None)
        m.tier = Tier.EVICTED
        m.quantized = False
        m.evicted_at = now
        m.version += 1
        self._evicted.append((now, block))

    def _push_capacity(self, grp: GroupState, block: int) -> None:
        self._cap_seq += 1
        self._cap_stamp[block] = self._cap_seq
        heapq.heappush(grp.cap_fifo, (self._cap_seq, block))

    def _gc_capacity(self, grp: GroupState, need: float, now: float) -> float:
        """Drop the oldest unpinned capacity blocks of a group until ``need`` bytes are free."""
        freed, n, skipped = 0.0, 0, []
        while freed < need and grp.cap_fifo:
            seq, b = heapq.heappop(grp.cap_fifo)
            if self._cap_stamp.get(b) != seq:
                continue
            m = self.metas[b]
            if m.pins:
                skipped.append((seq, b))
                continue
            freed += self.residency.entry(b).nbytes
            self.ledger.gc += m.bytes_fp16
            self._evict(grp, b, now)
            n += 1
        for item in skipped:
            heapq.heappush(grp.cap_fifo, item)
        if n:
            self._issue(Transfer(TransferKind.GC, Path.TSV, 0.0, grp.index, blocks=n), now, 0.0)
            self.metrics.count("gc", n)
            self._event("gc", now, group=grp.index, blocks=n, bytes=freed)
        return freed

    # ------------------------------------------------------------------
    # Replication
    # ------------------------------------------------------------------
    def _replicate(self, m: BlockMeta, now: float) -> None:
        if not self.features.replication or m.tier is not Tier.COMPUTE or not replication_gate(m, self.rc):
            return
        b, home = m.block_id, m.group
        for h in range(self.n_groups):
            if h == home or not (m.cards >> h) & 1 or self.residency.has_replica(b, h):
                continue
            if self.residency.replica_free(h) + _EPS < m.bytes_fp16:
                continue
            self.residency.add_replica(b, h, m.bytes_fp16)
            self.replicas.add(b, h, now)
            x = Transfer(TransferKind.REPLICA_FANOUT, Path.NVLINK, float(m.bytes_fp16), home, b)
            self._issue(x, now, transfer_time(m.bytes_fp16, Path.NVLINK, False, self.topo, self.tp))
            self.metrics.count("replicas")
            self._event("replication", now, block=b, source=home, target=h)

    # ------------------------------------------------------------------
    # Steps
    # ------------------------------------------------------------------
    def start_step(self, grp: GroupState, now: float) -> Optional[Tuple[float, StepPlan]]:
        """Plan and cost the next step of a group; None leaves the group idle."""
        plan = schedule_step(grp, now, self.policy)
        run_demotion(grp, now, self.eviction, lru=not self.features.category_eviction)
        if plan.empty:
            grp.busy = False
            return None
        grp.busy = True
        duration = self._step_cost(grp, plan)
        self.metrics.steps += 1
        return now + duration, plan

    def _step_cost(self, grp: GroupState, plan: StepPlan) -> float:
        m, gt, kv = self.model, self.gt, self.kvbpt
        fc_flops, wbytes = fc_work(m, plan.tokens)
        t = fc_time(fc_flops, wbytes, gt)

        pre_flops = 0.0
        for a, n in plan.prefill:
            cached = a.req.prompt_len - a.prefill_total
            pre_flops += prefill_attention_flops(m, n, max(1, cached + a.prefill_done + n))
        t += prefill_attention_time(pre_flops, gt)

        hot = cold = flops = comm = 0.0
        for a in plan.decode:
            ctx = a.context
            nbytes, f = decode_attention_traffic(m, ctx)
            c = a.cold_fp16 + (a.generated * kv if a.gen_tier is Tier.CAPACITY else 0)
            c = min(float(c), float(nbytes))
            cold += c
            hot += nbytes - c
            flops += f
            if gt.pim:
                p = LayoutParams(L=ctx, d=m.head_dim, B=self.topo.stack.B)
                comm += m.layers * m.heads * cost(a.layout, p) * m.dtype_bytes
            key = a.layout.value
            self.metrics.layout_steps[key] = self.metrics.layout_steps.get(key, 0) + 1
        if plan.decode:
            work = AttentionWork(hot, cold, flops, comm, mixed=True)
            t += decode_attention_time(work, gt)
        t += max((a.fg_stall for a in plan.admitted), default=0.0)

        w, grp.work = grp.work, StepWork()
        w.weight_bytes += wbytes
        w.fc_flops += fc_flops
        w.attn_flops_gpu += pre_flops
        if gt.pim:
            w.attn_flops_pim += flops
            w.tsv_bytes += comm + cold
        else:
            w.attn_flops_gpu += flops
            w.ucie_kv_bytes += hot + cold
        if self.features.quantization:
            w.quant_bytes += cold
        self.metrics.energy.add(account_energy(w, self.energy_params))
        return t

    def complete_step(self, grp: GroupState, plan: StepPlan, now: float) -> None:
        tokens = 0
        for a in plan.decode:
            a.generated += 1
            a.tbt.append(now - a.last_token_at)
            a.last_token_at = now
            tokens += 1
            if a.generated >= a.req.gen_len:
                a.finished_at = now
        for a, n in plan.prefill:
            a.prefill_done += n
            if not a.in_prefill:
                a.generated = 1
                a.first_token_at = a.last_token_at = now
                tokens += 1
                if a.req.gen_len == 1:
                    a.finished_at = now
        self.metrics.generated_tokens += tokens

    # ------------------------------------------------------------------
    # Periodic work
    # ------------------------------------------------------------------
    def refit(self, now: float) -> None:
        """Refit reuse models, release retention, expire windows, revoke replicas, GC metadata."""
        pol = self.policy
        for c in Category:
            self.models[c] = fit_category_cdf(self.histories[c].gaps(now), self.models[c],
                                              pol.lambda_max, pol.lifespan_quantile)

        while self._retained and self._retained[0][0] <= now:
            until, b = heapq.heappop(self._retained)
            m = self.metas.get(b)
            if m is None or m.retained_until != until or not self.retention.release(b):
                continue
            m.retained_until = 0.0
            if m.tier is Tier.COMPUTE and not m.pins:
                self.groups[m.group].queues.push(m)

        if self.features.category_eviction and self.capacity_tier:
            for grp in self.groups:
                for b in grp.queues.blocks():
                    m = self.metas[b]
                    if now - m.t_last > pol.admission_window_s.get(m.category, float("inf")):
                        grp.queues.pop(b)
                        self.demote(grp, b, now)
                        self.metrics.count("expired")

        if self.features.replication:
            for b, h in self.replicas.revoke_pass(self.rc, now, min_age=pol.refit_period_s):
                self.residency.drop_replica(b, h)
                self.replicas.remove(b, h)
                self.metrics.count("revocations")
                self._event("revocation", now, block=b, group=h)

        horizon = now - pol.metadata_gc_s
        while self._evicted and self._evicted[0][0] <= horizon:
            t, b = self._evicted.popleft()
            m = self.metas.get(b)
            if m is not None and m.tier is Tier.EVICTED and m.evicted_at == t:
                del self.metas[b]
                self.metrics.count("metadata_gc")

        for grp in self.groups:
            run_demotion(grp, now, self.eviction, lru=not self.features.category_eviction)
        log.debug("Refit at t=%.1f: %s", now, {c.value: round(cm.lam, 6) for c, cm in self.models.items()})

    def transfer_done(self, xfer: Transfer, now: float) -> None:
        """A background transfer landed: release the compute bytes it held."""
        if xfer.held:
            self.residency.unhold(xfer.group, xfer.held)
        log.debug("%s of %d block(s) done at t=%.6f (group %d)", xfer.kind.value, xfer.blocks, now, xfer.group)

    def drain_outbox(self) -> List[Booking]:
        out, self.outbox = self.outbox, []
        return out

    @property
    def idle(self) -> bool:
        return all(not grp.busy and not grp.waiting and not grp.running for grp in self.groups)

    # ------------------------------------------------------------------
    # Finish
    # ------------------------------------------------------------------
    def finish(self) -> RunMetrics:
        """Close the energy and byte ledgers and return the metrics."""
        for grp in self.groups:
            w, grp.work = grp.work, StepWork()
            self.metrics.energy.add(account_energy(w, self.energy_params))
        resident = sum(m.bytes_fp16 for m in self.metas.values() if m.tier is Tier.CAPACITY)
        self.metrics.ledger = self.ledger
        self.metrics.ledger_balance = self.ledger.balance(resident)
        table = pack_table(self.metas.values())
        self.metrics.metadata_records = len(table)
        self.metrics.metadata_bytes = int(table.nbytes)
        return self.metrics


__all__ = ["Features", "GroupState", "Node"]

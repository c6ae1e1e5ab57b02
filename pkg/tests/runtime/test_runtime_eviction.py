# tests/runtime/test_runtime_eviction.py
"""Unit-Tests für die Compute-Lagen-Demotion.

TESTBASIS (ISTQB):
- Anforderung: Lexikographischer Demotionsscore, Auswahl nur unter den
  Warteschlangenfronten je Kategorie, Schleife bis occupancy <= theta_lo
- Module: pimstack.runtime.eviction
- Funktionen: demotion_score, CandidateQueues, select_victim, run_demotion

TESTVERFAHREN:
- Orakel: Brute-Force-Nachbildung der Frontauswahl über >= 1000 Zufallsinstanzen
- Grenzwertanalyse: occupancy unter theta_hi, leere Warteschlangen, need_bytes
- Zustandsübergänge: veraltete Heap-Einträge nach erneutem Zugriff
"""
import random
from typing import Dict, List

import pytest

pytestmark = pytest.mark.unit

from pimstack.runtime.config import EvictionConfig
from pimstack.runtime.eviction import CandidateQueues, demotion_score, run_demotion, select_victim
from pimstack.runtime.metadata import BlockMeta
from pimstack.runtime.quant import quantized_size
from pimstack.runtime.reuse import CategoryModel
from pimstack.runtime.transfers import Transfer, TransferClass, TransferKind
from pimstack.stack.config import Path
from pimstack.stack.residency import Tier
from pimstack.trace.request import Category


# ===============================================================================
# FIXTURES: Demotionsziel
# ===============================================================================

class _Group:
    """Minimaler DemotionTarget: Belegung = Bytes / Kapazität."""

    def __init__(self, metas: Dict[int, BlockMeta], models, capacity: float) -> None:
        self.metas = metas
        self.models = models
        self.queues = CandidateQueues()
        self.capacity = capacity
        self.used = float(sum(m.bytes_fp16 for m in metas.values()))
        self.order: List[int] = []
        for m in metas.values():
            self.queues.push(m)

    def occupancy(self) -> float:
        return self.used / self.capacity

    def demote(self, block, now):
        m = self.metas[block]
        self.used -= m.bytes_fp16
        self.order.append(block)
        xfer = Transfer(TransferKind.DEMOTION, Path.TSV, quantized_size(m.bytes_fp16), 0, block, quantized=True)
        return xfer, float(m.bytes_fp16)


@pytest.fixture
def meta():
    """Factory für BlockMeta im Compute-Tier."""
    def _make(block_id, category=Category.API, t_last=0.0, offset=0, n_remote=0, nbytes=100):
        return BlockMeta(block_id=block_id, category=category, t_last=t_last, offset=offset,
                         bytes_fp16=nbytes, n_remote=n_remote)
    return _make


@pytest.fixture
def models():
    return {c: CategoryModel(c, lam=0.1, lifespan=10.0) for c in Category}


# ===============================================================================
# TESTGRUPPE 1: demotion_score
# ===============================================================================

def test_deeper_offset_demoted_first(meta, models):
    """Testbedingung: Gleiche Reuse-Wahrscheinlichkeit, Offsets 100 vs 500.

    Erwartung: Offset 500 hat den kleineren Score (wird zuerst demotet).
    """
    shallow, deep = meta(1, offset=100), meta(2, offset=500)
    cm = models[Category.API]
    assert demotion_score(deep, 5.0, cm) < demotion_score(shallow, 5.0, cm)


def test_fewer_remote_hits_demoted_first(meta, models):
    cold, hot = meta(1, n_remote=0), meta(2, n_remote=9)
    cm = models[Category.API]
    assert demotion_score(cold, 5.0, cm) < demotion_score(hot, 5.0, cm)


def test_reuse_dominates_other_fields(meta):
    """Testbedingung: Reuse 0.9 vs 0.1 bei sonst für den Reuse-armen Block ungünstigen Feldern.

    Erwartung: Der Block mit geringer Reuse-Wahrscheinlichkeit wird zuerst demotet.
    """
    likely = CategoryModel(Category.API, lam=1e-3, lifespan=2302.0)     # ~0.9
    unlikely = CategoryModel(Category.TEXT, lam=1e-3, lifespan=105.4)   # ~0.1
    a = meta(1, category=Category.API, offset=10_000, n_remote=0)
    b = meta(2, category=Category.TEXT, offset=0, n_remote=99)
    assert demotion_score(b, 0.0, unlikely) < demotion_score(a, 0.0, likely)


def test_score_requires_compute_tier(meta, models):
    m = meta(1)
    m.tier = Tier.CAPACITY
    with pytest.raises(ValueError):
        demotion_score(m, 0.0, models[Category.API])


# ===============================================================================
# TESTGRUPPE 2: Warteschlangen
# ===============================================================================

def test_queue_front_is_oldest_per_category(meta):
    q = CandidateQueues()
    for m in (meta(1, t_last=5.0), meta(2, t_last=1.0), meta(3, Category.CODE, t_last=9.0)):
        q.push(m)
    assert q.fronts() == [(Category.API, 2), (Category.CODE, 3)]


def test_stale_entries_skipped_after_touch(meta):
    """Zustandsübergang: Zugriff erhöht version → alter Heap-Eintrag verfällt."""
    q = CandidateQueues()
    a, b = meta(1, t_last=1.0), meta(2, t_last=2.0)
    q.push(a)
    q.push(b)
    a.mark_access(group=0, now=10.0)
    q.push(a)
    assert q.fronts() == [(Category.API, 2)]
    q.discard(2)
    assert q.fronts() == [(Category.API, 1)]
    assert len(q) == 1


def test_lru_picks_global_oldest_front(meta, models):
    metas = {1: meta(1, Category.API, t_last=3.0), 2: meta(2, Category.CODE, t_last=1.0)}
    q = CandidateQueues()
    for m in metas.values():
        q.push(m)
    assert select_victim(q, metas, models, now=5.0, lru=True) == 2
    assert select_victim(CandidateQueues(), metas, models, now=5.0) is None


# ===============================================================================
# TESTGRUPPE 3: run_demotion
# ===============================================================================

def test_below_high_water_no_demotion(meta, models):
    metas = {i: meta(i, t_last=float(i)) for i in range(9)}
    g = _Group(metas, models, capacity=1000.0)  # 0.9 <= theta_hi 0.95
    assert run_demotion(g, 10.0, EvictionConfig()) == []


def test_demotes_until_low_water(meta, models):
    """Testbedingung: 10 Blöcke à 100 B, Kapazität 1000 → occupancy 1.0.

    Erwartung: Demotion bis <= 0.85 (2 Blöcke), Transfers Hintergrund + K8V4.
    """
    metas = {i: meta(i, t_last=float(i)) for i in range(10)}
    g = _Group(metas, models, capacity=1000.0)

    xfers = run_demotion(g, 20.0, EvictionConfig())

    assert len(xfers) == 2
    assert g.occupancy() <= 0.85
    assert all(x.cls is TransferClass.BACKGROUND and x.quantized for x in xfers)
    assert all(x.nbytes == pytest.approx(37.5) for x in xfers)


def test_need_bytes_forces_demotion(meta, models):
    metas = {i: meta(i, t_last=float(i)) for i in range(3)}
    g = _Group(metas, models, capacity=1000.0)
    xfers = run_demotion(g, 5.0, EvictionConfig(), need_bytes=150.0)
    assert len(xfers) == 2


def test_empty_queues_end_loop(meta, models):
    metas = {0: meta(0)}
    g = _Group(metas, models, capacity=50.0)
    g.queues.discard(0)
    assert run_demotion(g, 1.0, EvictionConfig()) == []


def _oracle(metas, models, used, capacity, cfg, now, lru):
    """Brute-Force-Nachbildung: je Runde alle Blöcke scannen, Front je Kategorie
    bestimmen, Fronten vollständig bewerten, Minimum in Kategoriereihenfolge."""
    remaining = dict(metas)
    seq = []
    if used / capacity <= cfg.theta_hi:
        return seq
    while used / capacity > cfg.theta_lo and remaining:
        best, best_key = None, None
        for cat in Category:
            members = [m for m in remaining.values() if m.category is cat]
            if not members:
                continue
            front = min(members, key=lambda m: (m.t_last, m.block_id))
            key = (front.t_last, front.block_id) if lru else demotion_score(front, now, models[cat])
            if best_key is None or key < best_key:
                best, best_key = front, key
        seq.append(best.block_id)
        used -= best.bytes_fp16
        del remaining[best.block_id]
    return seq


@pytest.mark.parametrize("lru", [False, True])
def test_selection_sequence_matches_oracle(lru):
    """Testbedingung: 1500 Zufallsinstanzen (<= 12 Blöcke, <= 3 Kategorien).

    Erwartung: Demotionsreihenfolge identisch zum Brute-Force-Orakel (100 %).
    """
    rng = random.Random(1234)
    cats = list(Category)
    cfg = EvictionConfig(theta_hi=0.9, theta_lo=0.5)
    for case in range(1500):
        n = rng.randint(1, 12)
        used_cats = rng.sample(cats, rng.randint(1, 3))
        models = {c: CategoryModel(c, lam=rng.choice([0.01, 0.1, 1.0]), lifespan=rng.choice([1.0, 10.0, 60.0]))
                  for c in Category}
        metas = {}
        for i in range(n):
            b = 1000 + i
            metas[b] = BlockMeta(
                block_id=b, category=rng.choice(used_cats), t_last=float(rng.randint(0, 5)),
                offset=16 * rng.randint(0, 4), bytes_fp16=rng.choice([64, 128, 256]),
                n_remote=rng.randint(0, 2),
            )
        total = sum(m.bytes_fp16 for m in metas.values())
        capacity = total / rng.uniform(0.8, 1.0)
        now = 6.0

        g = _Group(metas, models, capacity)
        run_demotion(g, now, cfg, lru=lru)

        assert g.order == _oracle(metas, models, float(total), capacity, cfg, now, lru), case

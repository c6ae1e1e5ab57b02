# tests/stack/test_stack_residency.py
"""Unit-Tests für die Residenztabelle und Adressübersetzung.

TESTBASIS (ISTQB):
- Anforderung: Blöcke liegen genau in einer Schicht; Übersetzung liefert Bank
  und Seitenoffset; Kapazitäten werden nie überschritten
- Module: pimstack.stack.residency
- Funktionen: capacity_page_bank, ResidencyTable.place/move/remove/add_replica,
  translate

TESTVERFAHREN:
- Zustandsübergänge: place → move(CAPACITY) → move(COMPUTE) → remove
- Grenzwertanalyse: Seite p = B_cap, volle Schicht
- Fehlerfälle: unbekannter Block (Miss), doppelte Platzierung
"""
import pytest

pytestmark = pytest.mark.unit

from pimstack.stack.config import CapacityError
from pimstack.stack.residency import (
    LayerKind, ResidencyTable, Tier, capacity_page_bank, translate,
)


# ===============================================================================
# FIXTURES
# ===============================================================================

@pytest.fixture
def table():
    """Factory für eine kleine Residenztabelle (2 Gruppen, TP=1)."""
    def _make(comp=1000.0, cap=1000.0, reserve=100.0, groups=2, B=4, B_cap=2):
        return ResidencyTable(groups=groups, tp=1, stacks_per_gpu=2, comp_stacks=2, cap_stacks=2,
                              B=B, B_cap=B_cap, comp_bytes=comp, cap_bytes=cap, reserve_bytes=reserve)
    return _make


# ===============================================================================
# TESTGRUPPE 1: Seiteninterleaving
# ===============================================================================

@pytest.mark.parametrize("p,expected", [(0, 0), (64, 0), (65, 1), (63, 63)])
def test_capacity_page_bank(p, expected):
    assert capacity_page_bank(p, 64) == expected


def test_capacity_page_bank_rejects_zero_banks():
    with pytest.raises(ValueError):
        capacity_page_bank(1, 0)


# ===============================================================================
# TESTGRUPPE 2: Platzierung und Übersetzung
# ===============================================================================

def test_unregistered_block_is_miss(table):
    assert translate(42, table()) is None


def test_place_then_demote_then_promote(table):
    """Testbedingung: Block platziert, demotet, promotet.

    Erwartung: layer_kind folgt der Schicht; Bytes wandern zwischen Schichten.
    """
    # ARRANGE
    t = table()
    loc = t.place(7, group=1, tier=Tier.COMPUTE, nbytes=100.0)
    assert loc.layer_kind is LayerKind.COMPUTE
    assert loc.card == 1

    # ACT: Demotion (3/8 der Größe)
    cap_loc = t.move(7, Tier.CAPACITY, 37.5)

    # ASSERT
    assert cap_loc.layer_kind is LayerKind.CAPACITY
    assert cap_loc.bank == capacity_page_bank(cap_loc.page_offset, 2)
    assert t.used(1, Tier.COMPUTE) == 0.0
    assert t.used(1, Tier.CAPACITY) == pytest.approx(37.5)
    assert translate(7, t).layer_kind is LayerKind.CAPACITY

    # ACT: Promotion
    t.move(7, Tier.COMPUTE, 100.0)
    assert translate(7, t).layer_kind is LayerKind.COMPUTE
    assert t.used(1, Tier.CAPACITY) == 0.0


def test_pages_spread_over_stacks(table):
    """Aufeinanderfolgende Seiten einer Gruppe wechseln den Stack."""
    t = table()
    a = t.place(1, 0, Tier.COMPUTE, 10.0)
    b = t.place(2, 0, Tier.COMPUTE, 10.0)
    c = t.place(3, 0, Tier.COMPUTE, 10.0)
    assert (a.stack, b.stack, c.stack) == (0, 1, 0)
    assert c.page_offset == 1


def test_freed_page_is_reused(table):
    t = table()
    first = t.place(1, 0, Tier.CAPACITY, 10.0)
    t.place(2, 0, Tier.CAPACITY, 10.0)
    t.remove(1)
    again = t.place(3, 0, Tier.CAPACITY, 10.0)
    assert again == first


def test_remove_returns_entry_and_frees_bytes(table):
    t = table()
    t.place(5, 0, Tier.COMPUTE, 300.0)
    e = t.remove(5)
    assert e.nbytes == 300.0
    assert 5 not in t
    assert t.free(0, Tier.COMPUTE) == pytest.approx(1000.0)
    assert t.remove(5) is None


# ===============================================================================
# TESTGRUPPE 3: Kapazitätsgrenzen
# ===============================================================================

def test_place_beyond_capacity_raises(table):
    t = table(comp=100.0)
    t.place(1, 0, Tier.COMPUTE, 80.0)
    with pytest.raises(CapacityError):
        t.place(2, 0, Tier.COMPUTE, 30.0)
    t.check()


def test_double_place_and_evicted_tier_rejected(table):
    t = table()
    t.place(1, 0, Tier.COMPUTE, 1.0)
    with pytest.raises(ValueError):
        t.place(1, 1, Tier.COMPUTE, 1.0)
    with pytest.raises(ValueError):
        t.place(2, 0, Tier.EVICTED, 1.0)


def test_reservations_count_towards_occupancy(table):
    t = table(comp=1000.0)
    t.place(1, 0, Tier.COMPUTE, 250.0)
    t.reserve(0, Tier.COMPUTE, 250.0)
    assert t.occupancy(0) == pytest.approx(0.5)
    t.release(0, Tier.COMPUTE, 250.0)
    assert t.occupancy(0) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        t.release(0, Tier.COMPUTE, 1.0)


def test_held_bytes_block_free_space_until_released(table):
    """Testbedingung: Block demotet, seine Compute-Bytes bleiben bis zum Transferende belegt.

    Erwartung: free() sinkt um die gehaltenen Bytes, occupancy() nicht; Freigabe stellt free() her.
    """
    t = table(comp=1000.0)
    t.place(1, 0, Tier.COMPUTE, 400.0)
    t.move(1, Tier.CAPACITY, 150.0)
    t.hold(0, 400.0)

    assert t.held(0) == pytest.approx(400.0)
    assert t.free(0, Tier.COMPUTE) == pytest.approx(600.0)
    assert t.occupancy(0) == pytest.approx(0.0)
    assert t.held(1) == 0.0
    with pytest.raises(CapacityError):
        t.place(2, 0, Tier.COMPUTE, 700.0)
    t.check()

    t.unhold(0, 400.0)
    assert t.free(0, Tier.COMPUTE) == pytest.approx(1000.0)
    with pytest.raises(ValueError):
        t.unhold(0, 1.0)


def test_empty_tier_reports_full(table):
    """Grenzwert: Schicht ohne Kapazität gilt als voll (occupancy 1.0)."""
    assert table(cap=0.0).occupancy(0, Tier.CAPACITY) == 1.0


# ===============================================================================
# TESTGRUPPE 4: Replikate
# ===============================================================================

def test_replica_translation_prefers_local_copy(table):
    """Testbedingung: Primärkopie auf Gruppe 0, Replikat auf Gruppe 1.

    Erwartung: translate(group=1) zeigt auf Karte 1, ohne Gruppe auf Karte 0.
    """
    t = table()
    t.place(9, 0, Tier.COMPUTE, 50.0)
    t.add_replica(9, 1, 50.0)

    assert translate(9, t, group=1).card == 1
    assert translate(9, t).card == 0
    assert t.replica_groups(9) == [1]
    assert t.replica_used(1) == pytest.approx(50.0)


def test_replica_reserve_limit(table):
    t = table(reserve=60.0)
    t.place(1, 0, Tier.COMPUTE, 50.0)
    t.place(2, 0, Tier.COMPUTE, 50.0)
    t.add_replica(1, 1, 50.0)
    with pytest.raises(CapacityError):
        t.add_replica(2, 1, 50.0)


def test_replica_needs_compute_primary(table):
    t = table()
    t.place(1, 0, Tier.CAPACITY, 10.0)
    with pytest.raises(ValueError):
        t.add_replica(1, 1, 10.0)


def test_remove_drops_replicas(table):
    t = table()
    t.place(1, 0, Tier.COMPUTE, 10.0)
    t.add_replica(1, 1, 10.0)
    t.remove(1)
    assert t.replica_groups(1) == []
    assert t.replica_used(1) == 0.0

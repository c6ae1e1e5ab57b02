# tests/layout/test_layout_placement.py
"""Unit-Tests für die gierige Objektplatzierung.

TESTBASIS (ISTQB):
- Anforderung: PIM-affine Objekte nach absteigender Zugriffshäufigkeit in die
  Compute-Lagen, Kapazitätsgrenze nie verletzt
- Module: pimstack.layout.placement
- Funktionen: greedy_placement, placement_utility, compute_bytes

TESTVERFAHREN:
- Orakel: Exhaustive Suche über alle 2^n Platzierungen (gleiche Größen, n <= 15)
- Fuzzing: 10 000 Zufallsinstanzen auf Kapazitätsverletzung
- Grenzwertanalyse: c_comp=0, alle beta=0, Gleichstand bei alpha
"""
import itertools
import random
import pytest

pytestmark = pytest.mark.unit

from pimstack.layout.placement import (
    Domain, PlacementObject, compute_bytes, greedy_placement, placement_utility,
)


def _exhaustive_best(objs, c_comp):
    best = 0.0
    for mask in itertools.product((0, 1), repeat=len(objs)):
        chosen = [o for o, m in zip(objs, mask) if m]
        if sum(o.size for o in chosen) <= c_comp:
            best = max(best, sum(o.alpha * o.beta for o in chosen))
    return best


# ===============================================================================
# TESTGRUPPE 1: Beispiele
# ===============================================================================

def test_beta_zero_always_capacity():
    """Erwartung: beta=0-Objekte landen unabhängig von alpha in Kapazitätslagen."""
    objs = [PlacementObject(i, 10.0, 1.0, 0) for i in range(4)]
    placement = greedy_placement(objs, c_comp=1e9)
    assert set(placement.values()) == {Domain.CAPACITY}


def test_higher_alpha_admitted_first():
    objs = [PlacementObject(1, 10.0, 0.5, 1), PlacementObject(0, 10.0, 0.9, 1)]
    placement = greedy_placement(objs, c_comp=10.0)
    assert placement == {0: Domain.COMPUTE, 1: Domain.CAPACITY}


def test_alpha_tie_prefers_smaller_then_lower_id():
    objs = [PlacementObject(0, 8.0, 0.7, 1), PlacementObject(2, 5.0, 0.7, 1), PlacementObject(1, 5.0, 0.7, 1)]
    placement = greedy_placement(objs, c_comp=5.0)
    assert [i for i, d in sorted(placement.items()) if d is Domain.COMPUTE] == [1]


def test_skip_and_continue():
    """Testbedingung: Großes Objekt passt nicht mehr, kleineres danach schon.

    Erwartung: Großes übersprungen, kleineres aufgenommen.
    """
    objs = [PlacementObject(0, 6.0, 0.9, 1), PlacementObject(1, 6.0, 0.8, 1), PlacementObject(2, 3.0, 0.1, 1)]
    placement = greedy_placement(objs, c_comp=9.0)
    assert placement == {0: Domain.COMPUTE, 1: Domain.CAPACITY, 2: Domain.COMPUTE}


def test_eight_equal_objects_optimal():
    rng = random.Random(8)
    objs = [PlacementObject(i, 4.0, rng.random(), 1) for i in range(8)]
    placement = greedy_placement(objs, c_comp=20.0)
    assert placement_utility(objs, placement) == pytest.approx(_exhaustive_best(objs, 20.0))
    assert compute_bytes(objs, placement) == pytest.approx(20.0)


def test_zero_capacity_and_negative_capacity():
    objs = [PlacementObject(0, 1.0, 1.0, 1)]
    assert greedy_placement(objs, 0.0) == {0: Domain.CAPACITY}
    with pytest.raises(ValueError):
        greedy_placement(objs, -1.0)


@pytest.mark.parametrize("kwargs", [dict(size=0.0), dict(alpha=1.5), dict(beta=2)])
def test_object_validation(kwargs):
    base = dict(id=0, size=1.0, alpha=0.5, beta=1)
    base.update(kwargs)
    with pytest.raises(ValueError):
        PlacementObject(**base)


# ===============================================================================
# TESTGRUPPE 2: Optimalität und Fuzzing
# ===============================================================================

@pytest.mark.slow
def test_greedy_matches_exhaustive_on_equal_sizes():
    """Testbedingung: 200 Instanzen, gleiche Größen, n <= 15, gemischtes beta.

    Erwartung: Nutzen identisch zum exhaustiven Optimum.
    """
    rng = random.Random(1)
    for _ in range(200):
        n = rng.randint(1, 15)
        size = rng.choice([1.0, 2.5, 7.0])
        objs = [PlacementObject(i, size, round(rng.random(), 3), rng.randint(0, 1)) for i in range(n)]
        c_comp = size * rng.randint(0, n)
        placement = greedy_placement(objs, c_comp)
        assert placement_utility(objs, placement) == pytest.approx(_exhaustive_best(objs, c_comp))


def test_capacity_never_exceeded_fuzz():
    """Testbedingung: 10 000 Zufallsinstanzen mit verschiedenen Größen.

    Erwartung: Compute-Bytes <= c_comp, jedes Objekt genau einmal zugeordnet.
    """
    rng = random.Random(2)
    for _ in range(10_000):
        n = rng.randint(0, 12)
        objs = [PlacementObject(i, rng.uniform(0.1, 10.0), rng.random(), rng.randint(0, 1)) for i in range(n)]
        c_comp = rng.uniform(0.0, 40.0)
        placement = greedy_placement(objs, c_comp)
        assert set(placement) == {o.id for o in objs}
        assert compute_bytes(objs, placement) <= c_comp + 1e-9
        assert all(placement[o.id] is Domain.CAPACITY for o in objs if o.beta == 0)

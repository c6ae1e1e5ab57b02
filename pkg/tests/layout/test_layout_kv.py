# tests/layout/test_layout_kv.py
"""Unit-Tests für KV-Layouts und die Layoutwahl.

TESTBASIS (ISTQB):
- Anforderung: Kommunikationsvolumina je Layout, Schwellen der Layoutwahl
- Module: pimstack.layout.kv_layout
- Funktionen: key_bank, value_bank, comm_volumes, cost, thresholds, select_layout

TESTVERFAHREN:
- Formelprüfung: literale Neuberechnung jedes Terms über Zufallsgitter
- Grenzwertanalyse: L genau auf den Schwellen, B=1
- Orakel: Brute-Force-Kostenminimum bei hysteresis=1
"""
import itertools
import random
import pytest

pytestmark = pytest.mark.unit

from pimstack.layout.kv_layout import (
    LayoutMode, LayoutParams, comm_volumes, cost, key_bank, select_layout, thresholds, value_bank,
)


# ===============================================================================
# TESTGRUPPE 1: Bankzuordnung
# ===============================================================================

@pytest.mark.parametrize("fn,idx,B,expected", [
    (key_bank, 5, 4, 1),
    (key_bank, 0, 4, 0),
    (value_bank, 8, 8, 0),
    (value_bank, 3, 8, 3),
])
def test_bank_mapping(fn, idx, B, expected):
    assert fn(idx, B) == expected


@pytest.mark.parametrize("L,B", [(1024, 256), (1000, 256), (7, 4)])
def test_keys_balance_over_banks(L, B):
    """Erwartung: Jede Bank hält floor(L/B) oder ceil(L/B) Schlüssel."""
    counts = [0] * B
    for n in range(L):
        counts[key_bank(n, B)] += 1
    assert set(counts) <= {L // B, -(-L // B)}


def test_bank_mapping_rejects_zero_banks():
    with pytest.raises(ValueError):
        key_bank(1, 0)
    with pytest.raises(ValueError):
        value_bank(1, 0)


# ===============================================================================
# TESTGRUPPE 2: Kommunikationsvolumina
# ===============================================================================

def test_tm_dh_example():
    """Testbedingung: TM_DH, d=128, L=1024, B=256.

    Erwartung: t_bank = 128+4+1024+0.5 = 1156.5, t_agg = 1152.
    """
    v = comm_volumes(LayoutMode.TM_DH, LayoutParams(L=1024, d=128, B=256))
    assert v.t_bank == pytest.approx(1156.5)
    assert v.t_agg == pytest.approx(1152)


def test_tm_tm_example():
    v = comm_volumes(LayoutMode.TM_TM, LayoutParams(L=1024, d=128, B=256))
    assert v.t_agg == pytest.approx(33_792)


def test_single_bank_degeneracy():
    """Grenzwert: B=1 → alle t_agg = L+d, TM_DH t_bank = 2(L+d)."""
    p = LayoutParams(L=300, d=64, B=1)
    assert {comm_volumes(m, p).t_agg for m in LayoutMode} == {364.0}
    assert comm_volumes(LayoutMode.TM_DH, p).t_bank == pytest.approx(2 * 364)


def test_volumes_match_formulas_on_random_grid():
    """Testbedingung: 300 Zufallstripel (L, d, B).

    Erwartung: Jeder Term entspricht der literalen Formel.
    """
    rng = random.Random(0)
    for _ in range(300):
        L, d, B = rng.randint(1, 65_536), rng.choice([32, 64, 128, 256]), rng.choice([1, 4, 16, 64, 256])
        p = LayoutParams(L=L, d=d, B=B)
        assert comm_volumes(LayoutMode.TM_DH, p).t_bank == pytest.approx(d + L / B + L + d / B)
        assert comm_volumes(LayoutMode.TM_DH, p).t_agg == pytest.approx(L + d)
        assert comm_volumes(LayoutMode.TM_TM, p).t_bank == pytest.approx(2 * d + 2 * L / B)
        assert comm_volumes(LayoutMode.TM_TM, p).t_agg == pytest.approx(L + B * d)
        assert comm_volumes(LayoutMode.DH_DH, p).t_bank == pytest.approx(2 * L + 2 * d / B)
        assert comm_volumes(LayoutMode.DH_DH, p).t_agg == pytest.approx(B * L + d)


# ===============================================================================
# TESTGRUPPE 3: Layoutwahl
# ===============================================================================

def test_thresholds_with_default_gamma():
    """Testbedingung: gamma=1/B, hysteresis=2, d=128.

    Erwartung: Schwellen exakt d/4=32 und 4d=512.
    """
    lo, hi = thresholds(LayoutParams(L=1, d=128, B=256))
    assert lo == 32.0
    assert hi == 512.0


@pytest.mark.parametrize("L,expected", [
    (1024, LayoutMode.TM_TM),
    (513, LayoutMode.TM_TM),
    (512, LayoutMode.TM_DH),
    (128, LayoutMode.TM_DH),
    (32, LayoutMode.TM_DH),
    (31, LayoutMode.DH_DH),
    (16, LayoutMode.DH_DH),
])
def test_select_layout_switch_points(L, expected):
    """Erwartung: Wechsel genau jenseits von L=4d bzw. L=d/4."""
    assert select_layout(LayoutParams(L=L, d=128, B=256)) is expected


def test_forced_layout_wins():
    p = LayoutParams(L=16, d=128, B=256)
    assert select_layout(p, forced=LayoutMode.TM_TM) is LayoutMode.TM_TM


def test_selection_matches_brute_force_without_hysteresis():
    """Testbedingung: hysteresis=1 über ein (L, d, B, gamma)-Gitter.

    Erwartung: Gewähltes Layout hat in 100 % der Fälle minimale Kosten.
    """
    Ls = [1, 8, 31, 32, 33, 100, 128, 500, 512, 513, 1024, 4096, 65_536]
    ds = [64, 128, 256]
    Bs = [1, 2, 16, 256]
    gammas = [None, 0.01, 0.5, 2.0]
    for L, d, B, g in itertools.product(Ls, ds, Bs, gammas):
        p = LayoutParams(L=L, d=d, B=B, gamma=g, hysteresis=1.0)
        best = min(cost(m, p) for m in LayoutMode)
        assert cost(select_layout(p), p) == pytest.approx(best, rel=1e-12, abs=1e-9), (L, d, B, g)


@pytest.mark.parametrize("kwargs", [
    dict(L=0, d=128, B=4), dict(L=1, d=0, B=4), dict(L=1, d=1, B=0),
    dict(L=1, d=1, B=4, gamma=0.0), dict(L=1, d=1, B=4, hysteresis=0.5),
])
def test_layout_params_validation(kwargs):
    with pytest.raises(ValueError):
        LayoutParams(**kwargs)

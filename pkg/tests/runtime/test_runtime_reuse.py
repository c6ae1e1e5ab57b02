# tests/runtime/test_runtime_reuse.py
"""Unit-Tests für das Wiederverwendungsmodell je Kategorie.

TESTBASIS (ISTQB):
- Anforderung: Exponentielle Reuse-CDF, Wiederverwendungswahrscheinlichkeit
  innerhalb der Lebensdauer, periodisches Nachfitten
- Module: pimstack.runtime.reuse
- Funktionen: reuse_prob, fit_category_cdf, prior_model, ReuseHistory

TESTVERFAHREN:
- Formelprüfung: geschlossene Form gegen F(dt+l) - F(dt)
- Grenzwertanalyse: dt=0, dt sehr groß, eine Stichprobe, nur Nullen
- Fehlerfälle: negatives dt, lambda <= 0
"""
import math
import pytest

pytestmark = pytest.mark.unit

from pimstack.runtime.reuse import CategoryModel, ReuseHistory, fit_category_cdf, prior_model, reuse_prob
from pimstack.trace.request import Category


# ===============================================================================
# TESTGRUPPE 1: reuse_prob
# ===============================================================================

def test_long_lifespan_means_certain_reuse():
    cm = CategoryModel(Category.API, lam=1.0, lifespan=1e9)
    assert reuse_prob(cm, 0.0) == pytest.approx(1.0)


def test_unit_rate_unit_lifespan():
    """Testbedingung: lambda=1, lifespan=1, dt=0.

    Erwartung: 1 - e^-1 ≈ 0.6321, gleich F(1) - F(0).
    """
    cm = CategoryModel(Category.API, lam=1.0, lifespan=1.0)
    assert reuse_prob(cm, 0.0) == pytest.approx(0.6321, abs=1e-4)
    assert reuse_prob(cm, 0.0) == pytest.approx(cm.cdf(1.0) - cm.cdf(0.0))


@pytest.mark.parametrize("dt", [0.5, 2.0, 7.5])
def test_reuse_prob_matches_cdf_difference(dt):
    cm = CategoryModel(Category.TEXT, lam=0.3, lifespan=4.0)
    assert reuse_prob(cm, dt) == pytest.approx(cm.cdf(dt + 4.0) - cm.cdf(dt))


def test_reuse_prob_tail_vanishes():
    cm = CategoryModel(Category.CODE, lam=1.0, lifespan=10.0)
    assert reuse_prob(cm, 1e4) == pytest.approx(0.0, abs=1e-12)


def test_reuse_prob_rejects_negative_dt():
    with pytest.raises(ValueError):
        reuse_prob(prior_model(Category.API, 60.0), -1.0)


@pytest.mark.parametrize("lam,life", [(0.0, 1.0), (1.0, 0.0)])
def test_category_model_validation(lam, life):
    with pytest.raises(ValueError):
        CategoryModel(Category.API, lam=lam, lifespan=life)


def test_prior_mean_equals_lifespan():
    cm = prior_model(Category.TEXT, 300.0)
    assert 1.0 / cm.lam == pytest.approx(300.0)
    assert cm.samples == 0


# ===============================================================================
# TESTGRUPPE 2: fit_category_cdf
# ===============================================================================

def test_fit_constant_samples():
    """Testbedingung: Alle Stichproben 10 s → lambda = 0.1."""
    cm = fit_category_cdf([10.0] * 5, prior_model(Category.API, 60.0))
    assert cm.lam == pytest.approx(0.1)
    assert cm.samples == 5


def test_fit_mixed_samples():
    """Testbedingung: {5, 15} → Mittel 10 s → lambda = 0.1."""
    assert fit_category_cdf([5.0, 15.0], prior_model(Category.API, 60.0)).lam == pytest.approx(0.1)


def test_fit_one_sample_keeps_prior():
    prior = prior_model(Category.API, 60.0)
    assert fit_category_cdf([3.0], prior) is prior


def test_fit_all_zero_clamps_lambda():
    cm = fit_category_cdf([0.0, 0.0, 0.0], prior_model(Category.API, 60.0), lambda_max=50.0)
    assert cm.lam == 50.0


def test_fitted_lifespan_is_quantile():
    """Erwartung: F(lifespan) == lifespan_quantile."""
    cm = fit_category_cdf([2.0, 4.0], prior_model(Category.CODE, 600.0), lifespan_quantile=0.9)
    assert cm.cdf(cm.lifespan) == pytest.approx(0.9)
    assert cm.category is Category.CODE


# ===============================================================================
# TESTGRUPPE 3: ReuseHistory
# ===============================================================================

def test_history_prunes_outside_window():
    h = ReuseHistory(window=10.0)
    h.add(0.0, 1.0)
    h.add(5.0, 2.0)
    h.add(12.0, 3.0)
    assert h.gaps(now=12.0) == [2.0, 3.0]
    assert len(h) == 2
    assert math.isclose(sum(h.gaps(now=30.0)), 0.0)

# tests/trace/test_trace_stats.py
"""Unit-Tests für Tracestatistiken.

TESTBASIS (ISTQB):
- Anforderung: Wiederverwendungsanteil, Skew-Kurve und Gesprächslücken
- Module: pimstack.trace.stats
- Funktionen: trace_stats, reuse_skew, skew_curve

TESTVERFAHREN:
- Äquivalenzklassen: keine Wiederverwendung, volle Überlappung, Mischfall
- Grenzwertanalyse: ein Request, leerer Trace, fraction=1
"""
import pytest

pytestmark = pytest.mark.unit

from pimstack.trace.request import Trace
from pimstack.trace.stats import SKEW_POINTS, reuse_skew, skew_curve, trace_stats


# ===============================================================================
# TESTGRUPPE 1: Wiederverwendung
# ===============================================================================

def test_single_request_has_no_reuse(make_trace):
    """Testbedingung: Ein Request.

    Erwartung: reuse_fraction == 0, Skew 0.
    """
    st = trace_stats(make_trace(n=1))
    assert st.reuse_fraction == 0.0
    assert st.reuse_events == 0
    assert all(y == 0.0 for _, y in st.skew)


def test_identical_block_ids_fully_reused(make_request):
    """Testbedingung: Zwei Requests mit identischen block_ids.

    Erwartung: Jeder Block genau einmal wiederverwendet.
    """
    # ARRANGE
    blocks = (1, 2, 3, 4)
    trace = Trace.from_requests([
        make_request(id=0, arrival=0.0, block_ids=blocks),
        make_request(id=1, arrival=4.0, block_ids=blocks),
    ])

    # ACT
    st = trace_stats(trace)

    # ASSERT
    assert st.distinct_blocks == 4
    assert st.reuse_fraction == pytest.approx(1.0)
    assert st.reuse_events == 4
    assert st.inter_reuse["api"] == [4.0, 4.0, 4.0, 4.0]


def test_skew_hot_block_dominates(make_request):
    """Testbedingung: Block 1 wird 9-mal, Blöcke 2..10 je einmal wiederverwendet.

    Erwartung: Top 10 % (1 von 10 Blöcken) trägt 9/18 der Ereignisse.
    """
    reqs = []
    for i in range(10):
        reqs.append(make_request(id=i, arrival=float(i), prompt_len=16, block_ids=(1,)))
    for b in range(2, 11):
        for k in range(2):
            reqs.append(make_request(id=100 + 2 * b + k, arrival=float(b), prompt_len=16, block_ids=(b,)))
    trace = Trace.from_requests(reqs)

    assert reuse_skew(trace, 0.10) == pytest.approx(9 / 18)
    assert reuse_skew(trace, 1.0) == pytest.approx(1.0)


def test_skew_curve_uses_default_points(make_trace):
    curve = skew_curve(make_trace(n=3, shared_prefix=2))
    assert [x for x, _ in curve] == list(SKEW_POINTS)
    assert curve[-1][1] == pytest.approx(1.0)


# ===============================================================================
# TESTGRUPPE 2: Längen und Fehlerfälle
# ===============================================================================

def test_lengths_and_categories(make_trace):
    st = trace_stats(make_trace(n=4, prompt_len=64, gen_len=8, category="code"))
    assert st.mean_prompt == 64.0
    assert st.mean_gen == 8.0
    assert st.per_category["code"] == 4
    assert st.prompt_pct["p99"] == 64.0


def test_to_dict_is_json_friendly(make_trace):
    d = trace_stats(make_trace(n=2, shared_prefix=1)).to_dict()
    assert d["requests"] == 2
    assert isinstance(d["skew"][0], list)
    assert d["inter_reuse_samples"]["api"] == 1


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        trace_stats(Trace.from_requests([]))


@pytest.mark.parametrize("bad", [0.0, 1.5])
def test_reuse_skew_fraction_range(make_trace, bad):
    with pytest.raises(ValueError):
        reuse_skew(make_trace(n=2), bad)

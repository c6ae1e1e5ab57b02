# tests/runtime/test_runtime_scheduling.py
"""Unit-Tests für Heimatzuordnung, Continuous Batching und Policy-Konfiguration.

TESTBASIS (ISTQB):
- Anforderung: Präfixaffine Heimatgruppe, FIFO-Admission mit Backfill,
  Tokenbudget (Decode vor Prefill), Ablationsschalter
- Module: pimstack.runtime.homes, .scheduler, .state, .config
- Funktionen: assign_home, prefix_groups, schedule_step, ActiveRequest,
  EvictionConfig, PolicyConfig, AblationFlags

TESTVERFAHREN:
- Äquivalenzklassen: Präfix vorhanden / fehlend, Admission möglich / abgelehnt
- Grenzwertanalyse: Budget durch Decode ausgeschöpft, Ankunft in der Zukunft
- Zustandsübergänge: Retire → Backfill im selben Schritt
"""
from collections import deque

import pytest

pytestmark = pytest.mark.unit

from pimstack.runtime.config import ABLATION_ORDER, AblationFlags, EvictionConfig, PolicyConfig, ReplicationConfig
from pimstack.runtime.homes import assign_home, least_loaded, prefix_groups
from pimstack.runtime.scheduler import make_waiting, schedule_step
from pimstack.runtime.state import ActiveRequest


# ===============================================================================
# FIXTURES
# ===============================================================================

class _Group:
    """SchedulableGroup mit einstellbarer Admission."""

    def __init__(self, admit=True, in_flight=0.0):
        self.waiting = make_waiting()
        self.running = []
        self.admit = admit
        self.retired = []
        self.rejected = []
        self.in_flight = in_flight

    def try_admit(self, req, now):
        if not self.admit:
            return None
        return ActiveRequest(req=req, group=0, stack=0, admitted_at=now, prefill_total=req.prompt_len)

    def retire(self, active, now):
        self.retired.append(active.req.id)

    def reject(self, req, now):
        self.rejected.append(req.id)

    def in_flight_bytes(self):
        return self.in_flight


def _decoding(make_request, id, gen_len=8):
    r = make_request(id=id, prompt_len=16, gen_len=gen_len)
    return ActiveRequest(req=r, group=0, stack=0, admitted_at=0.0, prefill_total=16, prefill_done=16, generated=1)


# ===============================================================================
# TESTGRUPPE 1: Heimatzuordnung
# ===============================================================================

def test_all_prefix_on_one_group():
    """Testbedingung: Alle führenden Blöcke auf Gruppe 2.

    Erwartung: Heimat ist Gruppe 2, auch wenn sie nicht am wenigsten belastet ist.
    """
    index = {1: 2, 2: 2, 3: 2}
    assert assign_home([1, 2, 3, 4], index, loads=[0.1, 0.1, 0.5, 0.1])[0] == 2


def test_no_prefix_goes_least_loaded():
    assert assign_home([1, 2], {}, loads=[0.4, 0.2, 0.2, 0.9]) == (1, 0)


def test_longer_prefix_wins():
    index = {b: 0 for b in range(10)}
    index.update({b: 1 for b in range(10, 13)})
    counts = prefix_groups(list(range(13)), index)
    assert counts == {0: 10, 1: 3}
    assert assign_home(list(range(13)), index, loads=[0.5, 0.0])[0] == 0


def test_prefix_walk_stops_at_first_miss():
    assert prefix_groups([1, 2, 3], {1: 0, 3: 1}) == {0: 1}


def test_slack_overrides_hot_group():
    index = {1: 0}
    assert assign_home([1], index, loads=[0.9, 0.1], slack=0.25)[0] == 1
    assert assign_home([1], index, loads=[0.3, 0.1], slack=0.25)[0] == 0


def test_home_stack_round_robin():
    assert assign_home([], {}, loads=[0.0], stacks=4, request_id=7) == (0, 3)
    assert least_loaded([0.2, 0.1, 0.1]) == 1
    with pytest.raises(ValueError):
        assign_home([], {}, loads=[])


# ===============================================================================
# TESTGRUPPE 2: schedule_step
# ===============================================================================

def test_single_request_gets_first_chunk(make_request):
    """Testbedingung: Leeres System, ein angekommener Request mit 2000 Prompttokens.

    Erwartung: Admission und genau ein Prefill-Chunk von 512 Tokens.
    """
    g = _Group()
    g.waiting.append(make_request(id=0, prompt_len=2000))

    plan = schedule_step(g, now=0.0, cfg=PolicyConfig())

    assert len(plan.admitted) == 1
    assert [(a.req.id, n) for a, n in plan.prefill] == [(0, 512)]
    assert plan.decode == []
    assert plan.tokens == 512


def test_decode_saturates_budget(make_request):
    """Grenzwert: Budget 2 bei 2 decodierenden Requests → kein Prefill."""
    g = _Group()
    g.running = [_decoding(make_request, 1), _decoding(make_request, 2)]
    g.waiting.append(make_request(id=3, prompt_len=64))

    plan = schedule_step(g, 0.0, PolicyConfig(token_budget=2))

    assert [a.req.id for a in plan.decode] == [1, 2]
    assert plan.prefill == []
    assert [a.req.id for a in plan.admitted] == [3]


def test_finished_slot_backfilled_same_step(make_request):
    """Zustandsübergang: max_running=1, laufender Request fertig, einer wartet.

    Erwartung: Retire und Admission im selben Schritt.
    """
    g = _Group()
    done = _decoding(make_request, 1, gen_len=1)
    g.running = [done]
    g.waiting.append(make_request(id=2, prompt_len=32))

    plan = schedule_step(g, 1.0, PolicyConfig(max_running=1))

    assert g.retired == [1]
    assert [a.req.id for a in g.running] == [2]
    assert [(a.req.id, n) for a, n in plan.prefill] == [(2, 32)]


def test_future_arrival_not_admitted(make_request):
    g = _Group()
    g.waiting.append(make_request(id=0, arrival=5.0))
    plan = schedule_step(g, 1.0, PolicyConfig())
    assert plan.empty and len(g.waiting) == 1


def test_unadmittable_request_rejected_on_idle_group(make_request):
    g = _Group(admit=False)
    g.waiting.extend([make_request(id=0), make_request(id=1)])
    schedule_step(g, 0.0, PolicyConfig())
    assert g.rejected == [0, 1]


def test_unadmittable_request_waits_behind_running(make_request):
    g = _Group(admit=False)
    g.running = [_decoding(make_request, 9)]
    g.waiting.append(make_request(id=0))
    plan = schedule_step(g, 0.0, PolicyConfig())
    assert g.rejected == [] and len(g.waiting) == 1
    assert [a.req.id for a in plan.decode] == [9]


def test_unadmittable_request_waits_for_in_flight_demotion(make_request):
    """Testbedingung: Keine laufenden Requests, aber Demotion-Bytes noch unterwegs.

    Erwartung: Request bleibt in der Warteschlange statt abgewiesen zu werden.
    """
    g = _Group(admit=False, in_flight=4096.0)
    g.waiting.append(make_request(id=0))
    plan = schedule_step(g, 0.0, PolicyConfig())
    assert g.rejected == [] and len(g.waiting) == 1
    assert plan.empty


def test_prefill_split_by_remaining_budget(make_request):
    g = _Group()
    g.waiting = deque([make_request(id=0, prompt_len=300), make_request(id=1, prompt_len=300)])
    plan = schedule_step(g, 0.0, PolicyConfig(token_budget=400))
    assert [(a.req.id, n) for a, n in plan.prefill] == [(0, 300), (1, 100)]


# ===============================================================================
# TESTGRUPPE 3: Konfiguration
# ===============================================================================

@pytest.mark.parametrize("hi,lo", [(0.85, 0.95), (1.1, 0.5), (0.9, 0.0)])
def test_eviction_config_validation(hi, lo):
    with pytest.raises(ValueError):
        EvictionConfig(theta_hi=hi, theta_lo=lo)


@pytest.mark.parametrize("kwargs", [
    dict(chunk_tokens=0), dict(retention_budget=-1), dict(lifespan_quantile=1.0), dict(lambda_max=0.0),
])
def test_policy_config_validation(kwargs):
    with pytest.raises(ValueError):
        PolicyConfig(**kwargs)


def test_replication_config_validation():
    with pytest.raises(ValueError):
        ReplicationConfig(reserve_fraction=0.6)
    with pytest.raises(ValueError):
        ReplicationConfig(tau_hits=-1)


def test_ablation_flags_cumulative():
    assert AblationFlags.cumulative(0) == AblationFlags.bare()
    assert AblationFlags.cumulative(5) == AblationFlags()
    flags = AblationFlags.cumulative(2)
    assert [k for k, v in flags.enabled().items() if v] == list(ABLATION_ORDER[:2])
    with pytest.raises(ValueError):
        AblationFlags.cumulative(6)

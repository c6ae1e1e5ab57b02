# tests/conftest.py
import os
import sys
import random
from pathlib import Path
import pytest

# -----------------------------
# src auf PYTHONPATH
# -----------------------------
ROOT = Path(__file__).resolve().parents[1]
for cand in (ROOT / "src",):
    if cand.exists() and str(cand) not in sys.path:
        sys.path.insert(0, str(cand))


# ===============================================================================
# pytest Fixtures für Wiederverwendbarkeit (Okken, Kap. 3 - "Fixtures")
# ===============================================================================
# Zentrale Fixtures reduzieren Code-Duplikation in der Arrange-Phase und
# entsprechen dem DRY-Prinzip (Beck, TDD).
# ===============================================================================

@pytest.fixture
def make_request():
    """Factory für Request-Objekte mit passenden Block-IDs.

    Testbasis: trace/request.py (len(block_ids) == ceil(prompt_len / 16))

    Verwendung:
        def test_something(make_request):
            r = make_request(id=3, arrival=1.0, prompt_len=64)
    """
    from pimstack.trace.request import BLOCK_TOKENS, Category, Request

    def _make(id=0, arrival=0.0, category=Category.API, prompt_len=64, gen_len=4,
              turn=1, block_ids=None, parent=-1, block_base=None):
        n = -(-prompt_len // BLOCK_TOKENS)
        if block_ids is None:
            base = (id + 1) * 1_000 if block_base is None else block_base
            block_ids = tuple(base + i for i in range(n))
        return Request(
            id=id, arrival=arrival, category=Category.parse(category),
            prompt_len=prompt_len, gen_len=gen_len, turn=turn,
            block_ids=tuple(block_ids), parent=parent,
        )
    return _make


@pytest.fixture
def make_trace(make_request):
    """Factory für kleine Traces.

    Verwendung:
        trace = make_trace(n=8, gap=0.5)                  # 8 Requests, eigene Blöcke
        trace = make_trace(n=8, shared_prefix=4)          # gemeinsame Präfixblöcke
    """
    from pimstack.trace.request import Trace

    def _make(n=4, gap=0.5, prompt_len=64, gen_len=4, category="api", shared_prefix=0):
        reqs = []
        for i in range(n):
            blocks = [10_000 + j for j in range(shared_prefix)]
            total = -(-prompt_len // 16)
            blocks += [(i + 1) * 1_000 + j for j in range(total - len(blocks))]
            reqs.append(make_request(id=i, arrival=i * gap, category=category,
                                     prompt_len=prompt_len, gen_len=gen_len, block_ids=blocks[:total]))
        return Trace.from_requests(reqs)
    return _make


@pytest.fixture
def make_node():
    """Factory für einen Node auf kleiner Topologie (Qwen3-4B, Standardmodus TokenStack).

    Testbasis: engine/state.py Node-Konstruktor
    """
    from pimstack.engine.state import Node
    from pimstack.model.config import get_model
    from pimstack.stack.modes import build_topology

    def _make(mode="TokenStack", model="Qwen3-4B", **kwargs):
        return Node(get_model(model), build_topology(mode), **kwargs)
    return _make


@pytest.fixture
def small_synth_trace():
    """Factory für deterministische, kleine synthetische Traces."""
    from pimstack.trace.synth import TRACE_PRESETS, synthesize_trace

    def _make(preset="traceB", requests=60, seed=0, **changes):
        spec = TRACE_PRESETS[preset].with_(requests=requests, seed=seed, **changes)
        return synthesize_trace(spec)
    return _make


# ===============================================================================
# Marker für Testpyramide (ISTQB/Linz - Testebenen)
# ===============================================================================

def pytest_configure(config):
    """Registriert Custom-Marker für Testarten nach ISTQB-Testpyramide."""
    config.addinivalue_line(
        "markers", "unit: Unit-Tests (schnell, isoliert, Basis der Testpyramide)"
    )
    config.addinivalue_line(
        "markers", "integration: Integration-Tests (mehrere Komponenten)"
    )
    config.addinivalue_line(
        "markers", "e2e: End-to-End-Tests (volle Simulation)"
    )


# -----------------------------
# Reproduzierbarkeit: Seeds
#   PIMSTACK_SEED=1337 (Default)
# -----------------------------
@pytest.fixture(scope="session", autouse=True)
def _seed_session():
    seed = int(os.getenv("PIMSTACK_SEED", "1337"))
    random.seed(seed)
    try:
        import numpy as np
        np.random.seed(seed)
    except Exception:
        pass
    yield


# -----------------------------
# Debug-Schalter durchreichen
#   PIMSTACK_DEBUG=1 -> ausführliches Logging in App
# -----------------------------
@pytest.fixture(autouse=True)
def _debug_flag(monkeypatch):
    monkeypatch.setenv("PIMSTACK_DEBUG", os.getenv("PIMSTACK_DEBUG", "0"))
    yield

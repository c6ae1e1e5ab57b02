# tests/integration/conftest.py
"""Fixtures für End-to-End-Tests.

TESTBASIS:
- Synthetische Traces in Desk-Größe (traceB-ähnlich bzw. thinking)
- Einmal pro Session erzeugt, da synthesize_trace deterministisch ist
"""
import pytest


@pytest.fixture(scope="session")
def desk_trace():
    """Factory mit Cache: (preset, requests, seed) -> Trace."""
    from pimstack.trace.synth import TRACE_PRESETS, synthesize_trace

    cache = {}

    def _make(preset="traceB", requests=300, seed=0):
        key = (preset, requests, seed)
        if key not in cache:
            cache[key] = synthesize_trace(TRACE_PRESETS[preset].with_(requests=requests, seed=seed))
        return cache[key]
    return _make

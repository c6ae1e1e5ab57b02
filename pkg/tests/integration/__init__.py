# tests/integration/__init__.py
"""End-to-end tests for pimstack.

TESTBASIS (ISTQB):
- Systemnahe Tests über Trace-Synthese, Simulation und Sweep-Auswertung
- Richtungsaussagen (Verhältnisse, Korrelationen) statt exakter Zahlen

TESTSTUFEN:
1. Unit Tests (tests/trace/, tests/runtime/, ...) - isolierte Module
2. Integration Tests (tests/engine/, tests/harness/) - ein Lauf, ein Sweep
3. E2E Tests (hier) - Sweeps über Modi, Raten und Ablationsschritte
"""

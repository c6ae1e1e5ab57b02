"""Zipf exponent tuner for the trace presets.

For every preset, finds the exponent at which the hottest 10% of reused blocks
carry the target share of reuse events, then prints the skew curve of the
tuned trace.

Run from repo root: python tools/tune_zipf.py [requests] [target]
"""
from __future__ import annotations
import sys
from pathlib import Path

_SRC = Path(__file__).resolve().parents[1] / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from pimstack.trace.stats import skew_curve
from pimstack.trace.synth import TRACE_PRESETS, synthesize_trace, tune_zipf_exponent

REQUESTS = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
TARGET = float(sys.argv[2]) if len(sys.argv) > 2 else 0.77

for name, preset in TRACE_PRESETS.items():
    spec = preset.with_(requests=REQUESTS)
    s = tune_zipf_exponent(spec, target=TARGET)
    curve = skew_curve(synthesize_trace(spec.with_(zipf_s=s)))
    points = "  ".join(f"{x:.0%}->{y:.2f}" for x, y in curve)
    print(f"{name:10s} zipf_s={s:.4f}  {points}")

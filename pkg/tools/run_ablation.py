"""Cumulative ablation on TokenStack.

Runs bare hardware plus one toggle at a time (layout, topology, quantization,
category eviction, replication) at a single saturating QPS and prints the
throughput of every step and its gain over the previous one.

Run from repo root: python tools/run_ablation.py [config.ini] [qps]
"""
from __future__ import annotations
import logging
import sys
from pathlib import Path

_SRC = Path(__file__).resolve().parents[1] / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from pimstack.harness.config import build_default_config, load_experiment
from pimstack.harness.sweep import run_ablation

logging.basicConfig(level=logging.WARNING, format="%(levelname)s [%(name)s] %(message)s")

cfg = load_experiment(sys.argv[1]) if len(sys.argv) > 1 else build_default_config()
qps = float(sys.argv[2]) if len(sys.argv) > 2 else max(cfg.qps)
res = run_ablation(cfg.with_(qps=(qps,)))

for label in res.labels:
    cell = res.cell(label, qps)
    tput = cell.get("token_throughput") if cell.get("feasible") else None
    gain = res.increments.get(label)
    print(f"{label:20s} {'-' if tput is None else f'{tput:10.1f} tok/s'}"
          f"  {'' if gain is None else f'{gain:+.1%}'}")

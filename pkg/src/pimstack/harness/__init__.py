"""Harness Package - Experiment configuration, sweeps and reports.

Core Components:
- config: ExperimentConfig, INI loader, PIMSTACK_* environment overrides
- sweep: run_sweep / run_ablation / run_topology_sweep -> SweepResult
- workers: CellTask, spawn-context worker pool
- report: emit_report / load_sweep (summary.json, CSV tables, per-cell metrics)
- stats: percentile, slo_capacity, knee_qps, gmean, pearson
"""

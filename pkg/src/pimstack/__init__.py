"""pimstack - Trace-driven serving simulator for heterogeneous HBM-PIM stacks.

This package contains:
- trace: Request traces (JSONL I/O, QPS rescaling, synthesis, reuse statistics)
- model: LLM geometry presets and KV/FC work accounting
- stack: Node topology, stack organizations, base-die residency/translation
- layout: Key/Value bank mappings, communication volumes, placement objective
- runtime: Serving policies (batching, homes, eviction, replication, K8V4)
- engine: Discrete-event core with roofline timing and energy accounting
- harness: Experiment config, QPS sweeps, SLO capacity, report emission

The entry point is ``python -m pimstack.main`` with the subcommands
``run``, ``sweep``, ``synth``, ``stats`` and ``report``.
"""

__version__ = "0.4.0"

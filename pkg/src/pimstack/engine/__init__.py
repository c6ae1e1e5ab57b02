"""Engine Package - Discrete-Event Serving Simulation.

Core Components:
- simulation: run() facade (one model/trace/topology/qps cell)
- loop: event loop (Arrival → StepComplete → TransferComplete → RefitCDF)
- state: Node / GroupState (admission, demotion, steps, periodic tick)
- events: Event, EventKind, EventQueue

Models:
- timing: TimingParams, transfer_time, decode_attention_time (roofline)
- energy: EnergyParams, account_energy (five components)

Results:
- metrics: RunMetrics, HitCounters
- serialization: metrics.json / events.jsonl
"""

"""pimstack Main Entry Point - command-line surface.

Subcommands:
- run:    one (mode, qps) cell -> metrics.json (+ events.jsonl)
- sweep:  mode x qps grid, cumulative ablation or topology sweep -> report directory
- synth:  synthesize a trace from a preset -> JSONL
- stats:  trace statistics (lengths, categories, reuse skew) -> JSON
- report: re-emit tables from a stored report directory

Environment variables:
- PIMSTACK_DEBUG: "1" enables debug logging
- PIMSTACK_SEED / PIMSTACK_OUT_DIR / PIMSTACK_WORKERS: experiment overrides

Exit codes:
- 0: success (also when infeasible cells were marked)
- 1: hard error (bad config, unreadable trace, unwritable directory)
- 130: Ctrl+C (KeyboardInterrupt)

Usage:
    python -m pimstack.main sweep --config config/experiment.ini
    python -m pimstack.main run --mode TokenStack --qps 4 --model GPT-175B
    python -m pimstack.main synth --preset traceB --requests 2000 --out traces/traceB.jsonl
    python -m pimstack.main stats traces/traceB.jsonl
    python -m pimstack.main report out/sweep
"""
# src/pimstack/main.py
from __future__ import annotations
from pathlib import Path
from typing import Optional, Sequence
import argparse
import logging
import sys

_THIS = Path(__file__).resolve()
_SRC_DIR = _THIS.parents[1]  # .../src
if str(_SRC_DIR) not in sys.path:
    sys.path.insert(0, str(_SRC_DIR))

from pimstack import __version__
from pimstack.engine.serialization import to_json, write_events, write_metrics
from pimstack.engine.simulation import run
from pimstack.harness.config import ExperimentConfig, build_default_config, debug_enabled, load_experiment
from pimstack.harness.report import emit_report, load_sweep
from pimstack.harness.sweep import build_trace, run_ablation, run_sweep, run_topology_sweep
from pimstack.model.config import get_model
from pimstack.trace.io import load_trace, write_trace
from pimstack.trace.stats import trace_stats
from pimstack.trace.synth import TRACE_PRESETS, synthesize_trace, tune_zipf_exponent

log = logging.getLogger("pimstack.main")

SWEEP_KINDS = ("modes", "ablation", "topology")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _experiment(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (or defaults) with CLI overrides applied on top."""
    cfg = load_experiment(args.config) if getattr(args, "config", None) else build_default_config()
    changes = {}
    for attr, key in (("model", "model"), ("trace", "trace_file"), ("out", "out_dir"),
                      ("seed", "seed"), ("workers", "workers"), ("requests", "trace_requests")):
        v = getattr(args, attr, None)
        if v is not None:
            changes[key] = v
    if getattr(args, "qps_list", None):
        changes["qps"] = tuple(args.qps_list)
    if getattr(args, "modes", None):
        changes["modes"] = tuple(args.modes)
    if getattr(args, "events", False):
        changes["record_events"] = True
    return cfg.with_(**changes) if changes else cfg


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def cmd_run(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    trace = build_trace(cfg)
    qps = args.qps if args.qps is not None else cfg.qps[0]
    m = run(
        get_model(cfg.model), trace, cfg.topology(args.mode),
        policy=cfg.policy, timing=cfg.timing, energy=cfg.energy, seed=cfg.seed, qps=qps,
        eviction=cfg.eviction, replication=cfg.replication, flags=cfg.flags,
        record_events=cfg.record_events,
    )
    out = Path(cfg.out_dir)
    path = write_metrics(m, out / "metrics.json")
    if cfg.record_events:
        write_events(m.events, out / "events.jsonl")
    if not m.feasible:
        log.warning("Infeasible: %s", m.verdict)
    else:
        log.info("%s @ %g QPS: %.1f tok/s, %d completed, %d rejected",
                 m.mode, qps, m.token_throughput, m.completed, m.rejected)
    log.info("Metrics written: %s", path)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _experiment(args)
    runner = {"modes": run_sweep, "ablation": run_ablation, "topology": run_topology_sweep}[args.kind]
    res = runner(cfg)
    emit_report(res, cfg.out_dir)
    for lab in res.labels:
        log.info("%-14s SLO capacity %-6s gmean %.3f", lab, res.slo[lab], res.gmean[lab])
    if res.infeasible:
        log.info("%d infeasible cell(s) marked", len(res.infeasible))
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.preset not in TRACE_PRESETS:
        raise ValueError(f"unknown trace preset {args.preset!r} (expected {', '.join(TRACE_PRESETS)})")
    spec = TRACE_PRESETS[args.preset].with_(seed=args.seed)
    if args.requests is not None:
        spec = spec.with_(requests=args.requests)
    if args.qps is not None:
        spec = spec.with_(qps=args.qps)
    if args.zipf_s is not None:
        spec = spec.with_(zipf_s=args.zipf_s)
    if args.tune_zipf:
        spec = spec.with_(zipf_s=tune_zipf_exponent(spec, target=args.skew_target))
    write_trace(synthesize_trace(spec), args.out)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    text = to_json(trace_stats(load_trace(args.trace)).to_dict(), indent=1)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        log.info("Trace stats written: %s", args.out)
    else:
        sys.stdout.write(text + "\n")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    res = load_sweep(args.dir)
    emit_report(res, args.out or args.dir)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="INI experiment file")
    p.add_argument("--model", type=str, default=None, help="Model preset (e.g. GPT-175B)")
    p.add_argument("--trace", type=str, default=None, help="JSONL trace (default: synthesize the config preset)")
    p.add_argument("--requests", type=int, default=None, help="Requests to synthesize")
    p.add_argument("--out", type=str, default=None, help="Output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--events", action="store_true", help="Write events.jsonl per run")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pimstack", description="Heterogeneous HBM-PIM serving simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Simulate one (mode, qps) cell")
    _add_experiment_args(p)
    p.add_argument("--mode", type=str, default="TokenStack", help="Mode or capN-compM variant")
    p.add_argument("--qps", type=float, default=None, help="Arrival rate (default: first config qps)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="Sweep modes x qps and emit a report")
    _add_experiment_args(p)
    p.add_argument("--kind", choices=SWEEP_KINDS, default="modes")
    p.add_argument("--modes", nargs="+", default=None)
    p.add_argument("--qps", dest="qps_list", type=float, nargs="+", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="Synthesize a trace")
    p.add_argument("--preset", type=str, default="traceB", choices=sorted(TRACE_PRESETS))
    p.add_argument("--requests", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qps", type=float, default=None, help="Poisson rate of conversation roots")
    p.add_argument("--zipf-s", dest="zipf_s", type=float, default=None)
    p.add_argument("--tune-zipf", dest="tune_zipf", action="store_true")
    p.add_argument("--skew-target", dest="skew_target", type=float, default=0.77)
    p.add_argument("--out", type=str, required=True, help="Output JSONL path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="Trace statistics as JSON")
    p.add_argument("trace", type=str)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="Re-emit tables from a stored report directory")
    p.add_argument("dir", type=str)
    p.add_argument("--out", type=str, default=None, help="Target directory (default: in place)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for pimstack."""
    debug = debug_enabled()
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
    )
    args = build_arg_parser().parse_args(list(argv) if argv is not None else None)
    log.debug("pimstack %s: %s", __version__, args.command)
    try:
        return int(args.func(args))
    except KeyboardInterrupt:
        logging.info("Aborted (Ctrl+C).")
        return 130
    except (ValueError, OSError) as e:
        # includes TraceFormatError and FileNotFoundError
        log.error("%s: %s", type(e).__name__, e)
        return 1
    except Exception as e:
        log.exception("Unexpected error: %r", e)
        return 1


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logging.info("Aborted (Ctrl+C).")
        sys.exit(130)

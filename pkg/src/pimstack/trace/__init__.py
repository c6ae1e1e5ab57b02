"""Trace Package - Requests, JSONL I/O, synthesis and reuse statistics.

Core Components:
- request: Request, Trace, Category, rescale_qps (arrival-time scaling)
- io: load_trace / write_trace (JSONL, one request per line)
- synth: TraceSpec, TRACE_PRESETS, synthesize_trace, tune_zipf_exponent
- stats: trace_stats, reuse_skew (hit-count oracle)
"""

from .request import BLOCK_TOKENS, Category, Request, Trace, rescale_qps
from .io import TraceFormatError, load_trace, write_trace
from .synth import LengthDist, TraceSpec, TRACE_PRESETS, synthesize_trace, tune_zipf_exponent
from .stats import TraceStats, trace_stats, reuse_skew, skew_curve

__all__ = [
    "BLOCK_TOKENS", "Category", "Request", "Trace", "rescale_qps",
    "TraceFormatError", "load_trace", "write_trace",
    "LengthDist", "TraceSpec", "TRACE_PRESETS", "synthesize_trace", "tune_zipf_exponent",
    "TraceStats", "trace_stats", "reuse_skew", "skew_curve",
]

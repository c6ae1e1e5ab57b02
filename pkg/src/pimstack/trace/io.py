"""JSONL trace I/O.

One request per line:
    {"id":int,"arrival_s":float,"category":"api|text|code|thinking",
     "prompt_len":int,"gen_len":int,"turn":int,"block_ids":[uint64,...]}

An optional "parent_id" links a turn to the previous turn of its conversation.
Blank lines are skipped. Out-of-order arrivals are sorted and counted in
Trace.reordered instead of being rejected.
"""

from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, List
import json
import logging

from .request import Category, Request, Trace

log = logging.getLogger("pimstack.trace.io")

_REQUIRED = ("id", "arrival_s", "category", "prompt_len", "gen_len", "block_ids")
_U64_MAX = (1 << 64) - 1


class TraceFormatError(ValueError):
    """Malformed trace file; ``line`` is the 1-based line number (0 = whole file)."""

    def __init__(self, message: str, line: int = 0) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _parse_record(rec: Dict[str, Any], lineno: int) -> Request:
    if not isinstance(rec, dict):
        raise TraceFormatError("record is not a JSON object", lineno)
    missing = [k for k in _REQUIRED if k not in rec]
    if missing:
        raise TraceFormatError(f"missing field(s) {', '.join(missing)}", lineno)
    block_ids = rec["block_ids"]
    if not isinstance(block_ids, list) or not all(
        isinstance(b, int) and not isinstance(b, bool) and 0 <= b <= _U64_MAX for b in block_ids
    ):
        raise TraceFormatError("block_ids must be a list of uint64", lineno)
    try:
        return Request(
            id=int(rec["id"]),
            arrival=float(rec["arrival_s"]),
            category=Category.parse(rec["category"]),
            prompt_len=int(rec["prompt_len"]),
            gen_len=int(rec["gen_len"]),
            turn=int(rec.get("turn", 1)),
            block_ids=tuple(block_ids),
            parent=int(rec.get("parent_id", -1)),
        )
    except (TypeError, ValueError) as e:
        raise TraceFormatError(str(e), lineno) from None


def load_trace(path: str | Path) -> Trace:
    """Read a JSONL trace.

    Args:
        path: Trace file

    Returns:
        Trace sorted by arrival with raw_qps derived from count and span.

    Raises:
        FileNotFoundError: If the file does not exist
        TraceFormatError: On the first malformed line, or if the file has no records
    """
    p = Path(path)
    reqs: List[Request] = []
    seen: set[int] = set()
    with p.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceFormatError(f"invalid JSON ({e.msg})", lineno) from None
            req = _parse_record(rec, lineno)
            if req.id in seen:
                raise TraceFormatError(f"duplicate request id {req.id}", lineno)
            seen.add(req.id)
            reqs.append(req)
    if not reqs:
        raise TraceFormatError(f"trace file {p} is empty")
    trace = Trace.from_requests(reqs)
    if trace.reordered:
        log.warning("Trace %s: %d out-of-order arrivals sorted", p, trace.reordered)
    log.info("Trace loaded: %s (%d requests, raw_qps=%.3f)", p, len(trace), trace.raw_qps)
    return trace


def request_to_record(r: Request) -> Dict[str, Any]:
    rec: Dict[str, Any] = {
        "id": r.id,
        "arrival_s": r.arrival,
        "category": r.category.value,
        "prompt_len": r.prompt_len,
        "gen_len": r.gen_len,
        "turn": r.turn,
        "block_ids": list(r.block_ids),
    }
    if r.parent >= 0:
        rec["parent_id"] = r.parent
    return rec


def write_trace(trace: Trace, path: str | Path) -> Path:
    """Write a trace as JSONL (inverse of load_trace). Returns the path."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="\n") as fh:
        for r in trace.requests:
            fh.write(json.dumps(request_to_record(r), separators=(",", ":")))
            fh.write("\n")
    log.info("Trace written: %s (%d requests)", p, len(trace))
    return p


__all__ = ["TraceFormatError", "load_trace", "write_trace", "request_to_record"]

"""Experiment configuration.

Responsibilities:
- ExperimentConfig: everything one sweep needs (model, trace, modes, QPS grid,
  parameter groups, output directory, seed, workers)
- load_experiment(): INI file -> ExperimentConfig (unknown keys are errors)
- build_default_config() / apply_env(): PIMSTACK_* environment overrides
- seed_all(): seed Python and NumPy global RNGs

Public API:
- class StackOverrides
- class ExperimentConfig:
      topology(name) -> NodeTopology      # preset/variant with [stack] overrides
- load_experiment(path, env=None) -> ExperimentConfig
- build_default_config(env=None) -> ExperimentConfig
- apply_env(cfg, env=None) -> ExperimentConfig
- seed_all(seed)

Usage:
    cfg = load_experiment("config/experiment.ini")
    cfg = apply_env(cfg)          # PIMSTACK_SEED, PIMSTACK_OUT_DIR, PIMSTACK_WORKERS

Notes:
- Config files use human units (GB/s, TFLOP/s, µs, pJ); they are converted
  with pimstack.model.units on load.
- Per-category policy keys are spelled <knob>_<category>, e.g. window_api_s.
"""

from __future__ import annotations
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple
import configparser
import logging
import os
import random

import numpy as np

from ..engine.energy import EnergyParams
from ..engine.timing import TimingParams
from ..model.units import TFLOPS, gbps, us
from ..runtime.config import AblationFlags, EvictionConfig, PolicyConfig, ReplicationConfig
from ..stack.config import Mode, NodeTopology
from ..stack.modes import build_topology
from ..trace.request import Category

log = logging.getLogger("pimstack.harness.config")

DEFAULT_MODES: Tuple[str, ...] = tuple(m.value for m in Mode)
DEFAULT_QPS: Tuple[float, ...] = (0.5, 1.0, 2.0, 4.0, 8.0)
DEFAULT_TOPOLOGIES: Tuple[str, ...] = tuple(f"cap{c}-comp{8 - c}" for c in range(1, 8))


@dataclass(slots=True)
class StackOverrides:
    """Optional link/bank overrides applied to every topology (SI units)."""
    tsv_bw: Optional[float] = None
    ucie_bw: Optional[float] = None
    nvlink_bw: Optional[float] = None
    quant_engine_bw: Optional[float] = None
    xbar_bw: Optional[float] = None
    pim_banks: Optional[int] = None
    capacity_banks: Optional[int] = None

    def apply(self, topo: NodeTopology) -> NodeTopology:
        stack_changes: Dict[str, Any] = {}
        for key, attr in (("tsv_bw", "tsv_bw"), ("ucie_bw", "ucie_bw"), ("quant_engine_bw", "quant_engine_bw"),
                          ("pim_banks", "B"), ("capacity_banks", "B_cap")):
            v = getattr(self, key)
            if v is not None:
                stack_changes[attr] = v
        changes: Dict[str, Any] = {}
        if stack_changes:
            changes["stack"] = replace(topo.stack, **stack_changes)
        if self.nvlink_bw is not None:
            changes["nvlink_bw"] = self.nvlink_bw
        if self.xbar_bw is not None:
            changes["xbar_bw"] = self.xbar_bw
        return topo.with_(**changes) if changes else topo


@dataclass(slots=True)
class ExperimentConfig:
    """One experiment.

    Attributes:
        name: Label used in reports
        model: Model preset name
        modes: Topologies to sweep (mode names or capN-compM)
        qps: Arrival rates to sweep (identical grid for every mode)
        trace_file: JSONL trace; None synthesizes from trace_preset
        trace_preset / trace_requests / trace_seed / zipf_s: Synthesis parameters
        tune_zipf / skew_target: Tune zipf_s so the top 10% of reused blocks carry skew_target
        topologies: Variants of the topology sweep
        out_dir: Output directory
        seed: Run seed (also the synthesis seed when trace_seed is None)
        workers: Worker processes for sweep cells (1 = in-process)
        record_events: Write events.jsonl per cell
    """
    name: str = "experiment"
    model: str = "GPT-175B"
    modes: Tuple[str, ...] = DEFAULT_MODES
    qps: Tuple[float, ...] = DEFAULT_QPS
    trace_file: Optional[str] = None
    trace_preset: str = "traceB"
    trace_requests: Optional[int] = 2000
    trace_seed: Optional[int] = None
    zipf_s: Optional[float] = None
    tune_zipf: bool = False
    skew_target: float = 0.77
    think_time_s: Optional[float] = None
    topologies: Tuple[str, ...] = DEFAULT_TOPOLOGIES
    out_dir: str = "out"
    seed: int = 0
    workers: int = 1
    record_events: bool = False
    stack: StackOverrides = field(default_factory=StackOverrides)
    timing: TimingParams = field(default_factory=TimingParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    eviction: EvictionConfig = field(default_factory=EvictionConfig)
    replication: ReplicationConfig = field(default_factory=ReplicationConfig)
    flags: AblationFlags = field(default_factory=AblationFlags)

    def __post_init__(self) -> None:
        if not self.qps:
            raise ValueError("qps list must not be empty")
        if any(not q > 0 for q in self.qps):
            raise ValueError(f"all qps must be > 0, got {list(self.qps)}")
        if not self.modes:
            raise ValueError("modes list must not be empty")
        for m in self.modes:
            build_topology(m)
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.trace_requests is not None and self.trace_requests < 1:
            raise ValueError(f"trace_requests must be >= 1, got {self.trace_requests}")

    def topology(self, name: str) -> NodeTopology:
        return self.stack.apply(build_topology(name))

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


# ----------------------------------------------------------------------
# INI parsing
# ----------------------------------------------------------------------
def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(s: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _floats(s: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in _list(s))


def _opt_int(s: str) -> Optional[int]:
    return None if s.strip().lower() in ("", "none") else int(s)


def _opt_float(s: str) -> Optional[float]:
    return None if s.strip().lower() in ("", "none") else float(s)


Parser = Callable[[str], Any]

# section -> key -> (field, parser)
_EXPERIMENT_KEYS: Dict[str, Tuple[str, Parser]] = {
    "name": ("name", str),
    "model": ("model", str),
    "modes": ("modes", _list),
    "qps": ("qps", _floats),
    "topologies": ("topologies", _list),
    "out_dir": ("out_dir", str),
    "seed": ("seed", int),
    "workers": ("workers", int),
    "record_events": ("record_events", _bool),
}
_TRACE_KEYS: Dict[str, Tuple[str, Parser]] = {
    "file": ("trace_file", lambda s: s.strip() or None),
    "preset": ("trace_preset", str),
    "requests": ("trace_requests", _opt_int),
    "seed": ("trace_seed", _opt_int),
    "zipf_s": ("zipf_s", _opt_float),
    "tune_zipf": ("tune_zipf", _bool),
    "skew_target": ("skew_target", float),
    "think_time_s": ("think_time_s", _opt_float),
}
_STACK_KEYS: Dict[str, Tuple[str, Parser]] = {
    "tsv_bw_gbps": ("tsv_bw", gbps),
    "ucie_bw_gbps": ("ucie_bw", gbps),
    "nvlink_bw_gbps": ("nvlink_bw", gbps),
    "quant_engine_bw_gbps": ("quant_engine_bw", gbps),
    "xbar_bw_gbps": ("xbar_bw", gbps),
    "pim_banks": ("pim_banks", int),
    "capacity_banks": ("capacity_banks", int),
}
_TIMING_KEYS: Dict[str, Tuple[str, Parser]] = {
    "gpu_tflops": ("gpu_flops", lambda s: float(s) * TFLOPS),
    "pim_bw_gbps": ("pim_bw", gbps),
    "pim_tflops": ("pim_flops", lambda s: float(s) * TFLOPS),
    "basedie_agg_bw_gbps": ("basedie_agg_bw", gbps),
    "t_fixed_step_us": ("t_fixed_step", us),
    "t_mode_switch_us": ("t_mode_switch", us),
    "promotion_fixed_latency_us": ("promotion_fixed_latency", us),
}
_ENERGY_KEYS: Dict[str, Tuple[str, Parser]] = {
    f"{k}_pj": (k, float)
    for k in ("fc_offchip", "attn_offchip", "nvlink", "fc_onchip", "attn_onchip",
              "attn_onchip_pim", "communication", "quant")
}
_POLICY_KEYS: Dict[str, Tuple[str, Parser]] = {
    k: (k, int) for k in ("chunk_tokens", "token_budget", "max_running", "retention_budget")
}
_POLICY_KEYS.update({
    k: (k, float) for k in ("retention_threshold", "refit_period_s", "fit_window_s", "lambda_max",
                            "lifespan_quantile", "metadata_gc_s", "affinity_slack")
})
_EVICTION_KEYS: Dict[str, Tuple[str, Parser]] = {"theta_hi": ("theta_hi", float), "theta_lo": ("theta_lo", float)}
_PER_CATEGORY = {"window": "admission_window_s", "lifespan": "lifespan_s", "next_turn": "next_turn"}
_REPLICATION_KEYS: Dict[str, Tuple[str, Parser]] = {
    "tau_off": ("tau_off", int),
    "tau_cards": ("tau_cards", int),
    "tau_hits": ("tau_hits", int),
    "revoke_threshold": ("revoke_threshold", float),
    "reserve_fraction": ("reserve_fraction", float),
}
_ABLATION_KEYS: Dict[str, Tuple[str, Parser]] = {
    k: (k, _bool) for k in ("layout", "topology", "quantization", "category_eviction", "replication")
}
_SECTIONS = ("experiment", "trace", "model", "stack", "timing", "energy", "policy", "replication", "ablation")


def _collect(section: configparser.SectionProxy, schema: Mapping[str, Tuple[str, Parser]],
             skip: Tuple[str, ...] = ()) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in schema:
            raise ValueError(f"[{section.name}] unknown key {key!r}")
        name, parse = schema[key]
        try:
            out[name] = parse(raw)
        except ValueError as e:
            raise ValueError(f"[{section.name}] {key}: {e}") from None
    return out


def _per_category(section: configparser.SectionProxy, base: PolicyConfig) -> Tuple[Dict[str, Any], Tuple[str, ...]]:
    changes: Dict[str, Any] = {}
    used = []
    for key, raw in section.items():
        for prefix, attr in _PER_CATEGORY.items():
            if not key.startswith(prefix + "_"):
                continue
            cat_name = key[len(prefix) + 1:]
            if cat_name.endswith("_s"):
                cat_name = cat_name[:-2]
            try:
                cat = Category.parse(cat_name)
            except ValueError:
                continue
            table = changes.setdefault(attr, dict(getattr(base, attr)))
            table[cat] = float(raw)
            used.append(key)
            break
    return changes, tuple(used)


def load_experiment(path: str | Path, env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read an INI experiment file and apply PIMSTACK_* environment overrides.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: On unknown sections or keys, or invalid values
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"experiment config not found: {p}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.read(p, encoding="utf-8")

    unknown = [s for s in cp.sections() if s not in _SECTIONS]
    if unknown:
        raise ValueError(f"{p}: unknown section(s) {', '.join(unknown)}")

    def sec(name: str) -> configparser.SectionProxy:
        if not cp.has_section(name):
            cp.add_section(name)
        return cp[name]

    top = _collect(sec("experiment"), _EXPERIMENT_KEYS)
    top.update(_collect(sec("trace"), _TRACE_KEYS))
    model_sec = _collect(sec("model"), {"name": ("model", str)})
    top.update(model_sec)

    base_policy = PolicyConfig()
    cat_changes, cat_keys = _per_category(sec("policy"), base_policy)
    policy_changes = _collect(sec("policy"), _POLICY_KEYS, skip=cat_keys + tuple(_EVICTION_KEYS))
    policy = replace(base_policy, **policy_changes, **cat_changes)
    eviction_keys = {k: v for k, v in sec("policy").items() if k in _EVICTION_KEYS}
    eviction = EvictionConfig(**{_EVICTION_KEYS[k][0]: float(v) for k, v in eviction_keys.items()})

    cfg = ExperimentConfig(
        **top,
        stack=StackOverrides(**_collect(sec("stack"), _STACK_KEYS)),
        timing=TimingParams(**_collect(sec("timing"), _TIMING_KEYS)),
        energy=EnergyParams(**_collect(sec("energy"), _ENERGY_KEYS)),
        policy=policy,
        eviction=eviction,
        replication=ReplicationConfig(**_collect(sec("replication"), _REPLICATION_KEYS)),
        flags=AblationFlags(**_collect(sec("ablation"), _ABLATION_KEYS)),
    )
    log.info("Experiment config loaded: %s (%s, %d modes x %d qps)", p, cfg.model, len(cfg.modes), len(cfg.qps))
    return apply_env(cfg, env)


# ----------------------------------------------------------------------
# Environment
# ----------------------------------------------------------------------
def apply_env(cfg: ExperimentConfig, env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Override seed, out_dir and workers from PIMSTACK_SEED / PIMSTACK_OUT_DIR / PIMSTACK_WORKERS."""
    e = os.environ if env is None else env
    changes: Dict[str, Any] = {}
    if e.get("PIMSTACK_SEED"):
        changes["seed"] = int(e["PIMSTACK_SEED"])
    if e.get("PIMSTACK_OUT_DIR"):
        changes["out_dir"] = e["PIMSTACK_OUT_DIR"]
    if e.get("PIMSTACK_WORKERS"):
        changes["workers"] = int(e["PIMSTACK_WORKERS"])
    return cfg.with_(**changes) if changes else cfg


def build_default_config(env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Default experiment with environment overrides applied.

    Reads:
    - PIMSTACK_SEED: Run seed (default 0)
    - PIMSTACK_OUT_DIR: Output directory (default "out")
    - PIMSTACK_WORKERS: Worker processes (default 1)
    """
    return apply_env(ExperimentConfig(), env)


def debug_enabled(env: Optional[Mapping[str, str]] = None) -> bool:
    e = os.environ if env is None else env
    return e.get("PIMSTACK_DEBUG") == "1"


def seed_all(seed: int) -> None:
    """Seed Python's random and NumPy's global RNG with the same seed."""
    random.seed(seed)
    np.random.seed(seed)


__all__ = [
    "StackOverrides", "ExperimentConfig", "load_experiment", "apply_env",
    "build_default_config", "debug_enabled", "seed_all",
    "DEFAULT_MODES", "DEFAULT_QPS", "DEFAULT_TOPOLOGIES",
]

"""Runtime Package - Serving-time policies.

Core Components:
- config: EvictionConfig, ReplicationConfig, PolicyConfig, AblationFlags
- metadata: BlockMeta (compact per-block record)
- reuse: CategoryModel, reuse_prob, fit_category_cdf
- eviction: demotion_score, CandidateQueues, run_demotion (category or LRU)
- quant: quantized_size (K8V4), DemotionLedger
- replication: replication_gate, replica_revoke_check, ReplicaBook
- transfers: classify_transfer, Transfer, Booking, LinkScheduler
- homes: assign_home
- scheduler: schedule_step (continuous batching, chunked prefill)
- retention: prefix_retention, RetentionBook
- state: ActiveRequest, StepPlan
"""

from .config import ABLATION_ORDER, AblationFlags, EvictionConfig, PolicyConfig, ReplicationConfig
from .metadata import META_DTYPE, BlockMeta, pack_table
from .reuse import CategoryModel, ReuseHistory, fit_category_cdf, prior_model, reuse_prob
from .transfers import Booking, LinkScheduler, Transfer, TransferClass, TransferKind, classify_transfer
from .eviction import CandidateQueues, demotion_score, run_demotion, select_victim
from .quant import K8V4_RATIO, DemotionLedger, quantized_size
from .replication import ReplicaBook, ReplicaStats, replica_revoke_check, replication_gate
from .homes import assign_home
from .state import ActiveRequest, StepPlan
from .scheduler import schedule_step
from .retention import RetentionBook, prefix_retention

__all__ = [
    "ABLATION_ORDER", "AblationFlags", "EvictionConfig", "PolicyConfig", "ReplicationConfig",
    "META_DTYPE", "BlockMeta", "pack_table",
    "CategoryModel", "ReuseHistory", "fit_category_cdf", "prior_model", "reuse_prob",
    "Booking", "LinkScheduler", "Transfer", "TransferClass", "TransferKind", "classify_transfer",
    "CandidateQueues", "demotion_score", "run_demotion", "select_victim",
    "K8V4_RATIO", "DemotionLedger", "quantized_size",
    "ReplicaBook", "ReplicaStats", "replica_revoke_check", "replication_gate",
    "assign_home", "ActiveRequest", "StepPlan", "schedule_step",
    "RetentionBook", "prefix_retention",
]

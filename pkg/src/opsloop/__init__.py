"""Deterministic multi-agent incident remediation over a simulated infrastructure.

An observer/probe/executor loop with dynamic probe-vs-execute scheduling,
sliding-window context compression, a three-layer TTL memory, command-safety
validation with checkpointed rollback, and a fault-injection simulator that
makes the whole pipeline measurable offline.
"""

from .compressor import Compressor, ExtractiveSummarizer, ccr, ips, make_windows
from .engine import EngineConfig, ScenarioRun, run_scenario
from .memory import CompressedContextEntry, MemoryStore, RawContextEntry
from .metrics import MetricsReport, RunTrace, aggregate, evaluate_run
from .model import (
    ComponentState,
    CostOutcome,
    CostWeights,
    SystemState,
    Task,
    TaskKind,
    cost,
    state_distance,
)
from .observer import FaultBelief, Observer, update_belief
from .probe import ProbeAgent, ProbeResult, generate_probe_script
from .executor import ActionPlan, Checkpoint, ExecResult, ExecutorAgent, generate_plan
from .safety import (
    Classification,
    Command,
    Policy,
    SafetyPolicy,
    SafetyVerdict,
    classify_command,
    tokenize_script,
    validate_script,
)
from .simenv import (
    Category,
    CommandCatalog,
    DEFAULT_CATALOG,
    Environment,
    ScenarioSpec,
    load_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "ActionPlan",
    "Category",
    "Checkpoint",
    "Classification",
    "Command",
    "CommandCatalog",
    "ComponentState",
    "CompressedContextEntry",
    "Compressor",
    "CostOutcome",
    "CostWeights",
    "DEFAULT_CATALOG",
    "EngineConfig",
    "Environment",
    "ExecResult",
    "ExecutorAgent",
    "ExtractiveSummarizer",
    "FaultBelief",
    "MemoryStore",
    "MetricsReport",
    "Observer",
    "Policy",
    "ProbeAgent",
    "ProbeResult",
    "RawContextEntry",
    "RunTrace",
    "SafetyPolicy",
    "SafetyVerdict",
    "ScenarioRun",
    "ScenarioSpec",
    "SystemState",
    "Task",
    "TaskKind",
    "aggregate",
    "ccr",
    "classify_command",
    "cost",
    "evaluate_run",
    "generate_plan",
    "generate_probe_script",
    "ips",
    "load_scenario",
    "make_windows",
    "run_scenario",
    "state_distance",
    "tokenize_script",
    "update_belief",
    "validate_script",
]

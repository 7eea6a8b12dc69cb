"""Checkpointed plan execution with critical-failure rollback.

A full-system checkpoint is captured before the first action of every plan.
Each action's observed effect is validated against the catalog-declared
expected gauge values; a critical outcome (the simulator's critical flag, or
any gauge diverging from its expected value beyond the tolerance) restores
the checkpoint exactly and ends the plan. Non-critical failures are recorded
and execution continues.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import PlanningError, RollbackFailedError, TransportError
from .memory import ContextSource, MemoryStore, RawContextEntry
from .model import SystemState, Task, TaskKind, gauge_index
from .probe import ProbeAgent
from .safety import (
    Command,
    DEFAULT_POLICY,
    Policy,
    SafetyPolicy,
    make_command,
    validate_script,
)
from .simenv import CommandCatalog, Environment

logger = logging.getLogger(__name__)

DEFAULT_CRITICAL_TOLERANCE = 0.3
DEFAULT_STALENESS_SECONDS = 60.0


class ExecOutcome(str, Enum):
    COMPLETED = "Completed"
    ROLLED_BACK = "RolledBack"
    PARTIAL_FAILURE = "PartialFailure"


@dataclass(frozen=True)
class Checkpoint:
    checkpoint_id: str
    captured_at: float
    state_snapshot: SystemState


@dataclass(frozen=True)
class PlannedAction:
    command: Command
    requires_state_refresh: bool
    # Intended post-command gauge values on the touched component.
    expected_effect: tuple[str, dict[str, float]]


@dataclass(frozen=True)
class ActionPlan:
    task_id: str
    actions: tuple[PlannedAction, ...]
    proposed_harmful: tuple[Command, ...] = ()
    blocked_harmful: tuple[Command, ...] = ()


@dataclass(frozen=True)
class ActionOutcomeRecord:
    command_text: str
    success: bool
    critical: bool
    observed_effect: dict[str, float]


@dataclass(frozen=True)
class ExecResult:
    task_id: str
    executed: int
    outcome: ExecOutcome
    rollback_checkpoint: str | None
    action_outcomes: tuple[ActionOutcomeRecord, ...]

    def __post_init__(self):
        if self.outcome is ExecOutcome.ROLLED_BACK and not self.rollback_checkpoint:
            raise ValueError("rolled-back result must reference its checkpoint")


def generate_plan(
    task: Task,
    catalog: CommandCatalog,
    compressed_context=None,
    dependencies: tuple[tuple[str, str], ...] = (),
    belief_updated_at: dict[str, float] | None = None,
    now: float = 0.0,
    staleness_seconds: float = DEFAULT_STALENESS_SECONDS,
    policy: SafetyPolicy = DEFAULT_POLICY,
    propose_shortcuts: bool = True,
) -> ActionPlan:
    """Deterministic remediation plan for an execute task.

    Remediation sequences are looked up per (component, fault) and ordered so
    that components others depend on are fixed first. Actions on a component
    whose fault hypothesis changed within the staleness bound request a state
    refresh before running. Catalog shortcut commands are considered and
    dropped by validation; they are reported for safety accounting, never
    executed.
    """
    if task.kind is not TaskKind.EXECUTE:
        raise PlanningError(f"task {task.task_id!r} is not an execute task")
    if not task.target_components:
        raise PlanningError(f"task {task.task_id!r} has no target components")
    updated_at = belief_updated_at or {}

    comp_order = _dependency_order(sorted(task.target_components), dependencies)
    actions: list[PlannedAction] = []
    proposed: list[Command] = []
    blocked: list[Command] = []
    for comp in comp_order:
        fresh_update = now - updated_at.get(comp, float("-inf")) < staleness_seconds
        for fault in sorted(task.suspected_faults):
            spec = catalog.kind(fault)  # raises on unknown kinds
            shortcut = spec.shortcut_text(comp)
            if propose_shortcuts and shortcut is not None:
                cmd = make_command(shortcut)
                proposed.append(cmd)
                verdict = validate_script([cmd], Policy.EXECUTOR, policy)
                if not verdict.safe:
                    blocked.append(cmd)
                    logger.debug("blocked harmful shortcut %s", cmd.raw_text)
            for step_idx, cmd in enumerate(catalog.remediation_commands(comp, fault)):
                actions.append(
                    PlannedAction(
                        command=cmd,
                        requires_state_refresh=fresh_update,
                        expected_effect=(
                            comp,
                            catalog.expected_effect(comp, fault, step_idx),
                        ),
                    )
                )

    verdict = validate_script([a.command for a in actions], Policy.EXECUTOR, policy)
    if not verdict.safe:
        raise PlanningError(
            f"plan for {task.task_id!r} failed validation: {verdict.violations}"
        )
    return ActionPlan(
        task_id=task.task_id,
        actions=tuple(actions),
        proposed_harmful=tuple(proposed),
        blocked_harmful=tuple(blocked),
    )


def _dependency_order(
    components: list[str], dependencies: tuple[tuple[str, str], ...]
) -> list[str]:
    from .model import topological_order

    depends_on = {
        c: frozenset(a for a, b in dependencies if b == c and a in components)
        for c in components
    }
    return topological_order(components, depends_on)


class ExecutorAgent:
    """Runs validated plans against the environment, checkpoint-first."""

    def __init__(
        self,
        env: Environment,
        memory: MemoryStore,
        probe_agent: ProbeAgent | None = None,
        policy: SafetyPolicy = DEFAULT_POLICY,
        critical_tolerance: float = DEFAULT_CRITICAL_TOLERANCE,
        staleness_seconds: float = DEFAULT_STALENESS_SECONDS,
    ):
        self.env = env
        self.memory = memory
        self.probe_agent = probe_agent
        self.policy = policy
        self.critical_tolerance = critical_tolerance
        self.staleness_seconds = staleness_seconds
        # Optional hook: called with (command, step outcome, state before,
        # state after) for every executed action; used for trace building.
        self.action_listener = None
        self._checkpoint_seq = 0
        self._entry_seq = 0

    def create_checkpoint(self) -> Checkpoint:
        if self.env is None:
            raise TransportError("no environment attached")
        self._checkpoint_seq += 1
        return Checkpoint(
            checkpoint_id=f"ckpt-{self._checkpoint_seq:04d}",
            captured_at=self.env.now,
            state_snapshot=self.env.snapshot(),
        )

    def _store_result(self, task_id: str, text: str) -> None:
        self._entry_seq += 1
        self.memory.put_raw(
            RawContextEntry(
                entry_id=f"exec-{self._entry_seq:05d}",
                created_at=self.env.now,
                source=ContextSource.EXECUTOR,
                text=text,
                ttl=self.memory.raw_ttl,
            )
        )

    def _diverged(
        self, expected: tuple[str, dict[str, float]], post_state: SystemState
    ) -> bool:
        comp_id, targets = expected
        comp = post_state.component(comp_id)
        for gauge, value in targets.items():
            if abs(comp.state_vector[gauge_index(gauge)] - value) > self.critical_tolerance:
                return True
        return False

    def execute_plan(self, plan: ActionPlan) -> ExecResult:
        """Run a plan: checkpoint, act, validate, roll back on critical failure."""
        verdict = validate_script(
            [a.command for a in plan.actions], Policy.EXECUTOR, self.policy
        )
        if not verdict.safe:
            raise PlanningError(
                f"plan {plan.task_id!r} failed pre-execution validation: "
                f"{verdict.violations}"
            )
        checkpoint = self.create_checkpoint()
        outcomes: list[ActionOutcomeRecord] = []
        executed = 0
        rolled_back = False
        partial = False
        for action in plan.actions:
            if action.requires_state_refresh and self.probe_agent is not None:
                comp_id = action.expected_effect[0]
                self.probe_agent.query_status(plan.task_id, comp_id)
            before = self.env.snapshot()
            step = self.env.step(action.command)
            executed += 1
            post = self.env.snapshot()
            if self.action_listener is not None:
                self.action_listener(action.command, step, before, post)
            comp_id = action.expected_effect[0]
            observed = {
                g: post.component(comp_id).state_vector[gauge_index(g)]
                for g in action.expected_effect[1]
            }
            critical = step.critical or (
                not step.error and self._diverged(action.expected_effect, post)
            )
            outcomes.append(
                ActionOutcomeRecord(
                    command_text=action.command.raw_text,
                    success=not step.error and not critical,
                    critical=critical,
                    observed_effect=observed,
                )
            )
            self._store_result(
                plan.task_id,
                f"executed {action.command.raw_text}: {step.text}",
            )
            if critical:
                try:
                    self.env.restore(checkpoint.state_snapshot)
                except Exception as exc:
                    raise RollbackFailedError(
                        f"rollback to {checkpoint.checkpoint_id} failed: {exc}"
                    ) from exc
                self._store_result(
                    plan.task_id,
                    f"critical failure on {action.command.raw_text}; "
                    f"rolled back to {checkpoint.checkpoint_id}",
                )
                rolled_back = True
                break
            if step.error:
                partial = True
        if rolled_back:
            outcome = ExecOutcome.ROLLED_BACK
        elif partial:
            outcome = ExecOutcome.PARTIAL_FAILURE
        else:
            outcome = ExecOutcome.COMPLETED
        return ExecResult(
            task_id=plan.task_id,
            executed=executed,
            outcome=outcome,
            rollback_checkpoint=checkpoint.checkpoint_id if rolled_back else None,
            action_outcomes=tuple(outcomes),
        )

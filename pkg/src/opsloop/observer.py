"""Central coordinator: complexity estimation, decomposition, belief, scheduling.

The observer keeps a posterior over (component, fault-kind) hypotheses plus an
explicit no-fault hypothesis. Probe observations carry likelihood rows declared
by the simulator; Bayes updates renormalize and recompute entropy, and the
entropy drop is credited to the probe as information gain.

Scheduling weighs the best pending probe against the best pending execute:

    probe reward   = lambda * min(1, entropy * diagnosticity)
    execute reward = (1 - lambda) * clip(predicted distance reduction / distance)

and picks the argmax (ties go to execute, which terminates incidents).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from .errors import ContractViolationError, DegenerateEvidenceError
from .memory import CompressedContextEntry, MemoryStore
from .model import (
    ComponentState,
    SystemState,
    Task,
    TaskKind,
    TaskStatus,
    check_acyclic,
    gauge_index,
    state_distance,
    topological_order,
)
from .simenv import NO_FAULT, CommandCatalog

if TYPE_CHECKING:
    from .probe import ProbeResult

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 0.35
DEFAULT_THETA_COMPLEX = 4.0
CONFIRM_POSTERIOR = 0.5

Hypothesis = tuple[str, str]  # (component_id, fault_kind); NO_FAULT sentinel


def shannon_entropy(probabilities) -> float:
    entropy = 0.0
    for p in probabilities:
        if p > 0:
            entropy -= p * math.log2(p)
    return entropy


@dataclass(frozen=True)
class FaultBelief:
    """Normalized posterior over fault hypotheses, with cached entropy."""

    hypotheses: dict[Hypothesis, float]
    entropy: float

    @classmethod
    def from_probabilities(cls, probabilities: dict[Hypothesis, float]) -> "FaultBelief":
        total = sum(probabilities.values())
        if total <= 0:
            raise ContractViolationError("belief mass must be positive")
        normalized = {h: p / total for h, p in probabilities.items()}
        return cls(hypotheses=normalized, entropy=shannon_entropy(normalized.values()))

    @classmethod
    def uniform(cls, hypotheses) -> "FaultBelief":
        hyps = list(hypotheses)
        if NO_FAULT not in hyps:
            hyps.append(NO_FAULT)
        return cls.from_probabilities({h: 1.0 for h in hyps})

    def posterior(self, hypothesis: Hypothesis) -> float:
        return self.hypotheses.get(hypothesis, 0.0)

    def fault_hypotheses(self) -> list[tuple[Hypothesis, float]]:
        """Non-no-fault hypotheses sorted by posterior desc, then key."""
        items = [(h, p) for h, p in self.hypotheses.items() if h != NO_FAULT]
        items.sort(key=lambda item: (-item[1], item[0]))
        return items

    def confirmed(self, threshold: float = CONFIRM_POSTERIOR) -> list[Hypothesis]:
        return [h for h, p in self.fault_hypotheses() if p >= threshold]


def update_belief(
    belief: FaultBelief,
    result: "ProbeResult",
) -> tuple[FaultBelief, float]:
    """Bayes-update a belief with a probe's observations.

    Every observation that carries a likelihood row multiplies the posterior;
    observations without rows (generic reads, errors) are skipped. Returns the
    new belief and the information gain (entropy before minus after).
    """
    current = belief
    for obs in result.observations:
        if obs.likelihoods is None:
            continue
        row = obs.likelihoods
        if all(row.get(h, 0.0) == 0.0 for h in current.hypotheses):
            raise DegenerateEvidenceError(
                f"all-zero likelihood row for observation {obs.command.raw_text!r}"
            )
        updated = {h: p * row.get(h, 0.0) for h, p in current.hypotheses.items()}
        if sum(updated.values()) <= 0:
            raise DegenerateEvidenceError(
                f"posterior mass vanished on {obs.command.raw_text!r}"
            )
        current = FaultBelief.from_probabilities(updated)
    gain = belief.entropy - current.entropy
    return current, gain


@dataclass(frozen=True)
class ScheduleDecision:
    chosen: TaskKind
    probe_reward: float
    execute_reward: float
    balance: float
    probe_task_id: str | None = None
    execute_task_id: str | None = None


class Observer:
    """Decision-making head of the loop; owns the belief and the task queue."""

    def __init__(
        self,
        catalog: CommandCatalog,
        memory: MemoryStore,
        theta_complex: float = DEFAULT_THETA_COMPLEX,
        balance: float = DEFAULT_LAMBDA,
    ):
        if not 0.0 <= balance <= 1.0:
            raise ContractViolationError("lambda must be in [0, 1]")
        self.catalog = catalog
        self.memory = memory
        self.theta_complex = theta_complex
        self.balance = balance
        self.belief = FaultBelief.uniform([])

    # -- complexity and decomposition --------------------------------------

    def estimate_complexity(self, task: Task) -> float:
        if not task.target_components:
            return 0.0
        spread = 2.0 if len(task.categories) > 1 else 0.0
        return len(task.target_components) + len(task.suspected_faults) + spread

    def component_priorities(
        self, components, dependencies: tuple[tuple[str, str], ...]
    ) -> dict[str, int]:
        """Priority per component: its number of transitive dependents.

        Components that others depend on must be remediated first, so they
        rank higher.
        """
        comp_list = sorted(components)
        depends_on: dict[str, frozenset[str]] = {
            c: frozenset(a for a, b in dependencies if b == c and a in comp_list)
            for c in comp_list
        }
        topological_order(comp_list, depends_on)  # raises on cycles
        dependents: dict[str, set[str]] = {c: set() for c in comp_list}
        changed = True
        while changed:
            changed = False
            for c in comp_list:
                for dep in depends_on[c]:
                    before = len(dependents[dep])
                    dependents[dep].add(c)
                    dependents[dep] |= dependents[c]
                    if len(dependents[dep]) != before:
                        changed = True
        return {c: len(dependents[c]) for c in comp_list}

    def decompose(
        self,
        task: Task,
        state: SystemState,
        context: list[CompressedContextEntry] | None = None,
        dependencies: tuple[tuple[str, str], ...] = (),
        enqueue: bool = True,
    ) -> list[Task]:
        """Split a complex task into probe/execute subtasks and enqueue them.

        Tasks at or below the complexity threshold pass through unchanged.
        Every suspected (component, fault) pair without a confirmed diagnosis
        becomes a probe subtask; every confirmed pair (posterior >= 0.5)
        becomes an execute subtask. Execute subtasks inherit ordering from
        the component dependency graph.
        """
        if task.status is not TaskStatus.PENDING:
            raise ContractViolationError(f"task {task.task_id!r} is not pending")
        if self.estimate_complexity(task) <= self.theta_complex:
            if enqueue:
                self.memory.enqueue_task(task)
            return [task]

        priorities = self.component_priorities(task.target_components, dependencies)
        confirmed = set(self.belief.confirmed())
        probes: list[Task] = []
        executes: list[Task] = []
        exec_ids: dict[str, list[str]] = {}

        for comp in sorted(task.target_components):
            for fault in sorted(task.suspected_faults):
                pair = (comp, fault)
                base_priority = priorities.get(comp, 0)
                if pair in confirmed:
                    spec = self.catalog.kind(fault)
                    exec_task = Task(
                        task_id=f"{task.task_id}/exec/{comp}/{fault}",
                        description=f"remediate {fault} on {comp}",
                        kind=TaskKind.EXECUTE,
                        target_components=frozenset({comp}),
                        suspected_faults=frozenset({fault}),
                        categories=task.categories,
                        priority=10 + base_priority,
                        resource_estimate=float(len(spec.remediation)),
                    )
                    executes.append(exec_task)
                    exec_ids.setdefault(comp, []).append(exec_task.task_id)
                else:
                    probes.append(
                        Task(
                            task_id=f"{task.task_id}/probe/{comp}/{fault}",
                            description=f"diagnose {fault} on {comp}",
                            kind=TaskKind.PROBE,
                            target_components=frozenset({comp}),
                            suspected_faults=frozenset({fault}),
                            categories=task.categories,
                            priority=base_priority,
                            resource_estimate=1.0,
                        )
                    )

        # Remediation of a dependency must complete before its dependents'.
        dep_edges = set(dependencies)
        ordered_exec: list[Task] = []
        for sub in executes:
            comp = next(iter(sub.target_components))
            upstream: set[str] = set()
            for a, b in dep_edges:
                if b == comp and a in exec_ids:
                    upstream.update(exec_ids[a])
            ordered_exec.append(replace(sub, depends_on=frozenset(upstream)))

        subtasks = probes + ordered_exec
        check_acyclic(subtasks)
        if enqueue:
            for sub in subtasks:
                self.memory.enqueue_task(sub)
        return subtasks

    # -- belief --------------------------------------------------------------

    def reset_belief(self, hypotheses) -> FaultBelief:
        self.belief = FaultBelief.uniform(hypotheses)
        return self.belief

    def absorb(self, result: "ProbeResult") -> float:
        """Update own belief from a probe result; returns information gain."""
        updated, gain = update_belief(self.belief, result)
        self.belief = updated
        result.information_gain = max(gain, 0.0)
        return gain

    # -- scheduling ------------------------------------------------------------

    def _best_probe(self, pending: list[Task]) -> tuple[float, Task | None]:
        # Selection weighs diagnosticity by the posterior mass the probe can
        # move (an expected-information proxy); the reward itself is the
        # entropy-times-diagnosticity estimate for the selected probe.
        best_score = -1.0
        best_diag = 0.0
        best_task: Task | None = None
        for task in pending:
            if task.kind is not TaskKind.PROBE:
                continue
            diag = max(
                (self.catalog.diagnosticity(f) for f in task.suspected_faults),
                default=0.0,
            )
            posterior = max(
                (
                    self.belief.posterior((c, f))
                    for c in task.target_components
                    for f in task.suspected_faults
                ),
                default=0.0,
            )
            score = diag * posterior
            if score > best_score or (
                score == best_score
                and best_task is not None
                and task.task_id < best_task.task_id
            ):
                best_score = score
                best_diag = diag
                best_task = task
        if best_task is None:
            return 0.0, None
        return min(1.0, self.belief.entropy * best_diag), best_task

    def _predicted_progress(
        self, task: Task, state: SystemState, target: SystemState
    ) -> float:
        current = state_distance(state, target)
        if current <= 0:
            return 0.0
        hypothetical = state
        for comp in sorted(task.target_components):
            live = hypothetical.component(comp)
            gauges = list(live.state_vector)
            for fault in sorted(task.suspected_faults):
                spec = self.catalog.kind(fault)
                for step_idx in range(len(spec.remediation)):
                    for gauge, value in self.catalog.expected_effect(
                        comp, fault, step_idx
                    ).items():
                        gauges[gauge_index(gauge)] = value
            hypothetical = hypothetical.with_component(
                ComponentState(
                    component_id=live.component_id,
                    state_vector=tuple(gauges),
                    health=live.health,
                    active_faults=live.active_faults,
                )
            )
        predicted = state_distance(hypothetical, target)
        fraction = (current - predicted) / current
        return min(1.0, max(0.0, fraction))

    def _best_execute(
        self, pending: list[Task], state: SystemState, target: SystemState
    ) -> tuple[float, Task | None]:
        best_fraction = -1.0
        best_task: Task | None = None
        for task in pending:
            if task.kind is not TaskKind.EXECUTE:
                continue
            fraction = self._predicted_progress(task, state, target)
            if fraction > best_fraction or (
                fraction == best_fraction and best_task and task.task_id < best_task.task_id
            ):
                best_fraction = fraction
                best_task = task
        if best_task is None:
            return 0.0, None
        return best_fraction, best_task

    def schedule(
        self,
        belief: FaultBelief,
        state: SystemState,
        target: SystemState,
        pending: list[Task],
        balance: float | None = None,
    ) -> ScheduleDecision | None:
        """Pick probe vs execute by lambda-weighted expected reward.

        Returns None when nothing is runnable. When only one action type is
        pending it is chosen outright; equal rewards resolve to execute.
        """
        lam = self.balance if balance is None else balance
        if not 0.0 <= lam <= 1.0:
            raise ContractViolationError("lambda must be in [0, 1]")
        self.belief = belief
        probe_raw, probe_task = self._best_probe(pending)
        exec_raw, exec_task = self._best_execute(pending, state, target)
        if probe_task is None and exec_task is None:
            return None
        probe_reward = lam * probe_raw if probe_task is not None else 0.0
        execute_reward = (1 - lam) * exec_raw if exec_task is not None else 0.0
        if probe_task is None:
            chosen = TaskKind.EXECUTE
        elif exec_task is None:
            chosen = TaskKind.PROBE
        else:
            chosen = TaskKind.PROBE if probe_reward > execute_reward else TaskKind.EXECUTE
        return ScheduleDecision(
            chosen=chosen,
            probe_reward=probe_reward,
            execute_reward=execute_reward,
            balance=lam,
            probe_task_id=probe_task.task_id if probe_task else None,
            execute_task_id=exec_task.task_id if exec_task else None,
        )

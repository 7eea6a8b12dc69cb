"""Read-only information gathering.

Probe scripts are deterministic template expansions from the command catalog:
one diagnostic command per live (component, fault) hypothesis, de-duplicated
and capped. Every script passes probe-policy validation before a single
command runs; a rejected script touches the environment zero times. Failing
commands are logged and execution continues with the next one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import ContractViolationError, UnsafeScriptError
from .memory import ContextSource, MemoryStore, RawContextEntry
from .safety import Command, DEFAULT_POLICY, Policy, SafetyPolicy, validate_script
from .simenv import Environment

if TYPE_CHECKING:
    from .observer import FaultBelief

logger = logging.getLogger(__name__)

DEFAULT_HYPOTHESIS_FLOOR = 0.05
DEFAULT_MAX_COMMANDS = 16


@dataclass(frozen=True)
class LikelihoodRow:
    """P(observed outcome | hypothesis) for a diagnostic command's result.

    The row is defined over every hypothesis: the diagnosed pair scores the
    command's sensitivity, anything else (including no-fault) its false
    positive rate; negative outcomes use the complements.
    """

    target: tuple[str, str]
    sensitivity: float
    false_positive: float
    positive: bool

    def get(self, hypothesis: tuple[str, str], default: float = 0.0) -> float:
        p_pos = self.sensitivity if hypothesis == self.target else self.false_positive
        return p_pos if self.positive else 1.0 - p_pos

    def __getitem__(self, hypothesis: tuple[str, str]) -> float:
        return self.get(hypothesis)


@dataclass(frozen=True)
class Observation:
    command: Command
    outcome: str
    error: bool
    # None for generic reads and failed commands: no diagnostic signal.
    # Anything with a .get(hypothesis) -> float works as a row.
    likelihoods: LikelihoodRow | dict | None = None


@dataclass
class ProbeResult:
    task_id: str
    observations: list[Observation] = field(default_factory=list)
    raw_entry_ids: list[str] = field(default_factory=list)
    # Filled in by the observer once the belief update has run.
    information_gain: float = 0.0


def generate_probe_script(
    task,
    belief: "FaultBelief",
    catalog,
    hypothesis_floor: float = DEFAULT_HYPOTHESIS_FLOOR,
    max_commands: int = DEFAULT_MAX_COMMANDS,
) -> list[Command]:
    """Diagnostic commands for every live hypothesis on the task's targets.

    Hypotheses below the posterior floor are skipped; duplicate commands
    collapse to one; the script keeps the highest-posterior commands up to
    the cap.
    """
    if not task.target_components:
        raise ContractViolationError(
            f"probe task {task.task_id!r} has no target components"
        )
    candidates: list[tuple[float, str, str, str]] = []
    for (comp, fault), posterior in belief.fault_hypotheses():
        if posterior < hypothesis_floor:
            continue
        if comp not in task.target_components:
            continue
        if task.suspected_faults and fault not in task.suspected_faults:
            continue
        text = catalog.kind(fault).diagnostic_text(comp)
        candidates.append((-posterior, text, comp, fault))

    candidates.sort()
    seen: set[str] = set()
    commands: list[Command] = []
    for _, text, comp, fault in candidates:
        if text in seen:
            continue
        seen.add(text)
        commands.append(catalog.diagnostic_command(comp, fault))
        if len(commands) >= max_commands:
            break
    return commands


class ProbeAgent:
    """Executes validated read-only scripts and stores what it sees."""

    def __init__(
        self,
        env: Environment,
        memory: MemoryStore,
        policy: SafetyPolicy = DEFAULT_POLICY,
        hypothesis_floor: float = DEFAULT_HYPOTHESIS_FLOOR,
        max_commands: int = DEFAULT_MAX_COMMANDS,
    ):
        self.env = env
        self.memory = memory
        self.policy = policy
        self.hypothesis_floor = hypothesis_floor
        self.max_commands = max_commands
        self._entry_seq = 0

    def _store_observation(self, obs: Observation) -> str:
        self._entry_seq += 1
        entry = RawContextEntry(
            entry_id=f"probe-{self._entry_seq:05d}",
            created_at=self.env.now,
            source=ContextSource.PROBE,
            text=obs.outcome,
            ttl=self.memory.raw_ttl,
        )
        return self.memory.put_raw(entry)

    def run_script(self, task_id: str, commands: list[Command]) -> ProbeResult:
        """Validate then run a probe script with error-continue semantics."""
        verdict = validate_script(commands, Policy.PROBE, self.policy)
        if not verdict.safe:
            raise UnsafeScriptError(
                f"unsafe script rejected for task {task_id!r}",
                verdict.violations,
            )
        result = ProbeResult(task_id=task_id)
        for cmd in commands:
            step = self.env.step(cmd)
            likelihoods = None
            if not step.error and step.diagnostic_result is not None:
                kind, component, positive = step.diagnostic_result
                spec = self.env.catalog.kind(kind)
                likelihoods = LikelihoodRow(
                    target=(component, kind),
                    sensitivity=spec.sensitivity,
                    false_positive=spec.false_positive,
                    positive=positive,
                )
            obs = Observation(
                command=cmd,
                outcome=step.text,
                error=step.error,
                likelihoods=likelihoods,
            )
            if step.error:
                logger.debug("probe command failed, continuing: %s", cmd.raw_text)
            result.observations.append(obs)
            result.raw_entry_ids.append(self._store_observation(obs))
        return result

    def run_probe(self, task, belief: "FaultBelief") -> ProbeResult:
        """Generate, validate, and execute the probe for a task."""
        commands = generate_probe_script(
            task,
            belief,
            self.env.catalog,
            hypothesis_floor=self.hypothesis_floor,
            max_commands=self.max_commands,
        )
        return self.run_script(task.task_id, commands)

    def query_status(self, task_id: str, component: str) -> Observation:
        """One generic status read, used for executor state refreshes."""
        cmd = self.env.catalog.status_command(component)
        result = self.run_script(task_id, [cmd])
        return result.observations[0]

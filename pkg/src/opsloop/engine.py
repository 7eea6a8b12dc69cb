"""Scenario execution engine: the observer loop over one environment.

Each cycle ingests environment logs, turns fresh alerts into incident waves,
schedules probe vs execute work, dispatches agents, compresses accumulated
raw context, and checks for resolution, collapse, or budget exhaustion.

Feature toggles realize the ablation rows: compression off leaves the working
context raw (every decision then reads far more text), dynamic scheduling off
falls back to strict probe/execute alternation, the flat memory keeps
everything in one unordered pile, and single-agent mode handles incidents
inline with one narrow probe per round instead of specialized subtasks.

Reading context costs simulated time proportional to its token volume; this
is what makes information overload measurable at desk scale.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .compressor import (
    Compressor,
    CriticalRule,
    DEFAULT_RULES,
    ExtractiveSummarizer,
    Window,
    ccr as compression_ratio,
    extract_critical,
    signature_rules,
    tokenize,
)
from .errors import ConfigError, EngineInvariantError, UnsafeScriptError
from .executor import ExecutorAgent, PlannedAction, ActionPlan, ExecOutcome, generate_plan
from .memory import ContextSource, MemoryStore, RawContextEntry
from .metrics import RunTrace
from .model import BASELINE, GAUGES, Task, TaskKind, state_distance
from .observer import FaultBelief, Observer
from .probe import ProbeAgent, generate_probe_script
from .safety import Command, SafetyPolicy, DEFAULT_POLICY
from .simenv import (
    CommandCatalog,
    DEFAULT_CATALOG,
    Environment,
    NO_FAULT,
    ScenarioSpec,
)

logger = logging.getLogger(__name__)

RESOLVED_DISTANCE = 0.05
IDLE_ADVANCE_SECONDS = 15.0
MAX_IDLE_CYCLES = 40
MAX_TRIM_ATTEMPTS = 5


@dataclass(frozen=True)
class EngineConfig:
    """All tunables of one engine run; validated before anything executes."""

    balance: float = 0.35               # probe/execute mixing weight
    theta_complex: float = 4.0
    window_size: int = 768
    overlap_ratio: float = 0.5
    target_ratio: float = 0.72
    raw_ttl: float = 24 * 3600.0
    compressed_ttl: float = 7 * 24 * 3600.0
    summarizer: str = "extractive"      # extractive | remote
    compressor_enabled: bool = True
    dynamic_scheduling: bool = True
    three_layer_memory: bool = True
    multi_agent: bool = True
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    step_budget: int = 500
    # Cost model: deliberation reads the working context.
    base_decision_seconds: float = 2.0
    read_seconds_per_token: float = 0.06
    single_agent_overhead: float = 4.0
    concurrency_level: int = 1
    contention_per_task: float = 0.03
    probe_max_commands: int = 16
    hypothesis_floor: float = 0.05
    critical_tolerance: float = 0.3
    staleness_seconds: float = 60.0
    # Raw tokens accumulated before a compression pass runs.
    compress_batch_tokens: int = 128

    def validate(self) -> None:
        if not 0.0 <= self.balance <= 1.0:
            raise ConfigError("balance (lambda) must be in [0, 1]")
        if self.theta_complex < 0:
            raise ConfigError("theta_complex must be >= 0")
        if self.window_size < 2:
            raise ConfigError("window_size must be >= 2")
        if not 0.0 <= self.overlap_ratio < 1.0:
            raise ConfigError("overlap_ratio must be in [0, 1)")
        if not 0.0 < self.target_ratio < 1.0:
            raise ConfigError("target_ratio must be in (0, 1)")
        if self.raw_ttl <= 0 or self.compressed_ttl <= 0:
            raise ConfigError("TTLs must be positive")
        if self.summarizer not in ("extractive", "remote"):
            raise ConfigError(f"unknown summarizer {self.summarizer!r}")
        if self.step_budget < 1:
            raise ConfigError("step_budget must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.concurrency_level < 1:
            raise ConfigError("concurrency_level must be >= 1")
        if self.probe_max_commands < 1:
            raise ConfigError("probe_max_commands must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seeds" in data:
            data["seeds"] = tuple(int(s) for s in data["seeds"])
        config = cls(**data)
        config.validate()
        return config


def ablation_configs(base: EngineConfig) -> dict[str, EngineConfig]:
    """The five comparison rows, sharing every untouched setting."""
    return {
        "full": base,
        "no-compressor": replace(base, compressor_enabled=False),
        "no-dynamic-scheduling": replace(base, dynamic_scheduling=False),
        "no-three-layer-memory": replace(base, three_layer_memory=False),
        "single-agent": replace(base, multi_agent=False),
    }


def _mix_seed(scenario_seed: int, run_seed: int) -> int:
    return (scenario_seed * 1_000_003 + run_seed * 7919) % (2**31 - 1)


class ScenarioRun:
    """One scenario x seed execution producing a RunTrace."""

    def __init__(
        self,
        spec: ScenarioSpec,
        config: EngineConfig,
        run_seed: int,
        catalog: CommandCatalog = DEFAULT_CATALOG,
        summarizer=None,
        policy: SafetyPolicy = DEFAULT_POLICY,
    ):
        config.validate()
        self.config = config
        self.catalog = catalog
        self.policy = policy
        env_spec = replace(spec, seed=_mix_seed(spec.seed, run_seed))
        self.env = Environment(env_spec, catalog)
        self.memory = MemoryStore(
            raw_ttl=config.raw_ttl,
            compressed_ttl=config.compressed_ttl,
            flat=not config.three_layer_memory,
        )
        self.env.add_clock_hook(self.memory.expire)
        self.rules: tuple[CriticalRule, ...] = DEFAULT_RULES + signature_rules(
            catalog.fault_lexicon()
        )
        self.compressor: Compressor | None = None
        if config.compressor_enabled:
            self.compressor = Compressor(
                summarizer=summarizer or ExtractiveSummarizer(),
                window_size=config.window_size,
                overlap_ratio=config.overlap_ratio,
                target_ratio=config.target_ratio,
                rules=self.rules,
                memory=self.memory,
            )
        self.observer = Observer(
            catalog,
            self.memory,
            theta_complex=config.theta_complex,
            balance=config.balance,
        )
        probe_cap = config.probe_max_commands if config.multi_agent else 4
        self.probe_agent = ProbeAgent(
            self.env,
            self.memory,
            policy=policy,
            hypothesis_floor=config.hypothesis_floor,
            max_commands=probe_cap,
        )
        self.executor = ExecutorAgent(
            self.env,
            self.memory,
            probe_agent=self.probe_agent,
            policy=policy,
            critical_tolerance=config.critical_tolerance,
            staleness_seconds=config.staleness_seconds,
        )
        self.trace = RunTrace(scenario_id=spec.scenario_id, seed=run_seed)
        self.target = self.env.target_state()
        self._env_entry_seq = 0
        self._wave_seq = 0
        self._uncompressed: list[RawContextEntry] = []
        self._retired: set[str] = set()
        self._belief_updated_at: dict[str, float] = {}
        self._issued_exec: set[str] = set()
        self._alternation_turn = TaskKind.PROBE
        self._current_turn = TaskKind.PROBE
        self._trim_attempts = 0

    # -- helpers -------------------------------------------------------------

    def _tag_text(self, text: str) -> frozenset[str]:
        toks = tuple(tokenize(text))
        window = Window(index=0, start=0, end=len(toks), tokens=toks)
        return frozenset(item.tag_id for item in extract_critical(window, self.rules))

    def _event(self, kind: str, **data) -> None:
        self.trace.add(self.env.now, kind, **data)

    def _distance(self) -> float:
        return state_distance(self.env.snapshot(), self.target)

    def _resolved(self) -> bool:
        return (
            not self.env.active_faults()
            and not self.env.injections_pending()
            and self._distance() < RESOLVED_DISTANCE
        )

    def _context_tokens(self) -> int:
        """Token volume a deliberation has to read under the current toggles."""
        raw_entries = self.memory.live_raw_entries()
        compressed = self.memory.live_compressed_entries()
        if self.compressor is None:
            return sum(len(tokenize(e.text)) for e in raw_entries)
        compressed_tokens = sum(len(tokenize(e.summary_text)) for e in compressed)
        if not self.config.three_layer_memory or not self.config.multi_agent:
            # Flat pile, or a lone generalist re-reading its own notes:
            # summaries never displace their sources.
            return compressed_tokens + sum(
                len(tokenize(e.text)) for e in raw_entries
            )
        return compressed_tokens + sum(
            len(tokenize(e.text))
            for e in raw_entries
            if e.entry_id not in self._retired
        )

    def _deliberation_cost(self) -> float:
        cost = (
            self.config.base_decision_seconds
            + self.config.read_seconds_per_token * self._context_tokens()
        )
        if not self.config.multi_agent:
            cost *= self.config.single_agent_overhead
        cost *= 1.0 + self.config.contention_per_task * (
            self.config.concurrency_level - 1
        )
        return cost

    def _store_env_line(self, line: str) -> RawContextEntry:
        self._env_entry_seq += 1
        entry = RawContextEntry(
            entry_id=f"env-{self._env_entry_seq:05d}",
            created_at=self.env.now,
            source=ContextSource.ENVIRONMENT,
            text=line,
            critical_tags=self._tag_text(line),
            ttl=self.memory.raw_ttl,
        )
        self.memory.put_raw(entry)
        self._uncompressed.append(entry)
        return entry

    def _track_probe_entries(self, result) -> None:
        for entry_id in result.raw_entry_ids:
            entry = self.memory.get_raw(entry_id)
            if entry is not None:
                self._uncompressed.append(entry)

    # -- compression ---------------------------------------------------------

    def _maybe_compress(self, force: bool = False) -> None:
        if self.compressor is None or not self._uncompressed:
            return
        batch = self._uncompressed
        texts = [e.text for e in batch]
        all_tokens = tokenize("\n".join(texts))
        if not force and len(all_tokens) < self.config.compress_batch_tokens:
            return
        if len(all_tokens) < 8:  # nothing worth summarizing
            return
        batch_tags: set[str] = set()
        for entry in batch:
            batch_tags |= entry.critical_tags
        entry = self.compressor.compress(
            all_tokens,
            source_entry_ids=frozenset(e.entry_id for e in batch),
            created_at=self.env.now,
            allowed_tags=frozenset(batch_tags),
        )
        out_tokens = len(tokenize(entry.summary_text))
        self._event(
            "compression",
            raw_tokens=len(all_tokens),
            compressed_tokens=out_tokens,
            ccr=compression_ratio(len(all_tokens), min(out_tokens, len(all_tokens))),
            preserved_tags=sorted(entry.preserved_tags),
            batch_tags=sorted(batch_tags),
        )
        self._retired.update(e.entry_id for e in batch)
        self._uncompressed = []

    # -- alert handling --------------------------------------------------------

    def _ingest_environment(self) -> set[str]:
        alerted: set[str] = set()
        for line in self.env.drain_logs():
            self._store_env_line(line)
            parts = line.split()
            if len(parts) >= 3 and parts[2] in ("ERROR", "CRITICAL"):
                component = parts[1]
                if component in self.env.spec.components:
                    alerted.add(component)
        return alerted

    def _memory_prior(self, component: str, fault: str) -> float:
        """Context reuse: summaries naming this fault boost its prior."""
        if not self.config.multi_agent or self.compressor is None:
            return 1.0
        signature = self.catalog.kind(fault).signature
        for entry in self.memory.live_compressed_entries():
            if component in entry.summary_text and signature in entry.summary_text:
                return 3.0
        return 1.0

    def _blast_radius(self, components: set[str]) -> set[str]:
        """Alerted components plus their direct topology neighbors."""
        scoped = set(components)
        for a, b in self.env.spec.dependencies:
            if a in components:
                scoped.add(b)
            if b in components:
                scoped.add(a)
        return scoped

    def _open_wave(self, alerted: set[str]) -> None:
        self._wave_seq += 1
        components = self._blast_radius(alerted)
        kinds = self.catalog.kinds_for_category(self.env.spec.category)
        # Merge into the running belief: live hypotheses keep their posterior
        # mass, newly suspected pairs enter at a neutral weight.
        floor = self.config.hypothesis_floor
        weights: dict[tuple[str, str], float] = {
            pair: p
            for pair, p in self.observer.belief.hypotheses.items()
            if pair != NO_FAULT and p >= floor
        }
        for comp in sorted(components):
            suspicion = 0.15 if comp in alerted else 0.08
            for fault in kinds:
                pair = (comp, fault)
                if pair not in weights:
                    weights[pair] = suspicion * self._memory_prior(comp, fault)
        weights[NO_FAULT] = max(
            self.observer.belief.posterior(NO_FAULT), 0.15
        )
        self.observer.belief = FaultBelief.from_probabilities(weights)
        for comp in components:
            self._belief_updated_at.pop(comp, None)
        wave_task = Task(
            task_id=f"wave-{self._wave_seq:03d}",
            description=f"incident wave over {sorted(components)}",
            kind=TaskKind.COMPOSITE,
            target_components=frozenset(components),
            suspected_faults=frozenset(kinds),
            categories=frozenset({self.env.spec.category.value}),
            priority=20,
        )
        self._event(
            "wave",
            task_id=wave_task.task_id,
            components=sorted(components),
            kinds=kinds,
        )
        if self.config.multi_agent:
            self.observer.decompose(
                wave_task,
                self.env.snapshot(),
                context=self.memory.live_compressed_entries(),
                dependencies=self.env.spec.dependencies,
                enqueue=True,
            )
        else:
            self.memory.enqueue_task(wave_task)

    # -- dispatch ------------------------------------------------------------

    def _run_probe_task(self, task: Task) -> None:
        try:
            result = self.probe_agent.run_probe(task, self.observer.belief)
        except UnsafeScriptError as exc:
            self._event("probe_rejected", task_id=task.task_id, reason=str(exc))
            self.memory.complete_task(task.task_id)
            return
        self._track_probe_entries(result)
        gain = self.observer.absorb(result)
        for comp in task.target_components:
            self._belief_updated_at[comp] = self.env.now
        self._event(
            "probe",
            task_id=task.task_id,
            commands=len(result.observations),
            errors=sum(1 for o in result.observations if o.error),
            information_gain=round(gain, 6),
            entropy=round(self.observer.belief.entropy, 6),
        )
        self.memory.complete_task(task.task_id)
        self.trace.tasks_completed += 1
        self._issue_confirmed_executes(task)
        self._prune_stale_probes()

    def _issue_confirmed_executes(self, origin: Task) -> None:
        if not self.config.multi_agent:
            return
        priorities = self.observer.component_priorities(
            self.env.spec.components, self.env.spec.dependencies
        )
        for comp, fault in self.observer.belief.confirmed():
            key = f"{comp}/{fault}"
            if key in self._issued_exec:
                continue
            self._issued_exec.add(key)
            spec = self.catalog.kind(fault)
            task = Task(
                task_id=f"wave-{self._wave_seq:03d}/exec/{comp}/{fault}",
                description=f"remediate {fault} on {comp}",
                kind=TaskKind.EXECUTE,
                target_components=frozenset({comp}),
                suspected_faults=frozenset({fault}),
                categories=frozenset({self.env.spec.category.value}),
                priority=10 + priorities.get(comp, 0),
                resource_estimate=float(len(spec.remediation)),
            )
            self.memory.enqueue_task(task)

    def _discount_remediated(self, pair: tuple[str, str]) -> None:
        """Move a remediated hypothesis' mass to no-fault.

        Remediation success means that fault is considered fixed; spreading
        its mass over the remaining hypotheses would revive suspicions the
        probes already crushed.
        """
        weights = dict(self.observer.belief.hypotheses)
        released = weights.get(pair, 0.0)
        if pair in weights:
            weights[pair] = 0.0
        weights[NO_FAULT] = weights.get(NO_FAULT, 0.0) + released
        if sum(weights.values()) <= 0:
            weights[NO_FAULT] = 1.0
        self.observer.belief = FaultBelief.from_probabilities(weights)
        self._prune_stale_probes()

    def _prune_stale_probes(self) -> None:
        """Complete queued probe tasks whose hypotheses all fell below floor."""
        floor = self.config.hypothesis_floor
        for task in list(self.memory.runnable_tasks()):
            if task.kind is not TaskKind.PROBE:
                continue
            live = any(
                self.observer.belief.posterior((c, f)) >= floor
                for c in task.target_components
                for f in task.suspected_faults
            )
            if not live:
                pruned = self.memory.dequeue_specific(task.task_id)
                if pruned is not None:
                    self.memory.complete_task(task.task_id)
                    self._event("probe_pruned", task_id=task.task_id)

    def _run_execute_task(self, task: Task) -> None:
        plan = generate_plan(
            task,
            self.catalog,
            compressed_context=self.memory.live_compressed_entries(),
            dependencies=self.env.spec.dependencies,
            belief_updated_at=self._belief_updated_at,
            now=self.env.now,
            staleness_seconds=self.config.staleness_seconds,
            policy=self.policy,
        )
        self._execute_plan(plan)
        self.memory.complete_task(task.task_id)
        self.trace.tasks_completed += 1
        for comp in task.target_components:
            for fault in task.suspected_faults:
                self._issued_exec.discard(f"{comp}/{fault}")
                self._discount_remediated((comp, fault))

    def _execute_plan(self, plan: ActionPlan) -> None:
        if plan.proposed_harmful:
            self._event(
                "harmful_proposed",
                task_id=plan.task_id,
                commands=[c.raw_text for c in plan.proposed_harmful],
            )
        if plan.blocked_harmful:
            self._event(
                "harmful_blocked",
                task_id=plan.task_id,
                commands=[c.raw_text for c in plan.blocked_harmful],
            )
        self._attach_action_listener()
        result = self.executor.execute_plan(plan)
        self._detach_action_listener()
        if result.outcome is ExecOutcome.ROLLED_BACK:
            self._event(
                "rollback",
                task_id=plan.task_id,
                checkpoint=result.rollback_checkpoint,
                executed=result.executed,
            )
        self._event(
            "execute",
            task_id=plan.task_id,
            outcome=result.outcome.value,
            executed=result.executed,
        )

    def _attach_action_listener(self) -> None:
        def listener(command: Command, step, before, after) -> None:
            self._event(
                "execute_action",
                command=command.raw_text,
                mutated=step.mutated,
                harmful=self.catalog.is_harmful(command),
                critical=step.critical,
                error=step.error,
                distance_before=state_distance(before, self.target),
                distance_after=state_distance(after, self.target),
            )

        self.executor.action_listener = listener

    def _detach_action_listener(self) -> None:
        self.executor.action_listener = None

    # -- composite (inline) handling -----------------------------------------

    def _run_composite(self, task: Task) -> None:
        """Handle a small wave in place: probe, then remediate what confirmed.

        A multi-agent composite probes every live hypothesis at once; the
        single-agent variant checks only the top hypothesis per round and
        re-enqueues itself while candidates remain.
        """
        cap = self.probe_agent.max_commands if self.config.multi_agent else 1
        try:
            commands = generate_probe_script(
                task,
                self.observer.belief,
                self.catalog,
                hypothesis_floor=self.config.hypothesis_floor,
                max_commands=cap,
            )
            result = self.probe_agent.run_script(task.task_id, commands)
        except UnsafeScriptError as exc:
            self._event("probe_rejected", task_id=task.task_id, reason=str(exc))
            self.memory.complete_task(task.task_id)
            return
        self._track_probe_entries(result)
        gain = self.observer.absorb(result)
        for comp in task.target_components:
            self._belief_updated_at[comp] = self.env.now
        self._event(
            "probe",
            task_id=task.task_id,
            commands=len(result.observations),
            errors=sum(1 for o in result.observations if o.error),
            information_gain=round(gain, 6),
            entropy=round(self.observer.belief.entropy, 6),
        )
        priorities = self.observer.component_priorities(
            self.env.spec.components, self.env.spec.dependencies
        )
        confirmed = sorted(
            self.observer.belief.confirmed(),
            key=lambda pair: (-priorities.get(pair[0], 0), pair),
        )
        for comp, fault in confirmed:
            exec_task = Task(
                task_id=f"{task.task_id}/exec/{comp}/{fault}",
                description=f"remediate {fault} on {comp}",
                kind=TaskKind.EXECUTE,
                target_components=frozenset({comp}),
                suspected_faults=frozenset({fault}),
                categories=task.categories,
                priority=10,
            )
            plan = generate_plan(
                exec_task,
                self.catalog,
                dependencies=self.env.spec.dependencies,
                belief_updated_at=self._belief_updated_at,
                now=self.env.now,
                staleness_seconds=self.config.staleness_seconds,
                policy=self.policy,
            )
            self._execute_plan(plan)
            self._discount_remediated((comp, fault))
        self.memory.complete_task(task.task_id)
        self.trace.tasks_completed += 1
        live_unconfirmed = [
            pair
            for pair, p in self.observer.belief.fault_hypotheses()
            if p >= self.config.hypothesis_floor
        ]
        if live_unconfirmed and not self._resolved():
            self._wave_seq += 1
            retry = replace(
                task,
                task_id=f"wave-{self._wave_seq:03d}-retry",
                priority=max(0, task.priority - 1),
            )
            self.memory.enqueue_task(retry)

    # -- trim pass -------------------------------------------------------------

    def _maybe_trim(self) -> bool:
        """Settle residual gauge drift once all faults are cleared."""
        if self.env.active_faults() or self.env.injections_pending():
            return False
        if self._distance() < RESOLVED_DISTANCE:
            return False
        if self._trim_attempts >= MAX_TRIM_ATTEMPTS:
            return False
        self._trim_attempts += 1
        drifted = []
        snapshot = self.env.snapshot()
        for comp in snapshot.components:
            per_comp = sum(
                (a - b) ** 2
                for a, b in zip(
                    comp.state_vector,
                    self.target.component(comp.component_id).state_vector,
                )
            )
            if per_comp > (RESOLVED_DISTANCE / 2) ** 2:
                drifted.append(comp.component_id)
        if not drifted:
            drifted = [snapshot.components[0].component_id]
        actions = tuple(
            PlannedAction(
                command=self.catalog.trim_command(comp),
                requires_state_refresh=False,
                expected_effect=(comp, dict(BASELINE)),
            )
            for comp in drifted
        )
        plan = ActionPlan(task_id=f"trim-{self._trim_attempts}", actions=actions)
        self._execute_plan(plan)
        self.trace.tasks_completed += 1
        return True

    # -- main loop ---------------------------------------------------------------

    def run(self) -> RunTrace:
        cpu_start = time.process_time()
        config = self.config
        self.trace.start_time = self.env.now
        cycles = 0
        idle_cycles = 0
        failed_reason: str | None = None

        while cycles < config.step_budget:
            cycles += 1
            alerted = self._ingest_environment()
            if self.env.has_collapsed():
                failed_reason = "collapse"
                self._event("collapse")
                break
            if self._resolved():
                break

            pending_components = self.memory.pending_components()
            fresh = {c for c in alerted if c not in pending_components}
            if fresh:
                self._open_wave(fresh)

            runnable = self.memory.runnable_tasks()
            if not runnable:
                if self._maybe_trim():
                    continue
                if self._resolved():
                    break
                idle_cycles += 1
                if idle_cycles > MAX_IDLE_CYCLES:
                    failed_reason = "stalled"
                    break
                wait = IDLE_ADVANCE_SECONDS
                next_injection = self.env.next_injection_at()
                if next_injection is not None and next_injection > self.env.now:
                    wait = min(
                        max(next_injection - self.env.now, 1.0), 120.0
                    )
                self.env.advance_clock(wait)
                continue
            idle_cycles = 0

            if not self._dispatch_alternation_gate(runnable):
                continue
            self.env.advance_clock(self._deliberation_cost())
            self._dispatch(runnable)
            self._maybe_compress()

        else:
            failed_reason = "step-budget"

        if failed_reason is None and not self._resolved():
            # Loop broke on collapse or resolution; anything else is a failure.
            failed_reason = failed_reason or "unresolved"
        self._maybe_compress(force=True)
        self.trace.end_time = self.env.now
        self.trace.final_state = self.env.snapshot()
        self.trace.resolved = self._resolved() and failed_reason is None
        if self.trace.resolved:
            self._event("resolved", distance=round(self._distance(), 6))
        else:
            self._event("failed", reason=failed_reason or "unknown")
        self.trace.cpu_seconds = time.process_time() - cpu_start
        self.trace.complete = True
        return self.trace

    def _dispatch(self, runnable: list[Task]) -> None:
        config = self.config
        composites = [t for t in runnable if t.kind is TaskKind.COMPOSITE]
        if composites:
            task = self.memory.dequeue_task()
            if task is None:
                return
            if task.kind is TaskKind.COMPOSITE:
                self._run_composite(task)
            elif task.kind is TaskKind.PROBE:
                self._run_probe_task(task)
            else:
                self._run_execute_task(task)
            return

        if config.dynamic_scheduling:
            decision = self.observer.schedule(
                self.observer.belief,
                self.env.snapshot(),
                self.target,
                runnable,
                balance=config.balance,
            )
            if decision is None:
                return
            self._event(
                "schedule",
                chosen=decision.chosen.value,
                probe_reward=round(decision.probe_reward, 6),
                execute_reward=round(decision.execute_reward, 6),
            )
            target_id = (
                decision.probe_task_id
                if decision.chosen is TaskKind.PROBE
                else decision.execute_task_id
            )
            task = self._dequeue_specific(target_id)
            if task is None:
                return
            if task.kind is TaskKind.PROBE:
                self._run_probe_task(task)
            else:
                self._run_execute_task(task)
        else:
            turn = self._current_turn
            candidates = [t for t in runnable if t.kind is turn]
            task = self._dequeue_specific(candidates[0].task_id) if candidates else None
            if task is None:
                return
            if task.kind is TaskKind.PROBE:
                self._run_probe_task(task)
            else:
                self._run_execute_task(task)

    def _dispatch_alternation_gate(self, runnable: list[Task]) -> bool:
        """Advance the fixed alternation; False when undispatchable this turn.

        An empty phase is visible without reading operational context, so a
        wasted turn costs only the base decision time.
        """
        if self.config.dynamic_scheduling:
            return True
        if any(t.kind is TaskKind.COMPOSITE for t in runnable):
            return True
        turn = self._alternation_turn
        self._current_turn = turn
        self._alternation_turn = (
            TaskKind.EXECUTE if turn is TaskKind.PROBE else TaskKind.PROBE
        )
        self._event("schedule", chosen=turn.value, fixed_alternation=True)
        if any(t.kind is turn for t in runnable):
            return True
        self.env.advance_clock(self.config.base_decision_seconds)
        return False

    def _dequeue_specific(self, task_id: str | None) -> Task | None:
        if task_id is None:
            return None
        return self.memory.dequeue_specific(task_id)


def run_scenario(
    spec: ScenarioSpec,
    config: EngineConfig,
    run_seed: int,
    catalog: CommandCatalog = DEFAULT_CATALOG,
    summarizer=None,
) -> RunTrace:
    return ScenarioRun(
        spec, config, run_seed, catalog=catalog, summarizer=summarizer
    ).run()

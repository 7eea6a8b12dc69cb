"""Deterministic simulated infrastructure.

Components carry five normalized gauges; faults from a fixed catalog shift
those gauges, decay availability while untreated, and emit annotated log
lines. Commands are the single surface agents interact through: diagnostics
are read-only and sample from declared likelihoods, remediations assign
gauges back toward baseline (with small seeded noise), harmful commands
degrade state and raise the critical flag. Snapshot/restore supports exact
rollback; the logical clock only moves forward.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import (
    ContractViolationError,
    EngineInvariantError,
    RestoreMismatchError,
    ScenarioLoadError,
)
from .model import (
    BASELINE,
    GAUGES,
    ComponentState,
    Health,
    SystemState,
    gauge_index,
    topological_order,
)
from .safety import Classification, Command, Policy, make_command, validate_script

logger = logging.getLogger(__name__)

MUTATION_NOISE = 0.02           # uniform +/- applied to assigned gauges
COLLAPSE_AVAILABILITY = 0.02    # untreated decay below this ends the run
COLLAPSE_FAULT = "collapsed"    # synthetic fault kind marking a dead component
READ_ERROR_RATE = 0.02          # transient probe failure probability
HEARTBEAT_INTERVAL = 90.0       # seconds between repeated fault alerts
HARMFUL_VERBS: frozenset[str] = frozenset({"DROP", "TRUNCATE", "PURGE", "KILL"})

STATUS_WHAT = "status"          # generic read: "GET status <component>"
TRIM_WHAT = "gauge-trim"        # generic settle: "TUNE gauge-trim <component>"


class Category(str, Enum):
    SERVICE_FAILURE = "ServiceFailure"
    PERFORMANCE_DEGRADATION = "PerformanceDegradation"
    CONFIGURATION_DRIFT = "ConfigurationDrift"
    SECURITY_INCIDENT = "SecurityIncident"


@dataclass(frozen=True)
class RemediationStep:
    verb: str
    what: str
    restores: tuple[str, ...]
    duration: float

    def text(self, component: str) -> str:
        return f"{self.verb} {self.what} {component}"


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    category: Category
    impact: dict[str, float]
    health: Health
    signature: str
    diag_verb: str
    diag_what: str
    sensitivity: float
    false_positive: float
    diagnosticity: float
    diag_duration: float
    remediation: tuple[RemediationStep, ...]
    decay_rate: float = 0.0
    risky_shortcut: tuple[str, str] | None = None  # (verb, what)

    def diagnostic_text(self, component: str) -> str:
        return f"{self.diag_verb} {self.diag_what} {component}"

    def remediation_texts(self, component: str) -> list[str]:
        return [step.text(component) for step in self.remediation]

    def shortcut_text(self, component: str) -> str | None:
        if self.risky_shortcut is None:
            return None
        verb, what = self.risky_shortcut
        return f"{verb} {what} {component}"


def _step(verb: str, what: str, restores: Iterable[str], duration: float) -> RemediationStep:
    return RemediationStep(verb=verb, what=what, restores=tuple(restores), duration=duration)


_FAULT_SPECS: tuple[FaultSpec, ...] = (
    FaultSpec(
        kind="db-conn-exhausted",
        category=Category.SERVICE_FAILURE,
        impact={"error_rate": 0.85, "availability": 0.35, "latency": 0.75},
        health=Health.FAILED,
        signature="connection pool exhausted",
        diag_verb="SHOW", diag_what="connections",
        sensitivity=0.94, false_positive=0.05, diagnosticity=0.89, diag_duration=4.0,
        remediation=(
            _step("RESTART", "connection-pool", ("error_rate", "latency"), 25.0),
            _step("SCALE", "max-connections", ("availability",), 15.0),
        ),
        decay_rate=1.05e-3,
        risky_shortcut=("TRUNCATE", "stale-sessions"),
    ),
    FaultSpec(
        kind="service-crash",
        category=Category.SERVICE_FAILURE,
        impact={"availability": 0.15, "error_rate": 0.95, "cpu": 0.05},
        health=Health.FAILED,
        signature="process exited unexpectedly",
        diag_verb="GET", diag_what="process-status",
        sensitivity=0.96, false_positive=0.04, diagnosticity=0.92, diag_duration=3.0,
        remediation=(
            _step("RESTART", "service-unit", ("availability", "cpu"), 30.0),
            _step("APPLY", "readiness-check", ("error_rate",), 12.0),
        ),
        decay_rate=3.9e-4,
    ),
    FaultSpec(
        kind="network-partition",
        category=Category.SERVICE_FAILURE,
        impact={"latency": 0.95, "error_rate": 0.70, "availability": 0.45},
        health=Health.FAILED,
        signature="upstream unreachable",
        diag_verb="GET", diag_what="route-table",
        sensitivity=0.92, false_positive=0.06, diagnosticity=0.86, diag_duration=5.0,
        remediation=(
            _step("RELOAD", "network-routes", ("latency", "error_rate"), 20.0),
            _step("RESTART", "mesh-proxy", ("availability",), 25.0),
        ),
        decay_rate=1.3e-3,
    ),
    FaultSpec(
        kind="cpu-saturation",
        category=Category.PERFORMANCE_DEGRADATION,
        impact={"cpu": 0.97, "latency": 0.80},
        health=Health.DEGRADED,
        signature="cpu saturation detected",
        diag_verb="SHOW", diag_what="top-processes",
        sensitivity=0.93, false_positive=0.06, diagnosticity=0.87, diag_duration=3.0,
        remediation=(
            _step("SCALE", "worker-replicas", ("cpu",), 22.0),
            _step("TUNE", "thread-pool", ("latency",), 14.0),
        ),
    ),
    FaultSpec(
        kind="memory-leak",
        category=Category.PERFORMANCE_DEGRADATION,
        impact={"memory": 0.95, "latency": 0.60, "availability": 0.80},
        health=Health.DEGRADED,
        signature="heap usage climbing",
        diag_verb="READ", diag_what="heap-profile",
        sensitivity=0.90, false_positive=0.05, diagnosticity=0.85, diag_duration=6.0,
        remediation=(
            _step("RESTART", "leaking-workers", ("memory", "availability"), 28.0),
            _step("PATCH", "allocator-config", ("latency",), 16.0),
        ),
        decay_rate=3.0e-4,
    ),
    FaultSpec(
        kind="disk-io-bottleneck",
        category=Category.PERFORMANCE_DEGRADATION,
        impact={"latency": 0.85, "cpu": 0.60},
        health=Health.DEGRADED,
        signature="iowait elevated",
        diag_verb="SHOW", diag_what="io-stats",
        sensitivity=0.91, false_positive=0.07, diagnosticity=0.84, diag_duration=4.0,
        remediation=(
            _step("TUNE", "io-scheduler", ("latency",), 18.0),
            _step("FLUSH", "write-buffer", ("cpu",), 10.0),
        ),
    ),
    FaultSpec(
        kind="latency-spike",
        category=Category.PERFORMANCE_DEGRADATION,
        impact={"latency": 0.90, "error_rate": 0.30},
        health=Health.DEGRADED,
        signature="p99 latency breached",
        diag_verb="GET", diag_what="latency-histogram",
        sensitivity=0.89, false_positive=0.08, diagnosticity=0.81, diag_duration=3.0,
        remediation=(
            _step("RELOAD", "qos-policy", ("latency", "error_rate"), 15.0),
        ),
    ),
    FaultSpec(
        kind="version-mismatch",
        category=Category.CONFIGURATION_DRIFT,
        impact={"error_rate": 0.60, "availability": 0.70},
        health=Health.DEGRADED,
        signature="api version mismatch",
        diag_verb="DESCRIBE", diag_what="deployment-manifest",
        sensitivity=0.94, false_positive=0.05, diagnosticity=0.89, diag_duration=4.0,
        remediation=(
            _step("APPLY", "version-pin", ("error_rate",), 20.0),
            _step("RESTART", "rolling-update", ("availability",), 30.0),
        ),
        decay_rate=1.0e-4,
    ),
    FaultSpec(
        kind="dependency-conflict",
        category=Category.CONFIGURATION_DRIFT,
        impact={"error_rate": 0.70, "availability": 0.60, "cpu": 0.50},
        health=Health.DEGRADED,
        signature="dependency resolution failed",
        diag_verb="LIST", diag_what="package-versions",
        sensitivity=0.92, false_positive=0.06, diagnosticity=0.86, diag_duration=5.0,
        remediation=(
            _step("APPLY", "dependency-lock", ("error_rate", "cpu"), 24.0),
            _step("RESTART", "dependent-services", ("availability",), 26.0),
        ),
        decay_rate=1.5e-4,
    ),
    FaultSpec(
        kind="config-drift",
        category=Category.CONFIGURATION_DRIFT,
        impact={"error_rate": 0.55, "latency": 0.50},
        health=Health.DEGRADED,
        signature="config checksum deviates",
        diag_verb="READ", diag_what="config-digest",
        sensitivity=0.95, false_positive=0.04, diagnosticity=0.91, diag_duration=3.0,
        remediation=(
            _step("APPLY", "golden-config", ("error_rate",), 18.0),
            _step("RELOAD", "service-config", ("latency",), 12.0),
        ),
    ),
    FaultSpec(
        kind="unauthorized-access",
        category=Category.SECURITY_INCIDENT,
        impact={"error_rate": 0.40, "cpu": 0.70, "availability": 0.85},
        health=Health.DEGRADED,
        signature="anomalous auth attempts",
        diag_verb="LIST", diag_what="auth-events",
        sensitivity=0.93, false_positive=0.05, diagnosticity=0.88, diag_duration=4.0,
        remediation=(
            _step("PATCH", "firewall-rules", ("error_rate", "availability"), 20.0),
            _step("ROTATE", "access-credentials", ("cpu",), 22.0),
        ),
        decay_rate=2.0e-4,
        risky_shortcut=("TRUNCATE", "audit-log"),
    ),
    FaultSpec(
        kind="cert-expired",
        category=Category.SECURITY_INCIDENT,
        impact={"error_rate": 0.80, "availability": 0.50},
        health=Health.FAILED,
        signature="certificate expired",
        diag_verb="READ", diag_what="certificate-chain",
        sensitivity=0.96, false_positive=0.04, diagnosticity=0.92, diag_duration=3.0,
        remediation=(
            _step("ROTATE", "tls-certificate", ("error_rate",), 25.0),
            _step("RELOAD", "tls-listener", ("availability",), 12.0),
        ),
        decay_rate=1.4e-3,
    ),
    FaultSpec(
        kind="policy-violation",
        category=Category.SECURITY_INCIDENT,
        impact={"error_rate": 0.45, "availability": 0.75},
        health=Health.DEGRADED,
        signature="policy enforcement failure",
        diag_verb="DESCRIBE", diag_what="policy-bindings",
        sensitivity=0.90, false_positive=0.06, diagnosticity=0.84, diag_duration=4.0,
        remediation=(
            _step("APPLY", "policy-baseline", ("error_rate", "availability"), 20.0),
        ),
        decay_rate=1.0e-4,
        risky_shortcut=("DROP", "quarantine-records"),
    ),
)

# Hypothesis key: (component_id, fault_kind). The explicit no-fault hypothesis
# uses this sentinel pair.
NO_FAULT: tuple[str, str] = ("", "no-fault")


class CommandCatalog:
    """Declarative knowledge about diagnostics, remediations, and harm."""

    def __init__(self, specs: Sequence[FaultSpec] = _FAULT_SPECS):
        self._specs = {spec.kind: spec for spec in specs}
        self._diag_index: dict[tuple[str, str], str] = {}
        self._rem_index: dict[tuple[str, str], tuple[str, int]] = {}
        for spec in specs:
            self._diag_index[(spec.diag_verb, spec.diag_what)] = spec.kind
            for i, step in enumerate(spec.remediation):
                self._rem_index[(step.verb, step.what)] = (spec.kind, i)

    def kinds(self) -> list[str]:
        return sorted(self._specs)

    def kind(self, kind_id: str) -> FaultSpec:
        try:
            return self._specs[kind_id]
        except KeyError:
            raise ScenarioLoadError(f"unknown fault kind {kind_id!r}") from None

    def has_kind(self, kind_id: str) -> bool:
        return kind_id in self._specs

    def kinds_for_category(self, category: Category) -> list[str]:
        return sorted(k for k, s in self._specs.items() if s.category is category)

    def fault_lexicon(self) -> list[str]:
        return sorted(spec.signature for spec in self._specs.values())

    def diagnostic_command(self, component: str, kind_id: str) -> Command:
        return make_command(self.kind(kind_id).diagnostic_text(component))

    def remediation_commands(self, component: str, kind_id: str) -> list[Command]:
        return [make_command(t) for t in self.kind(kind_id).remediation_texts(component)]

    def status_command(self, component: str) -> Command:
        return make_command(f"GET {STATUS_WHAT} {component}")

    def trim_command(self, component: str) -> Command:
        return make_command(f"TUNE {TRIM_WHAT} {component}")

    def find_diagnostic(self, cmd: Command) -> tuple[str, str] | None:
        """(kind, component) when the command is a catalog diagnostic."""
        if len(cmd.arguments) < 2:
            return None
        kind = self._diag_index.get((cmd.verb, cmd.arguments[0]))
        if kind is None:
            return None
        return kind, cmd.arguments[-1]

    def find_remediation(self, cmd: Command) -> tuple[str, int, str] | None:
        """(kind, step index, component) for catalog remediation commands."""
        if len(cmd.arguments) < 2:
            return None
        hit = self._rem_index.get((cmd.verb, cmd.arguments[0]))
        if hit is None:
            return None
        kind, step_idx = hit
        return kind, step_idx, cmd.arguments[-1]

    def is_harmful(self, cmd: Command) -> bool:
        return cmd.verb in HARMFUL_VERBS

    def diagnosticity(self, kind_id: str) -> float:
        return self.kind(kind_id).diagnosticity

    def expected_effect(
        self, component: str, kind_id: str, step_idx: int
    ) -> dict[str, float]:
        """Intended post-command gauge values for one remediation step."""
        step = self.kind(kind_id).remediation[step_idx]
        return {g: BASELINE[g] for g in step.restores}

    def likelihood_row(
        self,
        diag_kind: str,
        diag_component: str,
        positive: bool,
        hypotheses: Iterable[tuple[str, str]],
    ) -> dict[tuple[str, str], float]:
        """P(observed outcome | hypothesis) for every given hypothesis."""
        spec = self.kind(diag_kind)
        row: dict[tuple[str, str], float] = {}
        for hyp in hypotheses:
            if hyp == (diag_component, diag_kind):
                p_pos = spec.sensitivity
            else:
                p_pos = spec.false_positive
            row[hyp] = p_pos if positive else 1.0 - p_pos
        return row


DEFAULT_CATALOG = CommandCatalog()


@dataclass(frozen=True)
class FaultInjection:
    component: str
    fault: str
    at: float


@dataclass(frozen=True)
class ScenarioSpec:
    scenario_id: str
    category: Category
    components: tuple[str, ...]
    dependencies: tuple[tuple[str, str], ...]  # (a, b): b depends on a
    injected_faults: tuple[FaultInjection, ...]
    ground_truth_remediation: tuple[str, ...]
    critical_markers: frozenset[str]
    seed: int

    def to_json(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "category": self.category.value,
            "topology": {
                "components": list(self.components),
                "dependencies": [list(edge) for edge in self.dependencies],
            },
            "injected_faults": [
                {"component": i.component, "fault": i.fault, "at": i.at}
                for i in self.injected_faults
            ],
            "ground_truth_remediation": list(self.ground_truth_remediation),
            "critical_markers": sorted(self.critical_markers),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScenarioSpec":
        try:
            topo = data["topology"]
            return cls(
                scenario_id=data["scenario_id"],
                category=Category(data["category"]),
                components=tuple(topo["components"]),
                dependencies=tuple(
                    (edge[0], edge[1]) for edge in topo.get("dependencies", [])
                ),
                injected_faults=tuple(
                    FaultInjection(f["component"], f["fault"], float(f["at"]))
                    for f in data.get("injected_faults", [])
                ),
                ground_truth_remediation=tuple(data.get("ground_truth_remediation", [])),
                critical_markers=frozenset(data.get("critical_markers", [])),
                seed=int(data["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioLoadError(f"malformed scenario: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioSpec":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioLoadError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_json(data)


@dataclass(frozen=True)
class StepOutcome:
    """Result of one environment command."""

    text: str
    error: bool
    critical: bool
    mutated: bool
    duration: float
    log_lines: tuple[str, ...]
    component: str | None = None
    # (kind, component, positive) when the command was a catalog diagnostic,
    # letting observers fetch the matching likelihood row.
    diagnostic_result: tuple[str, str, bool] | None = None


@dataclass
class _LiveComponent:
    gauges: list[float]
    health: Health = Health.HEALTHY
    active_faults: set[str] = field(default_factory=set)
    collapsed: bool = False

    def snapshot(self, component_id: str) -> ComponentState:
        return ComponentState(
            component_id=component_id,
            state_vector=tuple(self.gauges),
            health=self.health,
            active_faults=frozenset(self.active_faults),
        )


class Environment:
    """One loaded scenario: ground truth state, clock, logs, fault script."""

    def __init__(self, spec: ScenarioSpec, catalog: CommandCatalog = DEFAULT_CATALOG):
        self.spec = spec
        self.catalog = catalog
        self._validate(spec, catalog)
        self.now = 0.0
        self._rng = random.Random(spec.seed)
        self._components: dict[str, _LiveComponent] = {
            cid: _LiveComponent(gauges=[BASELINE[g] for g in GAUGES])
            for cid in spec.components
        }
        self._pending = sorted(spec.injected_faults, key=lambda i: (i.at, i.component))
        self._injected: list[FaultInjection] = []
        self._log: list[str] = []
        self._drained = 0
        self._last_heartbeat: dict[tuple[str, str], float] = {}
        self._remediation_progress: dict[tuple[str, str], set[int]] = {}
        self._markers = self._assign_markers(spec)
        self._clock_hooks: list[Callable[[float], None]] = []
        self.readonly_step_count = 0
        self.mutating_step_count = 0

    @staticmethod
    def _validate(spec: ScenarioSpec, catalog: CommandCatalog) -> None:
        if not spec.components:
            raise ScenarioLoadError("scenario has no components")
        comp_set = set(spec.components)
        for a, b in spec.dependencies:
            if a not in comp_set or b not in comp_set:
                raise ScenarioLoadError(f"dependency edge ({a}, {b}) off topology")
        deps: dict[str, set[str]] = {c: set() for c in spec.components}
        for a, b in spec.dependencies:
            deps[b].add(a)
        try:
            topological_order(
                list(spec.components),
                {c: frozenset(d) for c, d in deps.items()},
            )
        except Exception as exc:
            raise ScenarioLoadError(f"cyclic topology: {exc}") from exc
        for injection in spec.injected_faults:
            if not catalog.has_kind(injection.fault):
                raise ScenarioLoadError(f"unknown fault kind {injection.fault!r}")
            if injection.component not in comp_set:
                raise ScenarioLoadError(
                    f"injection targets unknown component {injection.component!r}"
                )
        commands = [make_command(text) for text in spec.ground_truth_remediation]
        verdict = validate_script(commands, Policy.EXECUTOR)
        if not verdict.safe:
            raise ScenarioLoadError(
                f"ground-truth remediation fails executor policy: {verdict.violations}"
            )

    @staticmethod
    def _assign_markers(spec: ScenarioSpec) -> dict[tuple[str, str], list[str]]:
        markers = sorted(spec.critical_markers)
        injections = sorted(spec.injected_faults, key=lambda i: (i.at, i.component))
        assigned: dict[tuple[str, str], list[str]] = {
            (i.component, i.fault): [] for i in injections
        }
        if not injections:
            return assigned
        keys = [(i.component, i.fault) for i in injections]
        for pos, marker in enumerate(markers):
            assigned[keys[pos % len(keys)]].append(marker)
        return assigned

    # -- read side -------------------------------------------------------

    def snapshot(self) -> SystemState:
        return SystemState(
            time=self.now,
            components=tuple(
                self._components[cid].snapshot(cid) for cid in self.spec.components
            ),
        )

    def component_fingerprint(self) -> tuple[ComponentState, ...]:
        """Component states only; excludes the clock for purity checks."""
        return tuple(
            self._components[cid].snapshot(cid) for cid in self.spec.components
        )

    def target_state(self) -> SystemState:
        return SystemState(
            time=0.0,
            components=tuple(
                ComponentState(cid, tuple(BASELINE[g] for g in GAUGES))
                for cid in self.spec.components
            ),
        )

    def active_faults(self) -> set[tuple[str, str]]:
        return {
            (cid, kind)
            for cid, live in self._components.items()
            for kind in live.active_faults
        }

    def has_collapsed(self) -> bool:
        return any(live.collapsed for live in self._components.values())

    def injections_pending(self) -> bool:
        return bool(self._pending)

    def next_injection_at(self) -> float | None:
        return self._pending[0].at if self._pending else None

    def drain_logs(self) -> list[str]:
        fresh = self._log[self._drained:]
        self._drained = len(self._log)
        return fresh

    def all_logs(self) -> list[str]:
        return list(self._log)

    # -- clock -----------------------------------------------------------

    def add_clock_hook(self, hook: Callable[[float], None]) -> None:
        self._clock_hooks.append(hook)

    def advance_clock(self, duration: float) -> None:
        if duration < 0:
            raise ContractViolationError("cannot advance the clock backwards")
        target = self.now + duration
        while self._pending and self._pending[0].at <= target:
            injection = self._pending[0]
            self._decay(max(injection.at - self.now, 0.0))
            self.now = max(self.now, injection.at)
            self._pending.pop(0)
            self._apply_injection(injection)
        self._decay(target - self.now)
        self.now = target
        self._emit_heartbeats()
        for hook in self._clock_hooks:
            hook(self.now)

    def _decay(self, dt: float) -> None:
        if dt <= 0:
            return
        for cid, live in self._components.items():
            rate = sum(
                self.catalog.kind(k).decay_rate
                for k in live.active_faults
                if k != COLLAPSE_FAULT
            )
            if rate <= 0:
                continue
            idx = gauge_index("availability")
            live.gauges[idx] = max(0.0, live.gauges[idx] - rate * dt)
            if live.gauges[idx] <= COLLAPSE_AVAILABILITY and not live.collapsed:
                live.collapsed = True
                live.health = Health.FAILED
                # Annotated as a fault of its own so Failed health always has
                # a non-empty cause set; no remediation clears it.
                live.active_faults.add(COLLAPSE_FAULT)
                self._emit(cid, "CRITICAL", "availability floor breached; service unrecoverable")

    def _apply_injection(self, injection: FaultInjection) -> None:
        spec = self.catalog.kind(injection.fault)
        live = self._components[injection.component]
        for gauge, value in spec.impact.items():
            live.gauges[gauge_index(gauge)] = value
        live.active_faults.add(injection.fault)
        if spec.health is Health.FAILED or live.health is Health.FAILED:
            live.health = Health.FAILED
        else:
            live.health = Health.DEGRADED
        self._injected.append(injection)
        self._remediation_progress.pop((injection.component, injection.fault), None)
        markers = self._markers.get((injection.component, injection.fault), [])
        marker_text = " ".join(f"[CRIT:{m}]" for m in markers)
        self._emit(
            injection.component,
            "ERROR",
            f"{spec.signature} {marker_text}".strip(),
        )
        worst_gauge = max(spec.impact, key=lambda g: abs(spec.impact[g] - BASELINE[g]))
        comparator = ">" if spec.impact[worst_gauge] > BASELINE[worst_gauge] else "<"
        bound = spec.impact[worst_gauge] + (-0.01 if comparator == ">" else 0.01)
        self._emit(
            injection.component,
            "WARN",
            f"{worst_gauge} {comparator} {bound:.2f} threshold breach "
            f"sustained on {injection.component}; alert storm building; "
            f"{self._gauge_readout(injection.component)}",
        )
        # Correlated alarms: dependents see the blast before anyone diagnoses it.
        for upstream, downstream in self.spec.dependencies:
            if upstream == injection.component:
                self._emit(
                    downstream,
                    "WARN",
                    f"upstream {upstream} unstable; retry budget depleting; "
                    f"circuit breaker half-open; request queue depth rising; "
                    f"{self._gauge_readout(downstream)}",
                )
        for gauge, value in sorted(spec.impact.items()):
            if gauge == worst_gauge:
                continue
            self._emit(
                injection.component,
                "WARN",
                f"secondary symptom: {gauge} drifted to {value:.2f}; paging "
                f"suppressed pending correlation; window 300s samples 64",
            )
        self._last_heartbeat[(injection.component, injection.fault)] = self.now

    def _emit_heartbeats(self) -> None:
        for cid, live in self._components.items():
            for kind in sorted(live.active_faults):
                if kind == COLLAPSE_FAULT:
                    continue
                key = (cid, kind)
                last = self._last_heartbeat.get(key, 0.0)
                if self.now - last >= HEARTBEAT_INTERVAL:
                    spec = self.catalog.kind(kind)
                    self._emit(
                        cid,
                        "ERROR",
                        f"{spec.signature} (ongoing); {self._gauge_readout(cid)}",
                    )
                    self._last_heartbeat[key] = self.now

    def _gauge_readout(self, component: str) -> str:
        live = self._components[component]
        return " ".join(
            f"{g}={live.gauges[gauge_index(g)]:.3f}" for g in GAUGES
        )

    def _emit(self, component: str, severity: str, text: str) -> None:
        self._log.append(f"{self.now:.1f} {component} {severity} {text}")

    # -- command surface ---------------------------------------------------

    def step(self, cmd: Command) -> StepOutcome:
        before = len(self._log)
        if self.catalog.is_harmful(cmd):
            outcome = self._step_harmful(cmd)
        elif cmd.classification is Classification.READ_ONLY:
            outcome = self._step_readonly(cmd)
        else:
            outcome = self._step_mutating(cmd)
        self.advance_clock(outcome.duration)
        lines = tuple(self._log[before:])
        return replace(outcome, log_lines=lines)

    def _resolve_component(self, cmd: Command) -> str | None:
        if cmd.arguments and cmd.arguments[-1] in self._components:
            return cmd.arguments[-1]
        return None

    def _step_readonly(self, cmd: Command) -> StepOutcome:
        self.readonly_step_count += 1
        fingerprint = self.component_fingerprint()
        outcome = self._readonly_outcome(cmd)
        if self.component_fingerprint() != fingerprint:
            raise EngineInvariantError(
                f"read-only command {cmd.raw_text!r} mutated ground truth"
            )
        return outcome

    def _readonly_outcome(self, cmd: Command) -> StepOutcome:
        diag = self.catalog.find_diagnostic(cmd)
        component = self._resolve_component(cmd)
        if component is None:
            return StepOutcome(
                text=f"no such target for {cmd.raw_text!r}",
                error=True, critical=False, mutated=False,
                duration=2.0, log_lines=(),
            )
        if self._rng.random() < READ_ERROR_RATE:
            self._emit(component, "WARN", f"probe failed: {cmd.verb} timed out")
            return StepOutcome(
                text="probe error: timeout", error=True, critical=False,
                mutated=False, duration=3.0, log_lines=(), component=component,
            )
        live = self._components[component]
        if diag is not None:
            kind, _ = diag
            spec = self.catalog.kind(kind)
            fault_active = kind in live.active_faults
            p_pos = spec.sensitivity if fault_active else spec.false_positive
            positive = self._rng.random() < p_pos
            verdict = spec.signature if positive else "nominal"
            text = (
                f"{spec.diag_what} check on {component}: {verdict}; "
                f"inspected {spec.diag_what} records depth=32 window=300s; "
                f"{self._gauge_readout(component)}; "
                f"correlation ref {component}-{int(self.now)}"
            )
            self._emit(component, "INFO", text)
            return StepOutcome(
                text=text, error=False, critical=False, mutated=False,
                duration=spec.diag_duration, log_lines=(), component=component,
                diagnostic_result=(kind, component, positive),
            )
        # Generic read (e.g. "GET status <c>"): gauge readout, no likelihoods.
        text = (
            f"status {component}: health={live.health.value} "
            f"{self._gauge_readout(component)}; uptime probe clean; "
            f"journal cursor {int(self.now)}"
        )
        self._emit(component, "INFO", text)
        return StepOutcome(
            text=text, error=False, critical=False, mutated=False,
            duration=2.0, log_lines=(), component=component,
        )

    def _assign_gauge(self, live: _LiveComponent, gauge: str, value: float) -> None:
        noise = self._rng.uniform(-MUTATION_NOISE, MUTATION_NOISE)
        idx = gauge_index(gauge)
        live.gauges[idx] = min(1.0, max(0.0, value + noise))

    def _step_mutating(self, cmd: Command) -> StepOutcome:
        component = self._resolve_component(cmd)
        if component is None:
            return StepOutcome(
                text=f"malformed command {cmd.raw_text!r}",
                error=True, critical=False, mutated=False,
                duration=2.0, log_lines=(),
            )
        live = self._components[component]
        rem = self.catalog.find_remediation(cmd)
        if rem is not None:
            kind, step_idx, _ = rem
            self.mutating_step_count += 1
            spec = self.catalog.kind(kind)
            step = spec.remediation[step_idx]
            for gauge in step.restores:
                self._assign_gauge(live, gauge, BASELINE[gauge])
            cleared = False
            if kind in live.active_faults:
                progress = self._remediation_progress.setdefault(
                    (component, kind), set()
                )
                progress.add(step_idx)
                if progress >= set(range(len(spec.remediation))):
                    live.active_faults.discard(kind)
                    self._remediation_progress.pop((component, kind), None)
                    cleared = True
            if not live.active_faults and not live.collapsed:
                live.health = Health.HEALTHY
            text = (
                f"applied {step.verb} {step.what} on {component}; "
                f"{self._gauge_readout(component)}"
            )
            if cleared:
                text += f"; {kind} cleared"
                self._emit(component, "INFO", f"{kind} cleared after remediation")
            else:
                self._emit(component, "INFO", text)
            return StepOutcome(
                text=text, error=False, critical=False, mutated=True,
                duration=step.duration, log_lines=(), component=component,
            )
        if cmd.verb == "TUNE" and cmd.arguments and cmd.arguments[0] == TRIM_WHAT:
            self.mutating_step_count += 1
            for gauge in GAUGES:
                self._assign_gauge(live, gauge, BASELINE[gauge])
            text = f"gauge trim on {component}"
            self._emit(component, "INFO", text)
            return StepOutcome(
                text=text, error=False, critical=False, mutated=True,
                duration=8.0, log_lines=(), component=component,
            )
        return StepOutcome(
            text=f"unsupported operation {cmd.raw_text!r}",
            error=True, critical=False, mutated=False,
            duration=2.0, log_lines=(), component=component,
        )

    def _step_harmful(self, cmd: Command) -> StepOutcome:
        component = self._resolve_component(cmd) or self.spec.components[0]
        live = self._components[component]
        self.mutating_step_count += 1
        avail = gauge_index("availability")
        err = gauge_index("error_rate")
        live.gauges[avail] = max(0.0, live.gauges[avail] - 0.30)
        live.gauges[err] = min(1.0, live.gauges[err] + 0.30)
        if live.health is Health.HEALTHY:
            live.health = Health.DEGRADED
        text = f"destructive operation {cmd.verb} hit {component}"
        self._emit(component, "CRITICAL", text)
        return StepOutcome(
            text=text, error=True, critical=True, mutated=True,
            duration=5.0, log_lines=(), component=component,
        )

    # -- snapshot / restore ------------------------------------------------

    def restore(self, state: SystemState) -> None:
        if state.component_ids() != tuple(self.spec.components):
            raise RestoreMismatchError(
                "snapshot topology does not match this environment"
            )
        for comp in state.components:
            live = self._components[comp.component_id]
            live.gauges = list(comp.state_vector)
            live.health = comp.health
            live.active_faults = set(comp.active_faults)
            live.collapsed = False
        # The clock is deliberately NOT rewound: rollbacks consume time.
        self._emit("system", "INFO", "state restored from checkpoint")


def load_scenario(
    spec: ScenarioSpec, catalog: CommandCatalog = DEFAULT_CATALOG
) -> Environment:
    return Environment(spec, catalog)

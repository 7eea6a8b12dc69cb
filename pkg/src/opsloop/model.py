"""Shared domain vocabulary: component/system state, tasks, cost, distance.

Every type here is an immutable value; agents and the simulator exchange
copies freely without coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import ContractViolationError, DecompositionError, ShapeError

# Gauge layout of every component state vector, in index order.
# All gauges are normalized to [0, 1].
GAUGES: tuple[str, ...] = ("cpu", "memory", "latency", "error_rate", "availability")
STATE_DIM = len(GAUGES)

# Nominal operating point of a healthy component.
BASELINE: dict[str, float] = {
    "cpu": 0.30,
    "memory": 0.35,
    "latency": 0.10,
    "error_rate": 0.00,
    "availability": 1.00,
}
BASELINE_VECTOR: tuple[float, ...] = tuple(BASELINE[g] for g in GAUGES)


def gauge_index(name: str) -> int:
    try:
        return GAUGES.index(name)
    except ValueError:
        raise ShapeError(f"unknown gauge {name!r}") from None


class Health(str, Enum):
    HEALTHY = "Healthy"
    DEGRADED = "Degraded"
    FAILED = "Failed"


class TaskKind(str, Enum):
    PROBE = "Probe"
    EXECUTE = "Execute"
    COMPOSITE = "Composite"


class TaskStatus(str, Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


@dataclass(frozen=True)
class ComponentState:
    """One managed component: its gauge vector plus fault annotations."""

    component_id: str
    state_vector: tuple[float, ...]
    health: Health = Health.HEALTHY
    active_faults: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.state_vector) != STATE_DIM:
            raise ShapeError(
                f"state vector for {self.component_id!r} has length "
                f"{len(self.state_vector)}, expected {STATE_DIM}"
            )
        if self.health is Health.FAILED and not self.active_faults:
            raise ContractViolationError(
                f"{self.component_id!r} is Failed with no active faults"
            )

    def gauge(self, name: str) -> float:
        return self.state_vector[gauge_index(name)]


@dataclass(frozen=True)
class SystemState:
    """Full-system snapshot at one instant of the logical clock."""

    time: float
    components: tuple[ComponentState, ...]

    def __post_init__(self):
        ids = [c.component_id for c in self.components]
        if len(ids) != len(set(ids)):
            raise ContractViolationError("duplicate component ids in system state")

    def component(self, component_id: str) -> ComponentState:
        for c in self.components:
            if c.component_id == component_id:
                return c
        raise ShapeError(f"no component {component_id!r} in system state")

    def component_ids(self) -> tuple[str, ...]:
        return tuple(c.component_id for c in self.components)

    def with_component(self, updated: ComponentState) -> "SystemState":
        comps = tuple(
            updated if c.component_id == updated.component_id else c
            for c in self.components
        )
        return replace(self, components=comps)


@dataclass(frozen=True)
class CostWeights:
    """Weights on completion time, resource cost, and risk."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ContractViolationError("cost weights must be non-negative")
        if self.alpha + self.beta + self.gamma <= 0:
            raise ContractViolationError("at least one cost weight must be positive")


@dataclass(frozen=True)
class CostOutcome:
    """Measured outcome of an action sequence, fed to the cost function."""

    completion_time: float
    resource_cost: float
    risk_score: float


@dataclass(frozen=True)
class Task:
    """A user goal or one of its decomposed atomic units."""

    task_id: str
    description: str
    kind: TaskKind
    target_components: frozenset[str] = frozenset()
    suspected_faults: frozenset[str] = frozenset()
    categories: frozenset[str] = frozenset()
    priority: int = 0
    resource_estimate: float = 0.0
    depends_on: frozenset[str] = frozenset()
    status: TaskStatus = TaskStatus.PENDING

    def __post_init__(self):
        if self.priority < 0:
            raise ContractViolationError("task priority must be >= 0")
        if self.resource_estimate < 0:
            raise ContractViolationError("resource estimate must be >= 0")


def cost(outcome: CostOutcome, weights: CostWeights) -> float:
    """Weighted operational cost of an outcome; linear in every argument."""
    fields = (outcome.completion_time, outcome.resource_cost, outcome.risk_score)
    if min(fields) < 0:
        raise ContractViolationError("cost outcome fields must be non-negative")
    return (
        weights.alpha * outcome.completion_time
        + weights.beta * outcome.resource_cost
        + weights.gamma * outcome.risk_score
    )


def state_distance(current: SystemState, target: SystemState) -> float:
    """Euclidean norm of the concatenated component-wise gauge differences.

    Both states must describe the same component set; component order does
    not matter.
    """
    if current.component_ids() != target.component_ids():
        cur_ids = set(current.component_ids())
        tgt_ids = set(target.component_ids())
        if cur_ids != tgt_ids:
            raise ShapeError(
                f"component sets differ: {sorted(cur_ids)} vs {sorted(tgt_ids)}"
            )
    total = 0.0
    for comp in current.components:
        other = target.component(comp.component_id)
        if len(other.state_vector) != len(comp.state_vector):
            raise ShapeError(f"dimension mismatch on {comp.component_id!r}")
        for a, b in zip(comp.state_vector, other.state_vector):
            diff = a - b
            total += diff * diff
    return math.sqrt(total)


def check_acyclic(tasks: Iterable[Task]) -> None:
    """Raise if the depends_on edges over the given tasks contain a cycle."""
    graph: dict[str, frozenset[str]] = {t.task_id: t.depends_on for t in tasks}
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(node: str, stack: list[str]) -> None:
        mark = state.get(node)
        if mark == 1:
            return
        if mark == 0:
            cycle = " -> ".join(stack + [node])
            raise DecompositionError(f"task dependency cycle: {cycle}")
        state[node] = 0
        for dep in sorted(graph.get(node, frozenset())):
            if dep in graph:
                visit(dep, stack + [node])
        state[node] = 1

    for task_id in graph:
        visit(task_id, [])


def topological_order(nodes: Sequence[str], edges: Mapping[str, frozenset[str]]) -> list[str]:
    """Order nodes so that everything a node depends on comes before it.

    ``edges[n]`` is the set of nodes ``n`` depends on. Deterministic: ties
    resolve in lexicographic order. Raises on cycles.
    """
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(node: str, stack: list[str]) -> None:
        mark = state.get(node)
        if mark == 1:
            return
        if mark == 0:
            cycle = " -> ".join(stack + [node])
            raise DecompositionError(f"dependency cycle: {cycle}")
        state[node] = 0
        for dep in sorted(edges.get(node, frozenset())):
            if dep in nodes:
                visit(dep, stack + [node])
        state[node] = 1
        order.append(node)

    for node in sorted(nodes):
        visit(node, [])
    return order


def healthy_component(component_id: str) -> ComponentState:
    return ComponentState(component_id=component_id, state_vector=BASELINE_VECTOR)


def healthy_system(component_ids: Sequence[str], time: float = 0.0) -> SystemState:
    return SystemState(
        time=time, components=tuple(healthy_component(c) for c in component_ids)
    )

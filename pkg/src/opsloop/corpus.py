"""Bundled scenario corpus and annotated log fixtures.

The corpus covers all four incident categories (12+ scenarios each) plus
cascading multi-fault cases, every scenario with planted critical markers and
its ground-truth remediation sequence. Fixtures are synthetic annotated log
documents used by the compression benchmarks. Both are generated
deterministically, so the shipped JSON data can always be rebuilt bit-exactly.
"""

from __future__ import annotations

import json
import random
from importlib import resources
from pathlib import Path

from .model import GAUGES
from .simenv import (
    Category,
    CommandCatalog,
    DEFAULT_CATALOG,
    FaultInjection,
    ScenarioSpec,
)

_TOPOLOGIES: tuple[tuple[tuple[str, ...], tuple[tuple[str, str], ...]], ...] = (
    # (components, dependency edges (a, b): b depends on a)
    (("db-1", "api-1", "web-1"), (("db-1", "api-1"), ("api-1", "web-1"))),
    (("auth-1", "api-1", "cache-1", "web-1"),
     (("auth-1", "api-1"), ("cache-1", "api-1"), ("api-1", "web-1"))),
    (("db-1", "worker-1"), (("db-1", "worker-1"),)),
)


def _marker(scenario_id: str, index: int) -> str:
    return f"{scenario_id}-m{index}"


def _ground_truth(
    catalog: CommandCatalog,
    injections: list[FaultInjection],
    dependencies: tuple[tuple[str, str], ...],
) -> tuple[str, ...]:
    # Dependencies first: remediate components others rely on before dependents.
    rank: dict[str, int] = {}
    for injection in injections:
        depth = 0
        frontier = {injection.component}
        seen = set()
        while frontier:
            next_frontier = set()
            for a, b in dependencies:
                if b in frontier and a not in seen:
                    next_frontier.add(a)
                    seen.add(a)
            if next_frontier:
                depth += 1
            frontier = next_frontier
        rank[injection.component] = depth
    ordered = sorted(
        injections, key=lambda i: (-rank.get(i.component, 0), i.at, i.component)
    )
    commands: list[str] = []
    for injection in ordered:
        commands.extend(
            catalog.kind(injection.fault).remediation_texts(injection.component)
        )
    return tuple(commands)


def bundled_scenarios(
    catalog: CommandCatalog = DEFAULT_CATALOG,
) -> list[ScenarioSpec]:
    """The full desk-scale suite: 52 single-fault + 8 cascade scenarios."""
    scenarios: list[ScenarioSpec] = []
    seed_counter = 1000

    # Single-fault scenarios: every kind appears across rotating topologies
    # and injection offsets, 13 kinds x 4 variants.
    for kind_idx, kind_id in enumerate(catalog.kinds()):
        spec = catalog.kind(kind_id)
        for variant in range(4):
            components, dependencies = _TOPOLOGIES[(kind_idx + variant) % len(_TOPOLOGIES)]
            target = components[(kind_idx + variant) % len(components)]
            scenario_id = f"{spec.category.value.lower()[:4]}-{kind_id}-{variant}"
            injections = [FaultInjection(target, kind_id, at=30.0 + 15.0 * variant)]
            markers = frozenset(
                _marker(scenario_id, i) for i in range(2 + variant % 2)
            )
            seed_counter += 1
            scenarios.append(
                ScenarioSpec(
                    scenario_id=scenario_id,
                    category=spec.category,
                    components=components,
                    dependencies=dependencies,
                    injected_faults=tuple(injections),
                    ground_truth_remediation=_ground_truth(
                        catalog, injections, dependencies
                    ),
                    critical_markers=markers,
                    seed=seed_counter,
                )
            )

    # Cascades: a second fault lands downstream while the first is live.
    cascade_plans = [
        ("cascade-db-api", Category.SERVICE_FAILURE,
         [("db-1", "db-conn-exhausted", 30.0), ("api-1", "service-crash", 140.0)]),
        ("cascade-net-web", Category.SERVICE_FAILURE,
         [("api-1", "network-partition", 30.0), ("web-1", "service-crash", 150.0)]),
        ("cascade-web-db", Category.SERVICE_FAILURE,
         [("api-1", "service-crash", 30.0), ("db-1", "db-conn-exhausted", 130.0)]),
        ("cascade-part-conn", Category.SERVICE_FAILURE,
         [("db-1", "network-partition", 30.0), ("api-1", "db-conn-exhausted", 145.0)]),
        ("cascade-cpu-mem", Category.PERFORMANCE_DEGRADATION,
         [("db-1", "disk-io-bottleneck", 30.0), ("api-1", "cpu-saturation", 160.0)]),
        ("cascade-leak-lat", Category.PERFORMANCE_DEGRADATION,
         [("api-1", "memory-leak", 30.0), ("web-1", "latency-spike", 170.0)]),
        ("cascade-cfg-dep", Category.CONFIGURATION_DRIFT,
         [("db-1", "config-drift", 30.0), ("api-1", "dependency-conflict", 165.0)]),
        ("cascade-sec-cert", Category.SECURITY_INCIDENT,
         [("auth-1", "unauthorized-access", 30.0), ("api-1", "cert-expired", 135.0)]),
    ]
    for scenario_id, category, plan in cascade_plans:
        components, dependencies = _TOPOLOGIES[1 if "auth-1" in {p[0] for p in plan} else 0]
        injections = [FaultInjection(c, k, at) for c, k, at in plan]
        markers = frozenset(_marker(scenario_id, i) for i in range(4))
        seed_counter += 1
        scenarios.append(
            ScenarioSpec(
                scenario_id=scenario_id,
                category=category,
                components=components,
                dependencies=dependencies,
                injected_faults=tuple(injections),
                ground_truth_remediation=_ground_truth(
                    catalog, injections, dependencies
                ),
                critical_markers=markers,
                seed=seed_counter,
            )
        )
    return scenarios


def null_scenario(seed: int = 7) -> ScenarioSpec:
    """A faultless scenario; resolves immediately."""
    components, dependencies = _TOPOLOGIES[0]
    return ScenarioSpec(
        scenario_id="null-healthy",
        category=Category.SERVICE_FAILURE,
        components=components,
        dependencies=dependencies,
        injected_faults=(),
        ground_truth_remediation=(),
        critical_markers=frozenset(),
        seed=seed,
    )


# -- annotated log fixtures ---------------------------------------------------

_FIXTURE_SERVICES = ("checkout", "inventory", "payments", "search", "billing")
_FIXTURE_VERBS = (
    "request completed", "cache warmed", "heartbeat ok", "gc cycle finished",
    "connection opened", "session refreshed", "batch flushed", "metrics scraped",
    "replica synced", "config reloaded cleanly", "queue drained", "lease renewed",
)


def fixture_document(
    name: str, n_lines: int, n_markers: int, seed: int,
    catalog: CommandCatalog = DEFAULT_CATALOG,
) -> tuple[str, frozenset[str]]:
    """One synthetic annotated log: mostly routine lines, a few critical ones.

    Returns (text, ground-truth marker tags). Critical lines embed planted
    markers plus fault signatures, error codes, threshold breaches, and causal
    phrases so every extraction rule has real work to do.
    """
    rng = random.Random(seed)
    signatures = catalog.fault_lexicon()
    marker_positions = sorted(
        rng.sample(range(2, n_lines - 2), n_markers)
    )
    tags = [f"{name}-t{i}" for i in range(n_markers)]
    position_to_tag = dict(zip(marker_positions, tags))
    lines: list[str] = []
    for i in range(n_lines):
        t = 1000 + 3 * i
        service = rng.choice(_FIXTURE_SERVICES)
        if i in position_to_tag:
            tag = position_to_tag[i]
            signature = rng.choice(signatures)
            code = f"ERR-{rng.randint(1000, 9999)}"
            gauge = rng.choice(GAUGES)
            lines.append(
                f"{t} {service} ERROR {code} {signature} [CRIT:{tag}] "
                f"{gauge} > {rng.uniform(0.7, 0.95):.2f} due to upstream saturation."
            )
        else:
            routine = rng.choice(_FIXTURE_VERBS)
            lines.append(
                f"{t} {service} INFO {routine}; latency_ms={rng.randint(3, 40)} "
                f"conn={rng.randint(1, 50)} shard={rng.randint(0, 7)}."
            )
    return "\n".join(lines), frozenset(tags)


def bundled_fixtures(
    catalog: CommandCatalog = DEFAULT_CATALOG,
) -> list[tuple[str, str, frozenset[str]]]:
    """(name, text, truth tags) triples for the compression benchmarks."""
    plans = [
        ("fixture-small", 260, 8, 101),
        ("fixture-medium", 700, 14, 202),
        ("fixture-large", 1600, 20, 303),
        ("fixture-dense", 900, 30, 404),
    ]
    return [
        (name, *fixture_document(name, n_lines, n_markers, seed, catalog))
        for name, n_lines, n_markers, seed in plans
    ]


# -- packaging helpers ---------------------------------------------------------

def write_corpus(directory: str | Path) -> int:
    """Write the bundled suite as one JSON file per scenario; returns count."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scenarios = bundled_scenarios()
    for spec in scenarios:
        path = directory / f"{spec.scenario_id}.json"
        path.write_text(json.dumps(spec.to_json(), indent=2, sort_keys=True) + "\n")
    return len(scenarios)


def write_fixtures(directory: str | Path) -> int:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    fixtures = bundled_fixtures()
    for name, text, tags in fixtures:
        (directory / f"{name}.log").write_text(text + "\n")
        (directory / f"{name}.tags.json").write_text(
            json.dumps(sorted(tags)) + "\n"
        )
    return len(fixtures)


def packaged_scenario_dir() -> Path:
    return Path(str(resources.files("opsloop").joinpath("data/scenarios")))


def packaged_fixture_dir() -> Path:
    return Path(str(resources.files("opsloop").joinpath("data/fixtures")))


def load_scenario_dir(directory: str | Path) -> list[ScenarioSpec]:
    """Parse every *.json scenario in a directory, sorted by filename."""
    directory = Path(directory)
    specs = []
    for path in sorted(directory.glob("*.json")):
        specs.append(ScenarioSpec.from_file(path))
    return specs

"""Campaign driver: configuration, the fuzzing loop, bug bundles, replay.

Each iteration generates a fresh schema, graph, and indexes, loads them
into every target, then issues first the freshly generated and then the
mutated queries, comparing per-target outcomes differentially. Bug
bundles are self-contained: the manifest carries the derived seed and
generation limits, so replay regenerates the exact database.
"""

from __future__ import annotations

import dataclasses
import json
import random
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import __version__
from . import query_ast as qa
from .completion import FrequencyList, NameState, fill_skeleton, update_frequencies
from .contexts import validate_semantics
from .errors import CompletionError, ConfigError, GenerationError, SetupError
from .executor import DEFAULT_ROW_LIMIT, ExecOutcome, OutcomeKind, ResultSet
from .generate import (
    GenLimits,
    IndexSpec,
    create_script,
    generate_graph,
    generate_indexes,
    generate_schema,
    schema_script,
)
from .metrics import (
    ExecutedQuery,
    MetricsReport,
    coverage_curve,
    grammar_coverage,
    non_empty_rate,
    semantic_validity_rate,
)
from .model import GraphSchema, Node, PropertyGraph, Relationship
from .mutation import QueryPool, mutate, pool_admit
from .oracle import Verdict, VerdictKind, compare, crash_only_verdict
from .parser import parse_query
from .skeleton import EngineCaps, generate_skeleton
from .targets import EngineTarget, execute, parse_target, setup_target

FRESH_QUERY_RETRIES = 5


@dataclass
class CampaignConfig:
    targets: list[str] = field(default_factory=lambda: ["reference"])
    seed: int | str = 0
    num_generated: int = 100  # fresh queries per iteration
    num_mutated: int = 100  # mutated queries per iteration
    iterations: int | None = None  # None: run until the timeout
    timeout: float = 1800.0  # seconds for the whole campaign
    min_len: int = 3
    max_len: int = 6
    retention_min: int = 3
    retention_max: int = 6
    pool_capacity: int = 256
    expression_depth: int = 3
    index_count: int = 1
    limits: GenLimits = field(default_factory=GenLimits)
    out_dir: str | None = None
    stop_on_first_bug: bool = False
    save_corpus: bool = False
    frequency_feedback: bool = True
    row_limit: int = DEFAULT_ROW_LIMIT
    query_time_limit: float = 30.0
    non_empty_designation: str | None = None  # None: any target counts

    def validate(self) -> None:
        if self.num_generated < 0 or self.num_mutated < 0:
            raise ConfigError("query counts must be >= 0")
        if self.num_generated + self.num_mutated < 1:
            raise ConfigError("at least one query per iteration is required")
        if not self.targets:
            raise ConfigError("at least one target is required")
        if not 1 <= self.min_len <= self.max_len:
            raise ConfigError("need 1 <= min_len <= max_len")
        if self.retention_min > self.retention_max:
            raise ConfigError("empty retention range")
        if self.iterations is not None and self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        self.limits.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        payload = dict(data)
        if "limits" in payload and isinstance(payload["limits"], dict):
            limit_fields = {f.name for f in fields(GenLimits)}
            bad = set(payload["limits"]) - limit_fields
            if bad:
                raise ConfigError(f"unknown limits keys: {sorted(bad)}")
            raw = dict(payload["limits"])
            for name in ("int_range", "float_range"):
                if name in raw:
                    raw[name] = tuple(raw[name])
            payload["limits"] = GenLimits(**raw)
        config = cls(**payload)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "CampaignConfig":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def limits_dict(self) -> dict:
        data = dataclasses.asdict(self.limits)
        data["int_range"] = list(data["int_range"])
        data["float_range"] = list(data["float_range"])
        return data


@dataclass
class BugReport:
    index: int
    iteration: int
    query_index: int
    verdict: Verdict
    query: qa.Query
    outcomes: dict[str, ExecOutcome]
    target_labels: list[str]
    seed: int | str
    child_seed: str
    limits: GenLimits
    index_count: int
    toolkit_version: str = __version__

    @property
    def query_text(self) -> str:
        return qa.render(self.query)


@dataclass
class CampaignResult:
    bugs: list[BugReport]
    metrics: MetricsReport
    iterations_run: int
    executed: list[ExecutedQuery]
    out_dir: Path | None = None
    setup_failures: int = 0

    @property
    def exit_code(self) -> int:
        return 1 if self.bugs else 0


# ---------------------------------------------------------------------------
# Deterministic database construction (shared by campaign and replay)


def derive_child_seed(seed: int | str, iteration: int) -> str:
    return f"{seed}/{iteration}"


def build_database(
    child_seed: str, limits: GenLimits, index_count: int
) -> tuple[GraphSchema, PropertyGraph, list[IndexSpec]]:
    rng = random.Random(f"{child_seed}/db")
    schema = generate_schema(rng, limits)
    graph = generate_graph(rng, schema, limits)
    indexes = generate_indexes(rng, schema, index_count)
    return schema, graph, indexes


# ---------------------------------------------------------------------------
# Bundle serialization

_KIND_LABEL = {
    OutcomeKind.SUCCESS: "success",
    OutcomeKind.SEMANTIC_REJECTION: "semantic_rejection",
    OutcomeKind.RUNTIME_ERROR: "runtime_error",
    OutcomeKind.TIMEOUT: "timeout",
    OutcomeKind.CONNECTION_LOST: "connection_lost",
}


def format_float(value: float) -> str:
    """Floats in bundles carry 17 significant digits (lossless round-trip)."""
    return f"{value:.17g}"


def _json_cell(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, list):
        return "[" + ", ".join(_json_cell(v) for v in value) + "]"
    if isinstance(value, Node):
        inner = ", ".join(
            f"{json.dumps(k)}: {_json_cell(v)}" for k, v in sorted(value.properties.items())
        )
        labels = ", ".join(json.dumps(l) for l in sorted(value.labels))
        return f'{{"node": {{"labels": [{labels}], "properties": {{{inner}}}}}}}'
    if isinstance(value, Relationship):
        inner = ", ".join(
            f"{json.dumps(k)}: {_json_cell(v)}" for k, v in sorted(value.properties.items())
        )
        return (
            f'{{"relationship": {{"type": {json.dumps(value.rel_type)}, '
            f'"properties": {{{inner}}}}}}}'
        )
    raise TypeError(f"cannot serialize cell {value!r}")


def render_outcome_json(outcome: ExecOutcome, indent: str = "  ") -> str:
    lines = [f'{indent}"kind": {json.dumps(_KIND_LABEL[outcome.kind])}']
    if outcome.message is not None:
        lines.append(f'{indent}"message": {json.dumps(outcome.message)}')
    if outcome.result is not None:
        columns = ", ".join(json.dumps(c) for c in outcome.result.columns)
        lines.append(f'{indent}"columns": [{columns}]')
        lines.append(f'{indent}"ordered": {"true" if outcome.result.ordered else "false"}')
        rows = ", ".join(
            "[" + ", ".join(_json_cell(cell) for cell in row) + "]"
            for row in outcome.result.rows
        )
        lines.append(f'{indent}"rows": [{rows}]')
    return "{\n" + ",\n".join(lines) + "\n" + indent[:-2] + "}"


def render_outcomes_json(outcomes: dict[str, ExecOutcome]) -> str:
    entries = []
    for label, outcome in outcomes.items():
        body = render_outcome_json(outcome, indent="    ")
        entries.append(f'  {json.dumps(label)}: {body}')
    return "{\n" + ",\n".join(entries) + "\n}\n"


def emit_bug_report(report: BugReport, out_dir: str | Path) -> Path:
    """Write the five-file bundle for a bug verdict."""
    bundle = Path(out_dir) / f"{report.index:04d}"
    bundle.mkdir(parents=True, exist_ok=True)
    schema, graph, indexes = build_database(
        report.child_seed, report.limits, report.index_count
    )
    manifest = {
        "bundle": report.index,
        "iteration": report.iteration,
        "query_index": report.query_index,
        "seed": report.seed,
        "child_seed": report.child_seed,
        "verdict": {
            "kind": report.verdict.kind.value,
            "reason": report.verdict.reason,
        },
        "targets": report.target_labels,
        "toolkit_version": report.toolkit_version,
        "gen_limits": _limits_to_dict(report.limits),
        "index_count": report.index_count,
    }
    (bundle / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (bundle / "schema.cypher").write_text(schema_script(schema, indexes), encoding="utf-8")
    (bundle / "graph.cypher").write_text(create_script(graph), encoding="utf-8")
    (bundle / "query.cypher").write_text(report.query_text + "\n", encoding="utf-8")
    (bundle / "outcomes.json").write_text(
        render_outcomes_json(report.outcomes), encoding="utf-8"
    )
    return bundle


def _limits_to_dict(limits: GenLimits) -> dict:
    data = dataclasses.asdict(limits)
    data["int_range"] = list(data["int_range"])
    data["float_range"] = list(data["float_range"])
    return data


def _limits_from_dict(data: dict) -> GenLimits:
    raw = dict(data)
    raw["int_range"] = tuple(raw["int_range"])
    raw["float_range"] = tuple(raw["float_range"])
    return GenLimits(**raw)


# ---------------------------------------------------------------------------
# Campaign loop


def _fresh_query(rng, schema, freq, caps, config) -> qa.Query:
    last_error: Exception | None = None
    for _ in range(FRESH_QUERY_RETRIES):
        try:
            n_clauses = rng.randint(config.min_len, config.max_len)
            skeleton = generate_skeleton(rng, n_clauses, caps)
            return fill_skeleton(
                skeleton,
                schema,
                freq,
                rng,
                limits=config.limits,
                max_depth=config.expression_depth,
            )
        except (CompletionError, GenerationError) as exc:
            last_error = exc
    raise CompletionError(f"fresh generation kept failing: {last_error}")


def run_campaign(
    config: CampaignConfig, targets: list[EngineTarget] | None = None
) -> CampaignResult:
    """Run the full campaign loop and write reports under the out dir."""
    config.validate()
    if targets is None:
        targets = [parse_target(d, row_limit=config.row_limit) for d in config.targets]
    labels = [t.label for t in targets]
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate target labels; give each instance a unique descriptor")
    caps = EngineCaps.intersect([t.caps for t in targets])
    out_dir = Path(config.out_dir) if config.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    started = time.monotonic()
    bugs: list[BugReport] = []
    executed: list[ExecutedQuery] = []
    setup_failures = 0
    iteration = 0
    stop = False

    while not stop:
        if config.iterations is not None and iteration >= config.iterations:
            break
        if time.monotonic() - started >= config.timeout:
            break
        child_seed = derive_child_seed(config.seed, iteration)
        try:
            schema, graph, indexes = build_database(
                child_seed, config.limits, config.index_count
            )
        except GenerationError:
            setup_failures += 1
            iteration += 1
            continue
        try:
            for target in targets:
                setup_target(target, schema, graph, indexes)
        except SetupError:
            setup_failures += 1
            iteration += 1
            continue

        query_rng = random.Random(f"{child_seed}/queries")
        pool = QueryPool(config.pool_capacity, (config.retention_min, config.retention_max))
        freq = FrequencyList.zero(schema)
        corpus_lines: list[str] = []

        for query_index in range(config.num_generated + config.num_mutated):
            if query_index < config.num_generated or len(pool) == 0:
                query = _fresh_query(query_rng, schema, freq, caps, config)
            else:
                query = mutate(
                    pool,
                    schema,
                    freq,
                    query_rng,
                    max_len=config.max_len,
                    limits=config.limits,
                    max_depth=config.expression_depth,
                    caps=caps,
                )
            outcomes = {
                target.label: execute(target, query, config.query_time_limit)
                for target in targets
            }
            if len(targets) >= 2:
                verdict = compare(outcomes, query)
            else:
                verdict = crash_only_verdict(outcomes)
            record = ExecutedQuery(query, outcomes)
            executed.append(record)
            corpus_lines.append(qa.render(query))

            if verdict.is_bug:
                report = BugReport(
                    index=len(bugs),
                    iteration=iteration,
                    query_index=query_index,
                    verdict=verdict,
                    query=query,
                    outcomes=outcomes,
                    target_labels=labels,
                    seed=config.seed,
                    child_seed=child_seed,
                    limits=config.limits,
                    index_count=config.index_count,
                )
                bugs.append(report)
                if out_dir:
                    emit_bug_report(report, out_dir)
                if config.stop_on_first_bug:
                    stop = True
                    break

            non_empty = record.non_empty()
            pool_admit(pool, query, outcomes)
            if config.frequency_feedback:
                freq = update_frequencies(freq, query, non_empty=non_empty)
            if time.monotonic() - started >= config.timeout:
                stop = True
                break

        if out_dir and config.save_corpus:
            corpus_dir = out_dir / "corpus"
            corpus_dir.mkdir(exist_ok=True)
            (corpus_dir / f"iter-{iteration:04d}.cypher").write_text(
                "\n".join(corpus_lines) + "\n", encoding="utf-8"
            )
            (corpus_dir / f"iter-{iteration:04d}.graph.json").write_text(
                graph_to_json(graph), encoding="utf-8"
            )
        iteration += 1

    if iteration > 0 and setup_failures == iteration:
        raise SetupError("every campaign iteration failed during setup")

    metrics = _build_metrics(executed, config)
    result = CampaignResult(
        bugs=bugs,
        metrics=metrics,
        iterations_run=iteration,
        executed=executed,
        out_dir=out_dir,
        setup_failures=setup_failures,
    )
    if out_dir:
        _write_reports(result, config)
    return result


def _build_metrics(executed: list[ExecutedQuery], config: CampaignConfig) -> MetricsReport:
    if not executed:
        return MetricsReport(queries_total=0)
    corpus = [e.query for e in executed]
    coverage = grammar_coverage(corpus)
    return MetricsReport(
        queries_total=len(executed),
        semantic_validity_rate=semantic_validity_rate(executed),
        grammar_coverage=coverage.fraction,
        covered_productions=len(coverage.covered),
        registry_size=coverage.registry_size,
        non_empty_rate=non_empty_rate(executed, designated=config.non_empty_designation),
        non_empty_by_length=non_empty_rate(
            executed, by_length=True, designated=config.non_empty_designation
        ),
    )


def summary_dict(result: CampaignResult, config: CampaignConfig) -> dict:
    verdict_counts: dict[str, int] = {}
    for bug in result.bugs:
        verdict_counts[bug.verdict.kind.value] = (
            verdict_counts.get(bug.verdict.kind.value, 0) + 1
        )
    return {
        "metrics": result.metrics.to_dict(),
        "campaign": {
            "seed": config.seed,
            "targets": config.targets,
            "iterations_run": result.iterations_run,
            "setup_failures": result.setup_failures,
            "bugs_found": len(result.bugs),
            "bug_verdicts": dict(sorted(verdict_counts.items())),
            "toolkit_version": __version__,
        },
    }


def _write_reports(result: CampaignResult, config: CampaignConfig) -> None:
    from .report import write_metrics_csv, write_figures

    summary = summary_dict(result, config)
    (result.out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_metrics_csv(result.metrics, result.out_dir / "metrics.csv")
    curve = coverage_curve([e.query for e in result.executed]) if result.executed else []
    write_figures(result.metrics, curve, result.out_dir / "figures")


# ---------------------------------------------------------------------------
# Graph JSON (corpus sidecar used by the metrics command)


def graph_to_json(graph: PropertyGraph) -> str:
    schema = graph.schema
    payload = {
        "schema": {
            "labels": [
                {"name": lab.name, "keys": [[k.name, k.kind.value] for k in lab.keys]}
                for lab in schema.labels
            ],
            "rel_types": [
                {
                    "name": rt.name,
                    "pairs": [list(p) for p in rt.pairs],
                    "keys": [[k.name, k.kind.value] for k in rt.keys],
                }
                for rt in schema.rel_types
            ],
        },
        "nodes": [
            {"id": n.id, "labels": list(n.labels), "properties": n.properties}
            for n in graph.nodes
        ],
        "relationships": [
            {
                "id": r.id,
                "type": r.rel_type,
                "source": r.source,
                "target": r.target,
                "properties": r.properties,
            }
            for r in graph.relationships
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def graph_from_json(text: str) -> PropertyGraph:
    from .model import Kind, LabelDef, PropertyKeyDef, RelTypeDef

    payload = json.loads(text)
    schema = GraphSchema(
        labels=tuple(
            LabelDef(
                lab["name"],
                tuple(PropertyKeyDef(n, Kind(k)) for n, k in lab["keys"]),
            )
            for lab in payload["schema"]["labels"]
        ),
        rel_types=tuple(
            RelTypeDef(
                rt["name"],
                tuple((a, b) for a, b in rt["pairs"]),
                tuple(PropertyKeyDef(n, Kind(k)) for n, k in rt["keys"]),
            )
            for rt in payload["schema"]["rel_types"]
        ),
    )
    nodes = tuple(
        Node(n["id"], tuple(n["labels"]), dict(n["properties"]))
        for n in payload["nodes"]
    )
    rels = tuple(
        Relationship(r["id"], r["type"], r["source"], r["target"], dict(r["properties"]))
        for r in payload["relationships"]
    )
    return PropertyGraph(schema, nodes, rels)


# ---------------------------------------------------------------------------
# Replay


@dataclass
class ReplayResult:
    recorded: str
    verdict: Verdict
    reproduced: bool


def replay_bundle(
    bundle_dir: str | Path, target_descriptors: list[str] | None = None
) -> ReplayResult:
    """Re-execute a bundle's query on its targets and compare verdict kinds."""
    bundle = Path(bundle_dir)
    manifest = json.loads((bundle / "manifest.json").read_text(encoding="utf-8"))
    limits = _limits_from_dict(manifest["gen_limits"])
    schema, graph, indexes = build_database(
        manifest["child_seed"], limits, manifest["index_count"]
    )
    descriptors = target_descriptors or manifest["targets"]
    targets = [parse_target(d) for d in descriptors]
    for target in targets:
        setup_target(target, schema, graph, indexes)
    query = parse_query((bundle / "query.cypher").read_text(encoding="utf-8").strip())
    problems = validate_semantics(query, schema)
    if problems:
        raise ValueError(f"bundle query fails validation: {problems}")
    outcomes = {t.label: execute(t, query) for t in targets}
    if len(targets) >= 2:
        verdict = compare(outcomes, query)
    else:
        verdict = crash_only_verdict(outcomes)
    recorded = manifest["verdict"]["kind"]
    return ReplayResult(
        recorded=recorded,
        verdict=verdict,
        reproduced=verdict.kind.value == recorded,
    )

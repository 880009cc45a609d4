"""Command-line interface: fuzz, replay, reduce, and metrics."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from . import query_ast as qa
from .campaign import (
    BugReport,
    CampaignConfig,
    build_database,
    emit_bug_report,
    graph_from_json,
    render_outcomes_json,
    replay_bundle,
    run_campaign,
    summary_dict,
)
from .contexts import validate_semantics
from .errors import ConfigError, GenerationError, SetupError
from .metrics import (
    ExecutedQuery,
    MetricsReport,
    coverage_curve,
    grammar_coverage,
    non_empty_rate,
    semantic_validity_rate,
)
from .parser import ParseError, parse_query
from .reduce import reduce_query
from .targets import execute, parse_target, setup_target

EXIT_OK = 0
EXIT_BUGS = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cypherfuzz",
        description="Differential testing of Cypher graph database engines",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fuzz = sub.add_parser("fuzz", help="run a fuzzing campaign")
    fuzz.add_argument("--config", help="JSON config file with campaign settings")
    fuzz.add_argument("--seed", help="campaign seed")
    fuzz.add_argument("--timeout", type=float, help="campaign budget in seconds")
    fuzz.add_argument("--iterations", type=int, help="maximum outer iterations")
    fuzz.add_argument("--num-generated", type=int, help="fresh queries per graph")
    fuzz.add_argument("--num-mutated", type=int, help="mutated queries per graph")
    fuzz.add_argument("--min-len", type=int, help="minimum clauses per query")
    fuzz.add_argument("--max-len", type=int, help="maximum clauses per query")
    fuzz.add_argument("--stop-on-first-bug", action="store_true", default=None)
    fuzz.add_argument("--targets", help="comma-separated target descriptors")
    fuzz.add_argument("--out", help="output directory for bundles and reports")
    fuzz.add_argument("--save-corpus", action="store_true", default=None)
    fuzz.add_argument("--nodes", type=int, help="nodes per generated graph")
    fuzz.add_argument("--relationships", type=int, help="relationships per graph")
    fuzz.add_argument("--indexes", type=int, help="random indexes per graph")

    replay = sub.add_parser("replay", help="re-run a bug bundle and check its verdict")
    replay.add_argument("bundle", help="bundle directory (NNNN)")
    replay.add_argument("--targets", help="override target descriptors")

    reduce = sub.add_parser("reduce", help="minimize a bug bundle's query")
    reduce.add_argument("bundle", help="bundle directory (NNNN)")
    reduce.add_argument("--targets", help="override target descriptors")

    metrics = sub.add_parser("metrics", help="compute metrics over a saved corpus")
    metrics.add_argument("corpus", help="corpus directory (iter-*.cypher files)")
    metrics.add_argument("--out", help="report directory (default: <corpus>/report)")
    return parser


def _fuzz_config(args) -> CampaignConfig:
    if args.config:
        config = CampaignConfig.from_file(args.config)
    else:
        config = CampaignConfig()
    overrides = {
        "seed": args.seed,
        "timeout": args.timeout,
        "iterations": args.iterations,
        "num_generated": args.num_generated,
        "num_mutated": args.num_mutated,
        "min_len": args.min_len,
        "max_len": args.max_len,
        "stop_on_first_bug": args.stop_on_first_bug,
        "out_dir": args.out,
        "save_corpus": args.save_corpus,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    if args.targets:
        config.targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    limit_overrides = {}
    if args.nodes is not None:
        limit_overrides["node_count"] = args.nodes
    if args.relationships is not None:
        limit_overrides["relationship_count"] = args.relationships
    if limit_overrides:
        config.limits = dataclasses.replace(config.limits, **limit_overrides)
    if args.indexes is not None:
        config.index_count = args.indexes
    config.validate()
    return config


def _cmd_fuzz(args) -> int:
    try:
        config = _fuzz_config(args)
        result = run_campaign(config)
    except (ConfigError, SetupError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = summary_dict(result, config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    for bug in result.bugs:
        print(f"bug {bug.index:04d}: {bug.verdict.kind.value} — {bug.verdict.reason}")
    if result.out_dir:
        print(f"reports written to {result.out_dir}")
    return EXIT_BUGS if result.bugs else EXIT_OK


def _cmd_replay(args) -> int:
    descriptors = (
        [t.strip() for t in args.targets.split(",") if t.strip()]
        if args.targets
        else None
    )
    try:
        outcome = replay_bundle(args.bundle, descriptors)
    except (ConfigError, SetupError, FileNotFoundError, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"recorded verdict: {outcome.recorded}")
    print(f"replayed verdict: {outcome.verdict.kind.value} — {outcome.verdict.reason}")
    if outcome.reproduced:
        print("verdict reproduced")
        return EXIT_OK
    print("verdict NOT reproduced")
    return EXIT_BUGS


def _cmd_reduce(args) -> int:
    bundle = Path(args.bundle)
    try:
        manifest = json.loads((bundle / "manifest.json").read_text(encoding="utf-8"))
        from .campaign import _limits_from_dict  # shared manifest schema

        limits = _limits_from_dict(manifest["gen_limits"])
        schema, graph, indexes = build_database(
            manifest["child_seed"], limits, manifest["index_count"]
        )
        descriptors = (
            [t.strip() for t in args.targets.split(",") if t.strip()]
            if args.targets
            else manifest["targets"]
        )
        targets = [parse_target(d) for d in descriptors]
        for target in targets:
            setup_target(target, schema, graph, indexes)
        query = parse_query((bundle / "query.cypher").read_text(encoding="utf-8").strip())
    except (ConfigError, SetupError, FileNotFoundError, ParseError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    reduced, verdict, reproduced = reduce_query(query, schema, targets)
    if not reproduced:
        print("verdict not reproducible on these targets; keeping the original query")
        return EXIT_BUGS
    original_path = bundle / "query.original.cypher"
    if not original_path.exists():
        original_path.write_text(qa.render(query) + "\n", encoding="utf-8")
    (bundle / "query.cypher").write_text(qa.render(reduced) + "\n", encoding="utf-8")
    outcomes = {t.label: execute(t, reduced) for t in targets}
    (bundle / "outcomes.json").write_text(render_outcomes_json(outcomes), encoding="utf-8")
    print(qa.render(reduced))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    corpus_dir = Path(args.corpus)
    query_files = sorted(corpus_dir.glob("iter-*.cypher"))
    if not query_files:
        print(f"error: no iter-*.cypher files under {corpus_dir}", file=sys.stderr)
        return EXIT_CONFIG

    executed: list[ExecutedQuery] = []
    queries = []
    parse_failures = 0
    for query_file in query_files:
        graph_file = query_file.with_name(query_file.stem + ".graph.json")
        graph = None
        if graph_file.exists():
            graph = graph_from_json(graph_file.read_text(encoding="utf-8"))
        target = None
        if graph is not None:
            target = parse_target("reference")
            target.setup(graph.schema, graph, [])
        for line in query_file.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                query = parse_query(line)
            except ParseError:
                parse_failures += 1
                continue
            queries.append(query)
            outcomes = {}
            if target is not None:
                outcomes["reference"] = execute(target, query)
            executed.append(ExecutedQuery(query, outcomes))

    if not queries:
        print("error: corpus contained no parseable queries", file=sys.stderr)
        return EXIT_CONFIG

    coverage = grammar_coverage(queries)
    have_outcomes = any(e.outcomes for e in executed)
    report = MetricsReport(
        queries_total=len(queries),
        semantic_validity_rate=semantic_validity_rate(executed) if have_outcomes else None,
        grammar_coverage=coverage.fraction,
        covered_productions=len(coverage.covered),
        registry_size=coverage.registry_size,
        non_empty_rate=non_empty_rate(executed) if have_outcomes else None,
        non_empty_by_length=(
            non_empty_rate(executed, by_length=True) if have_outcomes else {}
        ),
    )
    out_dir = Path(args.out) if args.out else corpus_dir / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    from .report import write_figures, write_metrics_csv

    write_metrics_csv(report, out_dir / "metrics.csv")
    write_figures(report, coverage_curve(queries), out_dir / "figures")
    payload = report.to_dict()
    payload["parse_failures"] = parse_failures
    (out_dir / "summary.json").write_text(
        json.dumps({"metrics": payload}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(json.dumps(payload, indent=2, sort_keys=True))
    print(f"reports written to {out_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "fuzz":
        return _cmd_fuzz(args)
    if args.command == "replay":
        return _cmd_replay(args)
    if args.command == "reduce":
        return _cmd_reduce(args)
    if args.command == "metrics":
        return _cmd_metrics(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

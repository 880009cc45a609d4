"""Campaign quality metrics: validity, grammar coverage, non-empty rate,
and the graph mutation score."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from . import query_ast as qa
from .executor import ExecOutcome, OutcomeKind, reference_eval
from .generate import GraphMutant
from .model import PropertyGraph
from .oracle import result_set_equal
from .productions import REGISTRY, productions_covered


@dataclass
class ExecutedQuery:
    """One executed query with its per-target outcomes."""

    query: qa.Query
    outcomes: dict[str, ExecOutcome] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return qa.clause_count(self.query)

    def rejected(self) -> bool:
        return any(
            o.kind == OutcomeKind.SEMANTIC_REJECTION for o in self.outcomes.values()
        )

    def non_empty(self, designated: str | None = None) -> bool:
        if designated is not None:
            outcome = self.outcomes.get(designated)
            return outcome.non_empty if outcome else False
        return any(o.non_empty for o in self.outcomes.values())


@dataclass
class CoverageResult:
    covered: set[str]
    registry_size: int

    @property
    def fraction(self) -> float:
        return len(self.covered) / self.registry_size


@dataclass
class MetricsReport:
    queries_total: int
    semantic_validity_rate: float | None = None
    grammar_coverage: float | None = None
    covered_productions: int | None = None
    registry_size: int = len(REGISTRY)
    non_empty_rate: float | None = None
    non_empty_by_length: dict[int, float] = field(default_factory=dict)
    graph_mutation_score: int | None = None

    def to_dict(self) -> dict:
        return {
            "queries_total": self.queries_total,
            "semantic_validity_rate": self.semantic_validity_rate,
            "grammar_coverage": self.grammar_coverage,
            "covered_productions": self.covered_productions,
            "registry_size": self.registry_size,
            "non_empty_rate": self.non_empty_rate,
            "non_empty_by_length": {
                str(k): v for k, v in sorted(self.non_empty_by_length.items())
            },
            "graph_mutation_score": self.graph_mutation_score,
        }


def semantic_validity_rate(executed: Sequence[ExecutedQuery]) -> float:
    """Fraction of queries with no semantic rejection on any target."""
    if not executed:
        raise ValueError("metric undefined over an empty corpus")
    valid = sum(1 for e in executed if not e.rejected())
    return valid / len(executed)


def grammar_coverage(corpus: Sequence[qa.Query]) -> CoverageResult:
    if not corpus:
        raise ValueError("metric undefined over an empty corpus")
    covered: set[str] = set()
    for query in corpus:
        covered |= productions_covered(query)
    return CoverageResult(covered, len(REGISTRY))


def coverage_curve(corpus: Sequence[qa.Query], points: int = 50) -> list[tuple[int, float]]:
    """Cumulative coverage over corpus prefixes, sampled at up to `points`."""
    if not corpus:
        return []
    step = max(1, len(corpus) // points)
    covered: set[str] = set()
    curve = []
    for i, query in enumerate(corpus, start=1):
        covered |= productions_covered(query)
        if i % step == 0 or i == len(corpus):
            curve.append((i, len(covered) / len(REGISTRY)))
    return curve


def non_empty_rate(
    executed: Sequence[ExecutedQuery],
    by_length: bool = False,
    designated: str | None = None,
) -> float | dict[int, float]:
    """Fraction of queries whose designated target (any target when None)
    returned at least one row; optionally grouped by clause count."""
    if not by_length:
        if not executed:
            return 0.0
        hits = sum(1 for e in executed if e.non_empty(designated))
        return hits / len(executed)
    buckets: dict[int, list[bool]] = {}
    for e in executed:
        buckets.setdefault(e.length, []).append(e.non_empty(designated))
    return {
        length: sum(flags) / len(flags) for length, flags in sorted(buckets.items())
    }


def graph_mutation_score(
    queries: Sequence[qa.Query],
    base: PropertyGraph,
    mutants: Sequence[GraphMutant],
    evaluator: Callable[[PropertyGraph, qa.Query], ExecOutcome] | None = None,
) -> int:
    """Number of distinct non-empty kill-sets across the queries.

    A query's kill-set is the set of mutants on which it returns results
    different from the base graph; duplicated kill-sets count once.
    Removing a property can only influence queries that mention its key
    (result cells compare entities by identity), so other pairs are
    skipped without evaluation.
    """
    evaluate = evaluator or (lambda graph, query: reference_eval(graph, query))
    mutant_graphs = [m.graph() for m in mutants]
    kill_sets: set[frozenset[int]] = set()
    for query in queries:
        mentioned = set(qa.query_property_keys(query))
        touched = [
            i for i, m in enumerate(mutants) if m.removed[2] in mentioned
        ]
        if not touched:
            continue
        base_outcome = evaluate(base, query)
        killed = set()
        for index in touched:
            mutant_outcome = evaluate(mutant_graphs[index], query)
            if _outcomes_differ(base_outcome, mutant_outcome):
                killed.add(index)
        if killed:
            kill_sets.add(frozenset(killed))
    return len(kill_sets)


def _outcomes_differ(a: ExecOutcome, b: ExecOutcome) -> bool:
    if a.kind != b.kind:
        return True
    if a.kind != OutcomeKind.SUCCESS:
        return False
    return not result_set_equal(a.result, b.result)

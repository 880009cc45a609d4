"""Greedy delta reduction of bug-triggering queries.

Repeatedly tries dropping clauses, WHERE sub-clauses, return items, and
pattern elements; a candidate is kept iff it stays semantically valid
and the bug verdict persists. The fixpoint is 1-minimal with respect to
these deletions.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Iterator

from . import query_ast as qa
from .contexts import validate_semantics
from .model import GraphSchema
from .oracle import Verdict, VerdictKind, compare, crash_only_verdict
from .targets import EngineTarget, execute


def _verdict(query: qa.Query, targets: list[EngineTarget], time_limit: float | None) -> Verdict:
    outcomes = {t.label: execute(t, query, time_limit) for t in targets}
    if len(targets) >= 2:
        return compare(outcomes, query)
    return crash_only_verdict(outcomes)


def _candidates(query: qa.Query) -> Iterator[qa.Query]:
    clauses = query.clauses
    # drop a whole clause (never the final RETURN)
    for i in range(len(clauses) - 1):
        yield qa.Query(clauses[:i] + clauses[i + 1:])
    # drop one WHERE sub-clause
    for i, clause in enumerate(clauses):
        if isinstance(clause, (qa.Match, qa.With)) and clause.where is not None:
            yield qa.Query(clauses[:i] + (replace(clause, where=None),) + clauses[i + 1:])
    # drop one return/with item
    for i, clause in enumerate(clauses):
        if isinstance(clause, (qa.With, qa.Return)) and len(clause.items) > 1:
            for j in range(len(clause.items)):
                items = clause.items[:j] + clause.items[j + 1:]
                if isinstance(clause, qa.Return) and clause.order_by:
                    trimmed = replace(
                        clause,
                        items=items,
                        order_by=tuple(
                            k for k in clause.order_by
                            if not _mentions_alias(k.expr, clause.items[j].alias)
                        ),
                    )
                    if not trimmed.order_by:
                        trimmed = replace(trimmed, order_by=(), skip=None, limit=None)
                else:
                    trimmed = replace(clause, items=items)
                yield qa.Query(clauses[:i] + (trimmed,) + clauses[i + 1:])
    # drop one pattern from a tuple, or shorten a chain
    for i, clause in enumerate(clauses):
        if not isinstance(clause, qa.Match):
            continue
        if len(clause.patterns) > 1:
            for j in range(len(clause.patterns)):
                patterns = clause.patterns[:j] + clause.patterns[j + 1:]
                yield qa.Query(
                    clauses[:i] + (replace(clause, patterns=patterns),) + clauses[i + 1:]
                )
        for j, pattern in enumerate(clause.patterns):
            if len(pattern.elements) <= 1:
                continue
            for shorter in (
                qa.Pattern(pattern.elements[:-2]),  # drop trailing rel+node
                qa.Pattern(pattern.elements[2:]),  # drop leading node+rel
            ):
                patterns = clause.patterns[:j] + (shorter,) + clause.patterns[j + 1:]
                yield qa.Query(
                    clauses[:i] + (replace(clause, patterns=patterns),) + clauses[i + 1:]
                )


def _mentions_alias(expr: qa.Expr, alias: str | None) -> bool:
    if alias is None:
        return False
    return any(
        isinstance(sub, qa.VarRef) and sub.name == alias for sub in qa.walk_expr(expr)
    )


def reduce_query(
    query: qa.Query,
    schema: GraphSchema,
    targets: list[EngineTarget],
    *,
    time_limit: float | None = None,
) -> tuple[qa.Query, Verdict, bool]:
    """Minimize a bug-triggering query while the verdict kind persists.

    Returns (reduced query, final verdict, reproduced). When the original
    verdict is not a bug on these targets, reduction is skipped and the
    original query is returned unchanged.
    """
    baseline = _verdict(query, targets, time_limit)
    if not baseline.is_bug:
        return query, baseline, False
    wanted: VerdictKind = baseline.kind

    current = query
    improved = True
    while improved:
        improved = False
        for candidate in _candidates(current):
            if qa.check_well_formed(candidate):
                continue
            if validate_semantics(candidate, schema):
                continue
            verdict = _verdict(candidate, targets, time_limit)
            if verdict.kind == wanted:
                current = candidate
                improved = True
                break
    return current, _verdict(current, targets, time_limit), True

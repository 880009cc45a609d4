"""Query pool and the three structural mutation strategies.

Queries that returned non-empty results are retained and later mutated:
the final RETURN can be delayed behind a WITH and new clauses appended,
an inner WITH can be promoted to the final RETURN, or WHERE sub-clauses
can be dropped. All three preserve semantic validity and raise the odds
of non-empty results.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import replace
from typing import Mapping

from . import query_ast as qa
from .completion import FrequencyList, NameState, fill_skeleton
from .contexts import ClauseContext, calculate_new_context
from .executor import ExecOutcome
from .generate import GenLimits
from .model import GraphSchema
from .skeleton import EngineCaps, generate_skeleton

DEFAULT_POOL_CAPACITY = 256
DEFAULT_RETENTION = (3, 6)

STRATEGIES = ("delay_return", "advance_return", "remove_condition")


class EmptyPoolError(RuntimeError):
    """No retained query to mutate; callers fall back to fresh generation."""


class InapplicableStrategy(RuntimeError):
    """The chosen strategy does not apply to the selected query."""


class QueryPool:
    """Bounded FIFO pool of retained queries within the retention length range."""

    def __init__(
        self,
        capacity: int = DEFAULT_POOL_CAPACITY,
        retention: tuple[int, int] = DEFAULT_RETENTION,
    ):
        self.capacity = capacity
        self.retention = retention
        self._entries: deque[qa.Query] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    def queries(self) -> list[qa.Query]:
        return list(self._entries)

    def admit(self, query: qa.Query, non_empty: bool) -> bool:
        low, high = self.retention
        if not non_empty or not low <= qa.clause_count(query) <= high:
            return False
        self._entries.append(query)
        return True

    def choose(self, rng: random.Random) -> qa.Query:
        if not self._entries:
            raise EmptyPoolError("query pool is empty")
        return self._entries[rng.randrange(len(self._entries))]


def pool_admit(
    pool: QueryPool,
    query: qa.Query,
    outcome: ExecOutcome | Mapping[str, ExecOutcome],
) -> bool:
    """Retain a query iff some target returned at least one row and its
    clause count lies within the retention range."""
    if isinstance(outcome, ExecOutcome):
        non_empty = outcome.non_empty
    else:
        non_empty = any(o.non_empty for o in outcome.values())
    return pool.admit(query, non_empty)


# ---------------------------------------------------------------------------
# Strategies


def delay_return(
    query: qa.Query,
    schema: GraphSchema,
    freq: FrequencyList | None,
    rng: random.Random,
    *,
    max_len: int = 6,
    limits: GenLimits | None = None,
    max_depth: int = 3,
    caps: EngineCaps | None = None,
) -> qa.Query:
    """Turn the final RETURN into a WITH and complete a fresh suffix.

    The appended suffix (ending in a new RETURN) is completed with the
    original end-of-query context as its initial context.
    """
    final = query.clauses[-1]
    if not isinstance(final, qa.Return):
        raise InapplicableStrategy("query does not end in RETURN")
    items = tuple(
        item if item.alias is not None else replace(item, alias=f"a{1000 + i}")
        for i, item in enumerate(final.items)
    )
    with_clause = qa.With(items)
    prefix = query.clauses[:-1] + (with_clause,)

    ctx = ClauseContext()
    for clause in prefix:
        ctx = calculate_new_context(clause, ctx, schema)

    names = NameState.continuing(query)
    appended = rng.randint(1, max(1, max_len - len(query.clauses) + 1))
    suffix_skeleton = generate_skeleton(rng, appended, caps)
    suffix = fill_skeleton(
        suffix_skeleton,
        schema,
        freq,
        rng,
        initial_ctx=ctx,
        names=names,
        limits=limits,
        max_depth=max_depth,
    )
    return qa.Query(prefix + suffix.clauses)


def advance_return(query: qa.Query, rng: random.Random) -> qa.Query:
    """Promote a random WITH to the final RETURN, dropping what follows.

    Any WHERE attached to the promoted WITH is removed.
    """
    positions = [
        i for i, clause in enumerate(query.clauses) if isinstance(clause, qa.With)
    ]
    if not positions:
        raise InapplicableStrategy("query has no WITH clause")
    index = positions[rng.randrange(len(positions))]
    promoted: qa.With = query.clauses[index]
    new_return = qa.Return(items=promoted.items)
    return qa.Query(query.clauses[:index] + (new_return,))


def remove_condition(query: qa.Query, rng: random.Random) -> qa.Query:
    """Drop a non-empty random subset of WHERE sub-clauses."""
    positions = [
        i
        for i, clause in enumerate(query.clauses)
        if isinstance(clause, (qa.Match, qa.With)) and clause.where is not None
    ]
    if not positions:
        raise InapplicableStrategy("query has no WHERE sub-clause")
    count = rng.randint(1, len(positions))
    chosen = set(rng.sample(positions, count))
    clauses = list(query.clauses)
    for index in chosen:
        clauses[index] = replace(clauses[index], where=None)
    return qa.Query(tuple(clauses))


def applicable_strategies(query: qa.Query) -> list[str]:
    out = ["delay_return"]
    if any(isinstance(c, qa.With) for c in query.clauses):
        out.append("advance_return")
    if any(
        isinstance(c, (qa.Match, qa.With)) and c.where is not None
        for c in query.clauses
    ):
        out.append("remove_condition")
    return out


def mutate(
    pool: QueryPool,
    schema: GraphSchema,
    freq: FrequencyList | None,
    rng: random.Random,
    *,
    max_len: int = 6,
    limits: GenLimits | None = None,
    max_depth: int = 3,
    caps: EngineCaps | None = None,
) -> qa.Query:
    """Apply one uniformly chosen applicable strategy to a pooled query."""
    source = pool.choose(rng)
    strategy = rng.choice(applicable_strategies(source))
    if strategy == "delay_return":
        return delay_return(
            source, schema, freq, rng,
            max_len=max_len, limits=limits, max_depth=max_depth, caps=caps,
        )
    if strategy == "advance_return":
        return advance_return(source, rng)
    return remove_condition(source, rng)

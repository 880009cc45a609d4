from __future__ import annotations

import random
from collections import Counter

import pytest

from cypherfuzz import query_ast as qa
from cypherfuzz.completion import FrequencyList, fill_skeleton
from cypherfuzz.contexts import validate_semantics
from cypherfuzz.executor import ExecOutcome, ResultSet
from cypherfuzz.mutation import (
    EmptyPoolError,
    InapplicableStrategy,
    QueryPool,
    advance_return,
    applicable_strategies,
    delay_return,
    mutate,
    pool_admit,
    remove_condition,
)
from cypherfuzz.parser import parse_query
from cypherfuzz.skeleton import generate_skeleton, skeleton_of


def non_empty_outcome():
    return ExecOutcome.success(ResultSet(("a",), [(1,)]))

def empty_outcome():
    return ExecOutcome.success(ResultSet(("a",), []))


class TestPool:
    def test_empty_result_not_admitted(self):
        pool = QueryPool()
        query = parse_query("MATCH (n) WITH n AS m RETURN 1 AS a;")
        assert not pool_admit(pool, query, empty_outcome())
        assert len(pool) == 0

    def test_non_empty_within_range_admitted(self):
        pool = QueryPool(retention=(3, 6))
        query = parse_query("MATCH (n) WITH n AS m RETURN 1 AS a;")
        assert pool_admit(pool, query, non_empty_outcome())
        assert len(pool) == 1

    def test_out_of_range_length_not_admitted(self):
        pool = QueryPool(retention=(3, 6))
        query = parse_query("RETURN 1 AS a;")
        assert not pool_admit(pool, query, non_empty_outcome())

    def test_any_target_counts(self):
        pool = QueryPool()
        query = parse_query("MATCH (n) WITH n AS m RETURN 1 AS a;")
        outcomes = {"x": empty_outcome(), "y": non_empty_outcome()}
        assert pool_admit(pool, query, outcomes)

    def test_fifo_eviction(self):
        pool = QueryPool(capacity=2)
        queries = [
            parse_query(f"MATCH (n) WITH n AS m RETURN {i} AS a;") for i in range(3)
        ]
        for query in queries:
            pool_admit(pool, query, non_empty_outcome())
        assert len(pool) == 2
        assert queries[0] not in pool.queries()

    def test_choose_from_empty_pool(self):
        with pytest.raises(EmptyPoolError):
            QueryPool().choose(random.Random(0))


class TestDelayReturn:
    def test_paper_example_shape(self, tiny_schema):
        query = parse_query("MATCH (n:L) RETURN n.k AS a;")
        rng = random.Random(0)
        freq = FrequencyList.zero(tiny_schema)
        mutant = delay_return(query, tiny_schema, freq, rng, max_len=6)
        # prefix preserved, RETURN became WITH with identical items
        assert isinstance(mutant.clauses[0], qa.Match)
        assert mutant.clauses[0] == query.clauses[0]
        assert isinstance(mutant.clauses[1], qa.With)
        assert mutant.clauses[1].items == query.clauses[1].items
        assert isinstance(mutant.clauses[-1], qa.Return)
        assert qa.clause_count(mutant) > qa.clause_count(query)
        assert validate_semantics(mutant, tiny_schema) == []

    def test_return_only_base_case(self, tiny_schema):
        query = parse_query("RETURN 1 AS a;")
        mutant = delay_return(
            query, tiny_schema, FrequencyList.zero(tiny_schema), random.Random(1)
        )
        assert qa.render(mutant).startswith("WITH 1 AS a ")
        assert validate_semantics(mutant, tiny_schema) == []

    def test_length_stays_bounded(self, tiny_schema):
        query = parse_query("MATCH (n:L) RETURN n.k AS a;")
        freq = FrequencyList.zero(tiny_schema)
        rng = random.Random(2)
        for _ in range(50):
            mutant = delay_return(query, tiny_schema, freq, rng, max_len=6)
            assert qa.clause_count(mutant) <= 7


class TestAdvanceReturn:
    def test_paper_example(self):
        query = parse_query("MATCH (n)-->(m) WITH m.k AS a RETURN max(a) AS b;")
        mutant = advance_return(query, random.Random(0))
        assert qa.render(mutant) == "MATCH (n)-->(m) RETURN m.k AS a;"

    def test_where_is_dropped(self):
        query = parse_query("MATCH (n) WITH n.k AS a WHERE a > 0 RETURN a;")
        mutant = advance_return(query, random.Random(0))
        assert qa.render(mutant) == "MATCH (n) RETURN n.k AS a;"

    def test_shorter_than_input(self):
        query = parse_query(
            "MATCH (n) WITH n.k AS a WITH a AS b UNWIND [1] AS c RETURN b;"
        )
        rng = random.Random(3)
        for _ in range(20):
            mutant = advance_return(query, rng)
            assert qa.clause_count(mutant) < qa.clause_count(query)

    def test_inapplicable_without_with(self):
        query = parse_query("MATCH (n) RETURN n.k AS a;")
        with pytest.raises(InapplicableStrategy):
            advance_return(query, random.Random(0))


class TestRemoveCondition:
    def test_paper_example(self):
        query = parse_query("MATCH (n)--(m) WHERE m.k > 0 RETURN n.k AS a;")
        mutant = remove_condition(query, random.Random(0))
        assert qa.render(mutant) == "MATCH (n)--(m) RETURN n.k AS a;"

    def test_non_empty_subset_removed(self):
        query = parse_query(
            "MATCH (n) WHERE n.k > 0 WITH n.k AS a WHERE a < 9 RETURN a;"
        )
        rng = random.Random(1)
        for _ in range(50):
            mutant = remove_condition(query, rng)
            wheres = sum(
                1
                for c in mutant.clauses
                if isinstance(c, (qa.Match, qa.With)) and c.where is not None
            )
            assert wheres < 2

    def test_inapplicable_without_where(self):
        query = parse_query("MATCH (n) RETURN n.k AS a;")
        with pytest.raises(InapplicableStrategy):
            remove_condition(query, random.Random(0))


class TestMutate:
    def _pool(self, schema, size=30):
        pool = QueryPool(retention=(2, 6))
        rng = random.Random(99)
        freq = FrequencyList.zero(schema)
        while len(pool) < size:
            skeleton = generate_skeleton(rng, rng.randint(3, 5))
            query = fill_skeleton(skeleton, schema, freq, rng)
            pool.admit(query, non_empty=True)
        return pool

    def test_empty_pool_raises(self, tiny_schema):
        with pytest.raises(EmptyPoolError):
            mutate(QueryPool(), tiny_schema, None, random.Random(0))

    def test_outputs_always_valid(self, seeded_schema):
        pool = self._pool(seeded_schema)
        rng = random.Random(5)
        freq = FrequencyList.zero(seeded_schema)
        for _ in range(300):
            mutant = mutate(pool, seeded_schema, freq, rng, max_len=6)
            assert validate_semantics(mutant, seeded_schema) == [], qa.render(mutant)

    def test_strategy_draw_uniform_when_all_applicable(self, tiny_schema):
        # a pooled query with both WITH and WHERE keeps all three applicable
        query = parse_query(
            "MATCH (n:L) WHERE n.k > 0 WITH n.k AS a RETURN max(a) AS b;"
        )
        assert applicable_strategies(query) == [
            "delay_return", "advance_return", "remove_condition",
        ]
        pool = QueryPool(retention=(1, 9))
        pool.admit(query, non_empty=True)
        rng = random.Random(17)
        freq = FrequencyList.zero(tiny_schema)
        counts = Counter()
        base_len = qa.clause_count(query)
        for _ in range(10_000):
            mutant = mutate(pool, tiny_schema, freq, rng, max_len=6)
            if qa.clause_count(mutant) > base_len:
                counts["delay"] += 1
            elif qa.clause_count(mutant) < base_len:
                counts["advance"] += 1
            else:
                counts["remove"] += 1
        for share in counts.values():
            assert abs(share / 10_000 - 1 / 3) < 0.02

    def test_skeleton_changes_per_strategy(self, seeded_schema):
        pool = self._pool(seeded_schema, size=10)
        rng = random.Random(6)
        freq = FrequencyList.zero(seeded_schema)
        for _ in range(100):
            source_count = len(pool.queries())
            mutant = mutate(pool, seeded_schema, freq, rng, max_len=6)
            assert skeleton_of(mutant) is not None  # well-formed skeleton projection
            assert len(pool.queries()) == source_count  # mutate never mutates the pool

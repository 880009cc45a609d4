from __future__ import annotations

import random

import pytest

from cypherfuzz import query_ast as qa
from cypherfuzz.completion import FrequencyList, fill_skeleton
from cypherfuzz.executor import ExecOutcome, ResultSet, reference_eval
from cypherfuzz.generate import GenLimits, GraphMutant, generate_schema
from cypherfuzz.metrics import (
    ExecutedQuery,
    coverage_curve,
    grammar_coverage,
    graph_mutation_score,
    non_empty_rate,
    semantic_validity_rate,
)
from cypherfuzz.model import (
    GraphSchema,
    Kind,
    LabelDef,
    Node,
    PropertyGraph,
    PropertyKeyDef,
)
from cypherfuzz.parser import parse_query
from cypherfuzz.productions import REGISTRY, productions_covered
from cypherfuzz.skeleton import generate_skeleton


def executed(text, rows=None, rejected=False):
    query = parse_query(text)
    if rejected:
        outcome = ExecOutcome.rejection("nope")
    else:
        outcome = ExecOutcome.success(ResultSet(("a",), rows if rows is not None else []))
    return ExecutedQuery(query, {"reference": outcome})


class TestValidityRate:
    def test_all_valid(self):
        corpus = [executed("RETURN 1 AS a;", [(1,)]) for _ in range(10)]
        assert semantic_validity_rate(corpus) == 1.0

    def test_fraction(self):
        corpus = [executed("RETURN 1 AS a;", [(1,)], rejected=i >= 16) for i in range(100)]
        assert semantic_validity_rate(corpus) == pytest.approx(0.16)

    def test_zero(self):
        corpus = [executed("RETURN 1 AS a;", rejected=True) for _ in range(10)]
        assert semantic_validity_rate(corpus) == 0.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            semantic_validity_rate([])


class TestCoverage:
    def test_single_query_productions(self):
        query = parse_query("RETURN 1 AS a;")
        covered = productions_covered(query)
        assert "query:return-final" in covered
        assert "ret:single-item" in covered
        assert "expr:int-literal" in covered
        assert "clause:match" not in covered

    def test_covered_subset_of_registry(self):
        rng = random.Random(0)
        limits = GenLimits()
        schema = generate_schema(rng, limits)
        freq = FrequencyList.zero(schema)
        for _ in range(100):
            query = fill_skeleton(generate_skeleton(rng, rng.randint(1, 6)), schema, freq, rng)
            assert productions_covered(query) <= set(REGISTRY)

    def test_monotone_over_prefixes(self):
        rng = random.Random(1)
        limits = GenLimits()
        schema = generate_schema(rng, limits)
        freq = FrequencyList.zero(schema)
        corpus = [
            fill_skeleton(generate_skeleton(rng, rng.randint(1, 6)), schema, freq, rng)
            for _ in range(200)
        ]
        curve = coverage_curve(corpus, points=20)
        fractions = [f for _, f in curve]
        assert fractions == sorted(fractions)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            grammar_coverage([])


class TestNonEmptyRate:
    def test_all_empty(self):
        corpus = [executed("RETURN 1 AS a;", []) for _ in range(5)]
        assert non_empty_rate(corpus) == 0.0

    def test_by_length(self):
        corpus = [
            executed("RETURN 1 AS a;", [(1,)]),
            executed("MATCH (n) RETURN 1 AS a;", []),
            executed("MATCH (n) RETURN 2 AS a;", [(2,)]),
        ]
        rates = non_empty_rate(corpus, by_length=True)
        assert rates == {1: 1.0, 2: 0.5}

    def test_designated_target(self):
        query = parse_query("RETURN 1 AS a;")
        record = ExecutedQuery(
            query,
            {
                "x": ExecOutcome.success(ResultSet(("a",), [])),
                "y": ExecOutcome.success(ResultSet(("a",), [(1,)])),
            },
        )
        assert non_empty_rate([record]) == 1.0
        assert non_empty_rate([record], designated="x") == 0.0
        assert non_empty_rate([record], designated="y") == 1.0


class TestMutationScore:
    def _setup(self):
        """Three keys on one node; mutants remove k0 / k1 / k2."""
        schema = GraphSchema(
            labels=(
                LabelDef(
                    "L",
                    (
                        PropertyKeyDef("k0", Kind.INTEGER),
                        PropertyKeyDef("k1", Kind.INTEGER),
                        PropertyKeyDef("k2", Kind.INTEGER),
                    ),
                ),
            ),
        )
        base = PropertyGraph(
            schema, (Node(0, ("L",), {"k0": 1, "k1": 2, "k2": 3}),), ()
        )
        mutants = [
            GraphMutant(base, ("node", 0, "k0")),
            GraphMutant(base, ("node", 0, "k1")),
            GraphMutant(base, ("node", 0, "k2")),
        ]
        return base, mutants

    def test_worked_example_boxes_score_two(self):
        base, mutants = self._setup()
        # q1 touches k0 and k1 -> kills {m0, m1}
        q1 = parse_query("MATCH (n:L) RETURN n.k0 + n.k1 AS a;")
        # q2 and q3 touch k0 and k2 -> both kill {m0, m2}
        q2 = parse_query("MATCH (n:L) RETURN n.k0 + n.k2 AS a;")
        q3 = parse_query("MATCH (n:L) RETURN n.k2 + n.k0 AS a;")
        assert graph_mutation_score([q1, q2, q3], base, mutants) == 2

    def test_no_kills(self):
        base, mutants = self._setup()
        query = parse_query("MATCH (n:L) RETURN 1 AS a;")
        assert graph_mutation_score([query], base, mutants) == 0

    def test_single_kill(self):
        base, mutants = self._setup()
        query = parse_query("MATCH (n:L) RETURN n.k0 AS a;")
        assert graph_mutation_score([query], base, mutants) == 1

    def test_invariant_under_reordering_and_duplication(self):
        base, mutants = self._setup()
        q1 = parse_query("MATCH (n:L) RETURN n.k0 + n.k1 AS a;")
        q2 = parse_query("MATCH (n:L) RETURN n.k0 + n.k2 AS a;")
        score = graph_mutation_score([q1, q2], base, mutants)
        assert graph_mutation_score([q2, q1, q1, q2], base, mutants) == score

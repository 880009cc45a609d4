from __future__ import annotations

import random

import pytest

from cypherfuzz import query_ast as qa
from cypherfuzz.executor import (
    ExecOutcome,
    Fault,
    OutcomeKind,
    cells_equal,
    compare_values,
    reference_eval,
)
from cypherfuzz.model import (
    GraphSchema,
    Kind,
    LabelDef,
    Node,
    PropertyGraph,
    PropertyKeyDef,
    RelTypeDef,
    Relationship,
)
from cypherfuzz.parser import parse_query


def run(graph, text, **kwargs):
    return reference_eval(graph, parse_query(text), **kwargs)


@pytest.fixture
def one_node_graph():
    schema = GraphSchema(labels=(LabelDef("L"),))
    return PropertyGraph(schema, (Node(0),), ())


@pytest.fixture
def chain_graph():
    """(a:P {v:1}) -[:T]-> (b:P {v:2}) -[:T]-> (c:P {v:3})"""
    schema = GraphSchema(
        labels=(LabelDef("P", (PropertyKeyDef("v", Kind.INTEGER),)),),
        rel_types=(RelTypeDef("T", (("P", "P"),)),),
    )
    nodes = tuple(Node(i, ("P",), {"v": i + 1}) for i in range(3))
    rels = (Relationship(0, "T", 0, 1), Relationship(1, "T", 1, 2))
    return PropertyGraph(schema, nodes, rels)


class TestBasics:
    def test_return_literal(self, one_node_graph):
        outcome = run(one_node_graph, "RETURN 1 AS a;")
        assert outcome.kind == OutcomeKind.SUCCESS
        assert outcome.result.columns == ("a",)
        assert outcome.result.rows == [(1,)]

    def test_match_all_nodes(self, chain_graph):
        outcome = run(chain_graph, "MATCH (n) RETURN n.v AS a;")
        assert sorted(r[0] for r in outcome.result.rows) == [1, 2, 3]

    def test_label_filtering(self, one_node_graph):
        # the single node is unlabeled, so :L matches nothing
        outcome = run(one_node_graph, "MATCH (n:L) RETURN n;")
        assert outcome.result.rows == []

    def test_property_map_filtering(self, chain_graph):
        outcome = run(chain_graph, "MATCH (n:P {v: 2}) RETURN n.v AS a;")
        assert outcome.result.rows == [(2,)]

    def test_directed_chain(self, chain_graph):
        outcome = run(chain_graph, "MATCH (a)-[:T]->(b)-[:T]->(c) RETURN c.v AS x;")
        assert outcome.result.rows == [(3,)]

    def test_direction_left(self, chain_graph):
        outcome = run(chain_graph, "MATCH (a)<-[:T]-(b) RETURN a.v AS x, b.v AS y;")
        assert sorted(outcome.result.rows) == [(2, 1), (3, 2)]

    def test_relationship_uniqueness_within_match(self, chain_graph):
        # undirected 2-hop cannot reuse the same relationship back and forth
        outcome = run(chain_graph, "MATCH (a)--(b)--(c) RETURN a.v AS x, c.v AS y;")
        assert (1, 1) not in outcome.result.rows
        assert sorted(outcome.result.rows) == [(1, 3), (3, 1)]

    def test_relationship_may_repeat_across_clauses(self, chain_graph):
        outcome = run(
            chain_graph, "MATCH (a)-[r:T]->(b) MATCH (c)-[r2:T]->(d) RETURN count(r) AS n;"
        )
        assert outcome.result.rows == [(4,)]

    def test_bound_variable_joins(self, chain_graph):
        outcome = run(chain_graph, "MATCH (n {v: 1}) MATCH (n)-[:T]->(m) RETURN m.v AS a;")
        assert outcome.result.rows == [(2,)]

    def test_where_three_valued(self, chain_graph):
        # missing property gives null, which never passes WHERE
        schema = chain_graph.schema
        nodes = chain_graph.nodes + (Node(3, ("P",)),)
        graph = PropertyGraph(schema, nodes, chain_graph.relationships)
        outcome = run(graph, "MATCH (n:P) WHERE n.v > 0 RETURN n.v AS a;")
        assert sorted(r[0] for r in outcome.result.rows) == [1, 2, 3]

    def test_self_loop_matches_once_undirected(self):
        schema = GraphSchema(
            labels=(LabelDef("P"),), rel_types=(RelTypeDef("T", (("P", "P"),)),)
        )
        graph = PropertyGraph(
            schema, (Node(0, ("P",)),), (Relationship(0, "T", 0, 0),)
        )
        outcome = run(graph, "MATCH (a)--(b) RETURN count(a) AS n;")
        assert outcome.result.rows == [(1,)]


class TestProjection:
    def test_with_aliasing(self, chain_graph):
        outcome = run(chain_graph, "MATCH (n:P) WITH n.v AS a WHERE a > 1 RETURN a ORDER BY a;")
        assert outcome.result.rows == [(2,), (3,)]

    def test_unwind_expands_and_drops_empty(self, one_node_graph):
        outcome = run(one_node_graph, "UNWIND [1, 2, 3] AS a RETURN a ORDER BY a;")
        assert outcome.result.rows == [(1,), (2,), (3,)]

    def test_unwind_null_drops_row(self, one_node_graph):
        outcome = run(one_node_graph, "MATCH (n) OPTIONAL MATCH (m:L) WITH m.x AS lst UNWIND lst AS a RETURN a;")
        # m is null, property access gives null, UNWIND null -> no rows
        assert outcome.kind == OutcomeKind.SUCCESS
        assert outcome.result.rows == []

    def test_grouping_by_non_aggregate_items(self, chain_graph):
        outcome = run(
            chain_graph,
            "MATCH (a)-[:T]->(b) RETURN a.v > 1 AS grp, count(b) AS n ORDER BY grp;",
        )
        assert outcome.result.rows == [(False, 1), (True, 1)]

    def test_count_over_zero_rows_is_one_row_zero(self, one_node_graph):
        outcome = run(one_node_graph, "MATCH (n:L) RETURN count(n) AS c;")
        assert outcome.result.rows == [(0,)]

    def test_aggregates(self, chain_graph):
        outcome = run(
            chain_graph,
            "MATCH (n:P) RETURN count(n) AS c, sum(n.v) AS s, min(n.v) AS lo, "
            "max(n.v) AS hi, avg(n.v) AS m;",
        )
        assert outcome.result.rows == [(3, 6, 1, 3, 2.0)]

    def test_aggregate_over_empty_group(self, one_node_graph):
        outcome = run(one_node_graph, "MATCH (n:L) RETURN sum(n.x) AS s, max(n.x) AS hi;")
        assert outcome.result.rows == [(0, None)]

    def test_count_ignores_nulls(self, chain_graph):
        schema = chain_graph.schema
        nodes = chain_graph.nodes + (Node(3, ("P",)),)
        graph = PropertyGraph(schema, nodes, chain_graph.relationships)
        outcome = run(graph, "MATCH (n:P) RETURN count(n.v) AS c;")
        assert outcome.result.rows == [(3,)]

    def test_order_by_desc_and_slicing(self, chain_graph):
        outcome = run(
            chain_graph,
            "MATCH (n:P) RETURN n.v AS a ORDER BY a DESC SKIP 1 LIMIT 1;",
        )
        assert outcome.result.rows == [(2,)]
        assert outcome.result.ordered

    def test_order_by_null_last_ascending(self, chain_graph):
        nodes = chain_graph.nodes + (Node(3, ("P",)),)
        graph = PropertyGraph(chain_graph.schema, nodes, chain_graph.relationships)
        outcome = run(graph, "MATCH (n:P) RETURN n.v AS a ORDER BY a;")
        assert [r[0] for r in outcome.result.rows] == [1, 2, 3, None]

    def test_return_star(self, chain_graph):
        outcome = run(chain_graph, "MATCH (n {v: 1})-[:T]->(m) RETURN *;")
        assert outcome.result.columns == ("n", "m")
        assert outcome.result.rows[0][0].id == 0


class TestOptionalMatch:
    def test_null_padding(self, one_node_graph):
        outcome = run(one_node_graph, "MATCH (n) OPTIONAL MATCH (m:L) RETURN m;")
        assert outcome.result.rows == [(None,)]

    def test_optional_law_row_count(self, chain_graph):
        base = run(chain_graph, "MATCH (n:P) RETURN n.v AS a;")
        optional = run(chain_graph, "MATCH (n:P) OPTIONAL MATCH (n)-[:T]->(m) RETURN n.v AS a;")
        assert len(optional.result.rows) >= len(base.result.rows)

    def test_where_belongs_to_the_match(self, chain_graph):
        outcome = run(
            chain_graph,
            "MATCH (n:P) OPTIONAL MATCH (n)-[:T]->(m) WHERE m.v > 99 RETURN n.v AS a, m.v AS b ORDER BY a;",
        )
        # no match passes the filter, every n survives null-padded
        assert outcome.result.rows == [(1, None), (2, None), (3, None)]


class TestPaperFixtures:
    def test_count_over_empty_comparison(self, one_node_graph):
        outcome = run(one_node_graph, "MATCH (n:L) RETURN count(n) > 0 AS a;")
        assert outcome.result.columns == ("a",)
        assert outcome.result.rows == [(False,)]

    def test_optional_rematch_with_where_true(self, one_node_graph):
        outcome = run(one_node_graph, "MATCH (n) OPTIONAL MATCH (n) WHERE true RETURN n;")
        assert len(outcome.result.rows) == 1

    def test_unwind_optional_order_by(self):
        schema = GraphSchema(labels=(LabelDef("L"),))
        graph = PropertyGraph(schema, (Node(0), Node(1)), ())
        outcome = run(
            graph,
            "MATCH (n0) UNWIND [0, 1] AS a OPTIONAL MATCH (n0), (n1) RETURN a ORDER BY a;",
        )
        assert [r[0] for r in outcome.result.rows] == [0, 0, 0, 0, 1, 1, 1, 1]

    def test_friends_of_friends(self, friends_graph):
        outcome = run(
            friends_graph,
            "MATCH (user:User)-[r1:FRIEND]-()-[r2:FRIEND]-(fof:User) "
            "WHERE user.name = 'Bob' RETURN fof.name AS fofName;",
        )
        assert sorted(r[0] for r in outcome.result.rows) == ["Alice", "Carol"]


class TestFaults:
    def test_agg_empty_zero_rows(self, one_node_graph):
        text = "MATCH (n:L) RETURN count(n) > 0 AS a;"
        healthy = run(one_node_graph, text)
        faulty = run(one_node_graph, text, faults=frozenset({Fault.AGG_EMPTY_ZERO_ROWS}))
        assert healthy.result.rows == [(False,)]
        assert faulty.result.rows == []

    def test_optional_where_drop(self, one_node_graph):
        text = "MATCH (n) OPTIONAL MATCH (n) WHERE true RETURN n;"
        healthy = run(one_node_graph, text)
        faulty = run(one_node_graph, text, faults=frozenset({Fault.OPTIONAL_WHERE_DROP}))
        assert len(healthy.result.rows) == 1
        assert faulty.result.rows == []


class TestGuards:
    def test_row_limit_becomes_timeout(self):
        schema = GraphSchema(labels=(LabelDef("P"),))
        nodes = tuple(Node(i, ("P",)) for i in range(30))
        graph = PropertyGraph(schema, nodes, ())
        outcome = run(
            graph, "MATCH (a), (b) MATCH (c), (d) RETURN count(a) AS n;", row_limit=100
        )
        assert outcome.kind == OutcomeKind.TIMEOUT

    def test_determinism(self, chain_graph):
        text = "MATCH (a)--(b) RETURN a.v AS x, b.v AS y;"
        first = run(chain_graph, text)
        second = run(chain_graph, text)
        assert first.result.rows == second.result.rows

    def test_aggregation_law(self, chain_graph):
        outcome = run(chain_graph, "MATCH (n) RETURN count(n) AS c;")
        assert outcome.result.rows == [(len(chain_graph.nodes),)]


class TestValueSemantics:
    def test_cells_equal_null_identity(self):
        assert cells_equal(None, None)
        assert not cells_equal(None, 0)

    def test_cells_equal_bool_is_not_number(self):
        assert not cells_equal(True, 1)
        assert cells_equal(True, True)

    def test_cells_equal_float_tolerance(self):
        assert cells_equal(1.0, 1.0 + 1e-12)
        assert not cells_equal(1.0, 1.001)
        assert cells_equal(2, 2.0)

    def test_cells_equal_lists(self):
        assert cells_equal([1, None, "x"], [1, None, "x"])
        assert not cells_equal([1], [1, 2])

    def test_compare_values_total_order(self):
        # numbers < text < booleans < lists < nulls
        ordering = [1, 2.5, "a", False, True, [1], None]
        for i, low in enumerate(ordering):
            for high in ordering[i + 1:]:
                assert compare_values(low, high) == -1
                assert compare_values(high, low) == 1

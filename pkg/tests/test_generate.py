from __future__ import annotations

import random

import pytest

from cypherfuzz.errors import ConfigError
from cypherfuzz.generate import (
    GenLimits,
    create_script,
    generate_graph,
    generate_graph_mutants,
    generate_indexes,
    generate_schema,
    schema_script,
)
from cypherfuzz.model import validate_graph


def test_schema_respects_label_bound():
    limits = GenLimits(max_labels=3)
    for seed in range(20):
        schema = generate_schema(random.Random(seed), limits)
        assert 1 <= len(schema.labels) <= 3
        names = schema.label_names()
        assert len(set(names)) == len(names)


def test_schema_is_deterministic():
    limits = GenLimits()
    a = generate_schema(random.Random(99), limits)
    b = generate_schema(random.Random(99), limits)
    assert a == b


def test_zero_keys_per_entity():
    limits = GenLimits(max_keys_per_entity=0)
    schema = generate_schema(random.Random(1), limits)
    assert all(not lab.keys for lab in schema.labels)
    assert all(not rt.keys for rt in schema.rel_types)


def test_invalid_limits_rejected():
    with pytest.raises(ConfigError):
        GenLimits(node_count=0, relationship_count=3).validate()
    with pytest.raises(ConfigError):
        GenLimits(max_labels=0).validate()
    with pytest.raises(ConfigError):
        GenLimits(int_range=(5, -5)).validate()


def test_empty_graph():
    limits = GenLimits(node_count=0, relationship_count=0)
    rng = random.Random(0)
    schema = generate_schema(rng, limits)
    graph = generate_graph(rng, schema, limits)
    assert validate_graph(graph).ok
    assert not graph.nodes and not graph.relationships


def test_graph_counts_and_determinism():
    limits = GenLimits(node_count=10, relationship_count=5)

    def build(seed):
        rng = random.Random(seed)
        schema = generate_schema(rng, limits)
        return generate_graph(rng, schema, limits)

    g1, g2 = build(7), build(7)
    assert len(g1.nodes) == 10 and len(g1.relationships) == 5
    assert create_script(g1) == create_script(g2)


def test_indexes_distinct_and_bounded():
    rng = random.Random(3)
    limits = GenLimits()
    schema = generate_schema(rng, limits)
    specs = generate_indexes(rng, schema, 5)
    assert len(specs) == len(set(specs))
    candidates = sum(len(lab.keys) for lab in schema.labels)
    assert len(specs) <= min(5, candidates)
    assert generate_indexes(random.Random(3), schema, 0) == []
    for spec in specs:
        assert spec.key in [k.name for k in schema.label(spec.label).keys]


def test_indexes_deterministic(seeded_schema):
    a = generate_indexes(random.Random(5), seeded_schema, 3)
    b = generate_indexes(random.Random(5), seeded_schema, 3)
    assert a == b


def test_mutants_exhaust_available_properties(seeded_graph):
    total = len(seeded_graph.stored_properties())
    mutants = generate_graph_mutants(seeded_graph, total + 50, random.Random(1))
    assert len(mutants) == total
    assert len({m.removed for m in mutants}) == total


def test_mutant_differs_in_exactly_one_property(seeded_graph):
    mutants = generate_graph_mutants(seeded_graph, 10, random.Random(2))
    base_props = set()
    for kind, entity_id, key in seeded_graph.stored_properties():
        base_props.add((kind, entity_id, key))
    for mutant in mutants:
        mutated = set()
        for kind, entity_id, key in mutant.graph().stored_properties():
            mutated.add((kind, entity_id, key))
        assert base_props - mutated == {mutant.removed}


def test_mutant_reinsertion_reproduces_base(seeded_graph):
    mutant = generate_graph_mutants(seeded_graph, 1, random.Random(3))[0]
    kind, entity_id, key = mutant.removed
    rebuilt = mutant.graph()
    if kind == "node":
        original = seeded_graph.node(entity_id).properties[key]
        rebuilt.node(entity_id).properties[key] = original
    else:
        original = seeded_graph.relationship(entity_id).properties[key]
        rebuilt.relationship(entity_id).properties[key] = original
    assert create_script(rebuilt) == create_script(seeded_graph)


def test_mutants_of_propertyless_graph():
    limits = GenLimits(max_keys_per_entity=0, node_count=4, relationship_count=2)
    rng = random.Random(0)
    schema = generate_schema(rng, limits)
    graph = generate_graph(rng, schema, limits)
    assert generate_graph_mutants(graph, 50, rng) == []


def test_create_script_shape(seeded_graph):
    script = create_script(seeded_graph)
    assert script.startswith("CREATE ")
    assert script.rstrip().endswith(";")
    assert script.count("CREATE") == 1  # one statement for everything


def test_schema_script_lists_indexes(seeded_schema):
    specs = generate_indexes(random.Random(5), seeded_schema, 2)
    script = schema_script(seeded_schema, specs)
    for spec in specs:
        assert f"CREATE INDEX FOR (n:{spec.label}) ON (n.{spec.key});" in script

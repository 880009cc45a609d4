"""Random schema, graph, index, and graph-mutant generation.

All functions are pure in (rng state, inputs): identical seeds produce
identical artifacts, byte-identical after script serialization.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field, replace

from .errors import ConfigError, GenerationError
from .model import (
    GraphSchema,
    Kind,
    LabelDef,
    Node,
    PROPERTY_KINDS,
    PropertyGraph,
    PropertyKeyDef,
    RelTypeDef,
    Relationship,
)

#: Probability that a generated node carries a label.
NODE_LABEL_PROBABILITY = 0.85
#: Probability that an applicable property key is populated on an entity.
PROPERTY_FILL_PROBABILITY = 0.8


@dataclass(frozen=True)
class GenLimits:
    """Size and value-range knobs for schema and graph generation."""

    max_labels: int = 3
    max_rel_types: int = 3
    max_keys_per_entity: int = 3
    node_count: int = 10
    relationship_count: int = 8
    int_range: tuple[int, int] = (-100, 100)
    float_range: tuple[float, float] = (-100.0, 100.0)
    text_alphabet: str = string.ascii_lowercase
    text_max_len: int = 8

    def validate(self) -> None:
        counts = {
            "max_labels": self.max_labels,
            "max_rel_types": self.max_rel_types,
            "max_keys_per_entity": self.max_keys_per_entity,
            "node_count": self.node_count,
            "relationship_count": self.relationship_count,
        }
        for name, value in counts.items():
            if value < 0:
                raise ConfigError(f"{name} must be >= 0, got {value}")
        if self.max_labels < 1:
            raise ConfigError("max_labels must be >= 1")
        if self.relationship_count >= 1 and self.node_count < 1:
            raise ConfigError("relationships require node_count >= 1")
        if self.int_range[0] > self.int_range[1]:
            raise ConfigError("empty int_range")
        if self.float_range[0] > self.float_range[1]:
            raise ConfigError("empty float_range")
        if self.text_max_len < 1 or not self.text_alphabet:
            raise ConfigError("text values need a non-empty alphabet and length")


@dataclass(frozen=True)
class IndexSpec:
    """Single-key index on a label's property key."""

    label: str
    key: str


@dataclass(frozen=True)
class GraphMutant:
    """Copy of a base graph with exactly one property removed."""

    base: PropertyGraph
    removed: tuple[str, int, str]  # (entity kind, entity id, property key)

    def graph(self) -> PropertyGraph:
        kind, entity_id, key = self.removed
        nodes = list(self.base.nodes)
        rels = list(self.base.relationships)
        if kind == "node":
            for i, node in enumerate(nodes):
                if node.id == entity_id:
                    props = dict(node.properties)
                    del props[key]
                    nodes[i] = replace(node, properties=props)
        else:
            for i, rel in enumerate(rels):
                if rel.id == entity_id:
                    props = dict(rel.properties)
                    del props[key]
                    rels[i] = replace(rel, properties=props)
        return PropertyGraph(self.base.schema, tuple(nodes), tuple(rels))


def random_value(rng: random.Random, kind: Kind, limits: GenLimits):
    if kind == Kind.INTEGER:
        return rng.randint(*limits.int_range)
    if kind == Kind.FLOAT:
        return round(rng.uniform(*limits.float_range), 2)
    if kind == Kind.TEXT:
        length = rng.randint(1, limits.text_max_len)
        return "".join(rng.choice(limits.text_alphabet) for _ in range(length))
    if kind == Kind.BOOLEAN:
        return rng.random() < 0.5
    raise ValueError(f"cannot generate a stored value of kind {kind}")


def _fresh_keys(rng: random.Random, counter: list[int], limit: int) -> tuple[PropertyKeyDef, ...]:
    count = rng.randint(0, limit)
    keys = []
    for _ in range(count):
        keys.append(PropertyKeyDef(f"k{counter[0]}", rng.choice(PROPERTY_KINDS)))
        counter[0] += 1
    return tuple(keys)


def generate_schema(rng: random.Random, limits: GenLimits) -> GraphSchema:
    """Random schema: labels, relationship types with applicable pairs, keys."""
    limits.validate()
    key_counter = [0]
    n_labels = rng.randint(1, limits.max_labels)
    labels = tuple(
        LabelDef(f"L{i}", _fresh_keys(rng, key_counter, limits.max_keys_per_entity))
        for i in range(n_labels)
    )
    label_names = [lab.name for lab in labels]
    rel_types = []
    n_types = rng.randint(1, limits.max_rel_types) if limits.max_rel_types >= 1 else 0
    for i in range(n_types):
        pairs: list[tuple[str, str]] = []
        for _ in range(rng.randint(1, 3)):
            pair = (rng.choice(label_names), rng.choice(label_names))
            if pair not in pairs:
                pairs.append(pair)
        rel_types.append(
            RelTypeDef(
                f"T{i}",
                tuple(pairs),
                _fresh_keys(rng, key_counter, limits.max_keys_per_entity),
            )
        )
    return GraphSchema(labels, tuple(rel_types))


def _fill_properties(rng, keys, limits) -> dict:
    props = {}
    for key in keys:
        if rng.random() < PROPERTY_FILL_PROBABILITY:
            props[key.name] = random_value(rng, key.kind, limits)
    return props


def generate_graph(rng: random.Random, schema: GraphSchema, limits: GenLimits) -> PropertyGraph:
    """Random graph over a schema with exactly the configured entity counts."""
    limits.validate()
    nodes = []
    for i in range(limits.node_count):
        if schema.labels and rng.random() < NODE_LABEL_PROBABILITY:
            label = rng.choice(schema.label_names())
            labels = (label,)
            props = _fill_properties(rng, schema.label(label).keys, limits)
        else:
            labels, props = (), {}
        nodes.append(Node(i, labels, props))

    by_label: dict[str, list[Node]] = {}
    for node in nodes:
        for label in node.labels:
            by_label.setdefault(label, []).append(node)

    rels = []
    for j in range(limits.relationship_count):
        candidates = []
        for rtype in schema.rel_types:
            pairs = [
                (a, b) for a, b in rtype.pairs if by_label.get(a) and by_label.get(b)
            ]
            if pairs:
                candidates.append((rtype, pairs))
        if not candidates:
            missing = schema.rel_types[0].name if schema.rel_types else "<none>"
            raise GenerationError(
                f"no applicable label pair instantiable for relationship type {missing!r}"
            )
        rtype, pairs = candidates[rng.randrange(len(candidates))]
        src_label, dst_label = pairs[rng.randrange(len(pairs))]
        source = rng.choice(by_label[src_label])
        target = rng.choice(by_label[dst_label])
        rels.append(
            Relationship(
                j,
                rtype.name,
                source.id,
                target.id,
                _fill_properties(rng, rtype.keys, limits),
            )
        )
    return PropertyGraph(schema, tuple(nodes), tuple(rels))


def generate_indexes(rng: random.Random, schema: GraphSchema, count: int) -> list[IndexSpec]:
    """Up to `count` pairwise-distinct label+key index specs."""
    candidates = [
        IndexSpec(label.name, key.name)
        for label in schema.labels
        for key in label.keys
    ]
    if count <= 0 or not candidates:
        return []
    return rng.sample(candidates, min(count, len(candidates)))


def generate_graph_mutants(
    graph: PropertyGraph, count: int, rng: random.Random
) -> list[GraphMutant]:
    """Up to `count` mutants, each removing a distinct stored property."""
    stored = graph.stored_properties()
    if not stored or count <= 0:
        return []
    picked = rng.sample(stored, min(count, len(stored)))
    return [GraphMutant(graph, removed) for removed in picked]


# ---------------------------------------------------------------------------
# Cypher scripts


def _render_map(props: dict) -> str:
    from .query_ast import render_value

    if not props:
        return ""
    inner = ", ".join(f"{k}: {render_value(v)}" for k, v in sorted(props.items()))
    return " {" + inner + "}"


def create_script(graph: PropertyGraph) -> str:
    """One CREATE statement building all nodes and then all relationships."""
    if not graph.nodes:
        return "// empty graph\n"
    parts = []
    for node in graph.nodes:
        text = f"n{node.id}"
        for label in sorted(node.labels):
            text += ":" + label
        parts.append("(" + text + _render_map(node.properties) + ")")
    for rel in graph.relationships:
        parts.append(
            f"(n{rel.source})-[:{rel.rel_type}{_render_map(rel.properties)}]->(n{rel.target})"
        )
    return "CREATE " + ", ".join(parts) + ";\n"


def schema_script(schema: GraphSchema, indexes: list[IndexSpec]) -> str:
    """Human-readable schema description plus index creation statements."""
    lines = []
    for label in schema.labels:
        keys = ", ".join(f"{k.name}: {k.kind.value}" for k in label.keys)
        lines.append(f"// label {label.name} ({keys})")
    for rtype in schema.rel_types:
        keys = ", ".join(f"{k.name}: {k.kind.value}" for k in rtype.keys)
        pairs = ", ".join(f"{a}->{b}" for a, b in rtype.pairs)
        lines.append(f"// relationship type {rtype.name} [{pairs}] ({keys})")
    for spec in indexes:
        lines.append(f"CREATE INDEX FOR (n:{spec.label}) ON (n.{spec.key});")
    return "\n".join(lines) + "\n"

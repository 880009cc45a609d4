"""Property graphs, schemas, and the value system shared across the toolkit.

Values are plain Python objects: ``int``, ``float``, ``str``, ``bool``,
``None``, and homogeneous ``list``s of these. Nodes and relationships may
also appear as cells of result sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

Value = Any


class Kind(str, Enum):
    """Static kind of a value or of a query variable."""

    INTEGER = "integer"
    FLOAT = "float"
    TEXT = "text"
    BOOLEAN = "boolean"
    LIST = "list"
    NULL = "null"
    NODE = "node"
    RELATIONSHIP = "relationship"


#: Kinds that may be stored as property values.
PROPERTY_KINDS = (Kind.INTEGER, Kind.FLOAT, Kind.TEXT, Kind.BOOLEAN)
ENTITY_KINDS = (Kind.NODE, Kind.RELATIONSHIP)


def kind_of(value: Value) -> Kind:
    """Runtime kind of a value. ``bool`` is checked before ``int``."""
    if value is None:
        return Kind.NULL
    if isinstance(value, bool):
        return Kind.BOOLEAN
    if isinstance(value, int):
        return Kind.INTEGER
    if isinstance(value, float):
        return Kind.FLOAT
    if isinstance(value, str):
        return Kind.TEXT
    if isinstance(value, list):
        return Kind.LIST
    if isinstance(value, Node):
        return Kind.NODE
    if isinstance(value, Relationship):
        return Kind.RELATIONSHIP
    raise TypeError(f"unsupported value: {value!r}")


@dataclass(frozen=True)
class PropertyKeyDef:
    """A property key with a fixed value kind, unique by name per schema."""

    name: str
    kind: Kind


@dataclass(frozen=True)
class LabelDef:
    name: str
    keys: tuple[PropertyKeyDef, ...] = ()


@dataclass(frozen=True)
class RelTypeDef:
    name: str
    pairs: tuple[tuple[str, str], ...] = ()
    keys: tuple[PropertyKeyDef, ...] = ()


@dataclass(frozen=True)
class GraphSchema:
    """Labels, relationship types with applicable label pairs, and keys."""

    labels: tuple[LabelDef, ...] = ()
    rel_types: tuple[RelTypeDef, ...] = ()

    def label(self, name: str) -> LabelDef:
        for lab in self.labels:
            if lab.name == name:
                return lab
        raise KeyError(name)

    def rel_type(self, name: str) -> RelTypeDef:
        for rt in self.rel_types:
            if rt.name == name:
                return rt
        raise KeyError(name)

    def label_names(self) -> list[str]:
        return [lab.name for lab in self.labels]

    def rel_type_names(self) -> list[str]:
        return [rt.name for rt in self.rel_types]

    def all_keys(self) -> list[PropertyKeyDef]:
        """All property keys in declaration order, deduplicated by name."""
        seen: dict[str, PropertyKeyDef] = {}
        for lab in self.labels:
            for key in lab.keys:
                seen.setdefault(key.name, key)
        for rt in self.rel_types:
            for key in rt.keys:
                seen.setdefault(key.name, key)
        return list(seen.values())

    def key_kind(self, name: str) -> Kind:
        for key in self.all_keys():
            if key.name == name:
                return key.kind
        raise KeyError(name)

    def keys_for_labels(self, labels: tuple[str, ...]) -> list[PropertyKeyDef]:
        """Keys usable on a node constrained to `labels`.

        An unconstrained node (no labels known) may use any key in the
        schema, since at runtime the access simply yields null when absent.
        """
        if not labels:
            return self.all_keys()
        out: dict[str, PropertyKeyDef] = {}
        for name in labels:
            try:
                lab = self.label(name)
            except KeyError:
                continue
            for key in lab.keys:
                out.setdefault(key.name, key)
        return list(out.values())

    def keys_for_rel_types(self, types: tuple[str, ...]) -> list[PropertyKeyDef]:
        if not types:
            return self.all_keys()
        out: dict[str, PropertyKeyDef] = {}
        for name in types:
            try:
                rt = self.rel_type(name)
            except KeyError:
                continue
            for key in rt.keys:
                out.setdefault(key.name, key)
        return list(out.values())


@dataclass(frozen=True)
class Node:
    id: int
    labels: tuple[str, ...] = ()
    properties: dict[str, Value] = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class Relationship:
    id: int
    rel_type: str
    source: int
    target: int
    properties: dict[str, Value] = field(default_factory=dict, hash=False)


@dataclass
class PropertyGraph:
    """An immutable-by-convention property graph plus its schema.

    Safe to share across concurrent readers once constructed.
    """

    schema: GraphSchema
    nodes: tuple[Node, ...] = ()
    relationships: tuple[Relationship, ...] = ()

    def __post_init__(self) -> None:
        self._node_by_id = {n.id: n for n in self.nodes}
        self._rel_by_id = {r.id: r for r in self.relationships}

    def node(self, node_id: int) -> Node:
        return self._node_by_id[node_id]

    def relationship(self, rel_id: int) -> Relationship:
        return self._rel_by_id[rel_id]

    def stored_properties(self) -> list[tuple[str, int, str]]:
        """All (entity kind, entity id, key) triples carrying a value."""
        out = []
        for node in self.nodes:
            for key in node.properties:
                out.append(("node", node.id, key))
        for rel in self.relationships:
            for key in rel.properties:
                out.append(("relationship", rel.id, key))
        return out


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, message: str) -> None:
        self.violations.append(message)


def validate_graph(graph: PropertyGraph) -> ValidationReport:
    """Check every structural invariant of a property graph.

    Violations are data, not errors: the report enumerates each one with
    the offending entity id.
    """
    report = ValidationReport()
    schema = graph.schema

    seen_node_ids: set[int] = set()
    for node in graph.nodes:
        if node.id in seen_node_ids:
            report.add(f"node {node.id}: duplicate id")
        seen_node_ids.add(node.id)
        if len(set(node.labels)) != len(node.labels):
            report.add(f"node {node.id}: duplicate labels")
        for label in node.labels:
            if label not in schema.label_names():
                report.add(f"node {node.id}: unknown label {label!r}")
        legal = {
            k.name: k.kind
            for lab_name in node.labels
            if lab_name in schema.label_names()
            for k in schema.label(lab_name).keys
        }
        for key, value in node.properties.items():
            if key not in legal:
                report.add(f"node {node.id}: unknown property key {key!r}")
            elif kind_of(value) != legal[key]:
                report.add(
                    f"node {node.id}: property {key!r} has kind "
                    f"{kind_of(value).value}, expected {legal[key].value}"
                )
            if kind_of(value) in (Kind.LIST, Kind.NULL):
                report.add(f"node {node.id}: stored property {key!r} is {kind_of(value).value}")

    seen_rel_ids: set[int] = set()
    for rel in graph.relationships:
        if rel.id in seen_rel_ids:
            report.add(f"relationship {rel.id}: duplicate id")
        seen_rel_ids.add(rel.id)
        if rel.rel_type not in schema.rel_type_names():
            report.add(f"relationship {rel.id}: unknown type {rel.rel_type!r}")
            continue
        rtype = schema.rel_type(rel.rel_type)
        if rel.source not in seen_node_ids:
            report.add(f"relationship {rel.id}: dangling endpoint {rel.source}")
        if rel.target not in seen_node_ids:
            report.add(f"relationship {rel.id}: dangling endpoint {rel.target}")
        if rel.source in seen_node_ids and rel.target in seen_node_ids:
            src, dst = graph.node(rel.source), graph.node(rel.target)
            if src.labels and dst.labels:
                ok = any(
                    a in src.labels and b in dst.labels for a, b in rtype.pairs
                )
                if not ok:
                    report.add(
                        f"relationship {rel.id}: endpoints violate applicable "
                        f"pairs of {rel.rel_type!r}"
                    )
        legal = {k.name: k.kind for k in rtype.keys}
        for key, value in rel.properties.items():
            if key not in legal:
                report.add(f"relationship {rel.id}: unknown property key {key!r}")
            elif kind_of(value) != legal[key]:
                report.add(
                    f"relationship {rel.id}: property {key!r} has kind "
                    f"{kind_of(value).value}, expected {legal[key].value}"
                )
            if kind_of(value) in (Kind.LIST, Kind.NULL):
                report.add(
                    f"relationship {rel.id}: stored property {key!r} is {kind_of(value).value}"
                )

    return report

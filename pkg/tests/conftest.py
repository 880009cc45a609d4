from __future__ import annotations

import random

import pytest

from cypherfuzz.generate import GenLimits, generate_graph, generate_schema
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


@pytest.fixture
def limits() -> GenLimits:
    return GenLimits()


@pytest.fixture
def seeded_schema(limits) -> GraphSchema:
    return generate_schema(random.Random(42), limits)


@pytest.fixture
def seeded_graph(seeded_schema, limits) -> PropertyGraph:
    rng = random.Random(42)
    generate_schema(rng, limits)  # keep the stream aligned with generation order
    return generate_graph(rng, seeded_schema, limits)


@pytest.fixture
def friends_graph() -> PropertyGraph:
    """Triangle of three User nodes, pairwise FRIEND."""
    user = LabelDef("User", (PropertyKeyDef("name", Kind.TEXT),))
    schema = GraphSchema(
        labels=(user,),
        rel_types=(RelTypeDef("FRIEND", (("User", "User"),), ()),),
    )
    nodes = tuple(
        Node(i, ("User",), {"name": name})
        for i, name in enumerate(["Bob", "Alice", "Carol"])
    )
    rels = (
        Relationship(0, "FRIEND", 0, 1, {}),
        Relationship(1, "FRIEND", 0, 2, {}),
        Relationship(2, "FRIEND", 1, 2, {}),
    )
    return PropertyGraph(schema, nodes, rels)


@pytest.fixture
def tiny_schema() -> GraphSchema:
    """One label L with integer key k plus an empty label M."""
    return GraphSchema(
        labels=(
            LabelDef("L", (PropertyKeyDef("k", Kind.INTEGER),)),
            LabelDef("M", ()),
        ),
        rel_types=(RelTypeDef("T", (("L", "L"),), ()),),
    )

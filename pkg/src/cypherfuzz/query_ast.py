"""Immutable Cypher query representation and its canonical rendering.

The canonical text form is a single line per query: uppercase keywords,
single spaces between tokens, lowercase aggregate function names, node
labels / relationship types / map keys in sorted order, terminated by a
semicolon. ``parse_query`` (see :mod:`cypherfuzz.parser`) accepts the
same subset and round-trips with :func:`render`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .model import Kind

COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")
BOOL_OPS = ("AND", "OR", "XOR")
ARITHMETIC_OPS = ("+", "-", "*")
STRING_OPS = ("STARTS WITH", "ENDS WITH", "CONTAINS")
AGGREGATE_FNS = ("count", "max", "min", "sum", "avg")


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Literal:
    value: object  # int | float | str | bool | None


@dataclass(frozen=True)
class ListLiteral:
    items: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class PropertyAccess:
    variable: str
    key: str


@dataclass(frozen=True)
class Comparison:
    op: str  # one of COMPARISON_OPS
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # one of BOOL_OPS
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Arithmetic:
    op: str  # one of ARITHMETIC_OPS
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class StringPredicate:
    op: str  # one of STRING_OPS
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Aggregate:
    fn: str  # one of AGGREGATE_FNS
    operand: "Expr"


@dataclass(frozen=True)
class NullCheck:
    operand: "Expr"
    negated: bool = False  # True renders as IS NOT NULL


Expr = Union[
    Literal,
    ListLiteral,
    VarRef,
    PropertyAccess,
    Comparison,
    BoolOp,
    Not,
    Arithmetic,
    StringPredicate,
    Aggregate,
    NullCheck,
]


# ---------------------------------------------------------------------------
# Patterns and clauses


@dataclass(frozen=True)
class NodePattern:
    variable: str | None = None
    labels: tuple[str, ...] = ()
    properties: tuple[tuple[str, Literal], ...] = ()


@dataclass(frozen=True)
class RelPattern:
    variable: str | None = None
    types: tuple[str, ...] = ()
    direction: str = "both"  # "left" | "right" | "both"
    properties: tuple[tuple[str, Literal], ...] = ()


@dataclass(frozen=True)
class Pattern:
    """Alternating node / relationship chain, starting and ending at a node."""

    elements: tuple[NodePattern | RelPattern, ...]

    def nodes(self) -> list[NodePattern]:
        return [e for e in self.elements if isinstance(e, NodePattern)]

    def rels(self) -> list[RelPattern]:
        return [e for e in self.elements if isinstance(e, RelPattern)]


@dataclass(frozen=True)
class ReturnItem:
    expr: Expr
    alias: str | None = None


@dataclass(frozen=True)
class OrderKey:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True)
class Match:
    patterns: tuple[Pattern, ...]
    optional: bool = False
    where: Expr | None = None


@dataclass(frozen=True)
class With:
    items: tuple[ReturnItem, ...]
    where: Expr | None = None


@dataclass(frozen=True)
class Unwind:
    expr: Expr
    alias: str = ""


@dataclass(frozen=True)
class Return:
    items: tuple[ReturnItem, ...] = ()
    star: bool = False
    order_by: tuple[OrderKey, ...] = ()
    skip: int | None = None
    limit: int | None = None


Clause = Union[Match, With, Unwind, Return]


@dataclass(frozen=True)
class Query:
    clauses: tuple[Clause, ...]


def clause_count(query: Query) -> int:
    """Number of clauses; WHERE and ORDER BY are sub-clauses, not counted."""
    return len(query.clauses)


# ---------------------------------------------------------------------------
# Rendering

# Operator precedence levels used to insert the minimal parentheses.
_PREC_OR = 1
_PREC_XOR = 2
_PREC_AND = 3
_PREC_NOT = 4
_PREC_CMP = 5
_PREC_ADD = 6
_PREC_MUL = 7
_PREC_ATOM = 8

_BOOL_PREC = {"OR": _PREC_OR, "XOR": _PREC_XOR, "AND": _PREC_AND}


def render_value(value: object) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return "'" + value + "'"
    raise TypeError(f"cannot render literal {value!r}")


def _prec(expr: Expr) -> int:
    if isinstance(expr, BoolOp):
        return _BOOL_PREC[expr.op]
    if isinstance(expr, Not):
        return _PREC_NOT
    if isinstance(expr, (Comparison, StringPredicate, NullCheck)):
        return _PREC_CMP
    if isinstance(expr, Arithmetic):
        return _PREC_ADD if expr.op in ("+", "-") else _PREC_MUL
    return _PREC_ATOM


def _render_child(expr: Expr, minimum: int) -> str:
    text = render_expr(expr)
    if _prec(expr) < minimum:
        return "(" + text + ")"
    return text


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Literal):
        return render_value(expr.value)
    if isinstance(expr, ListLiteral):
        return "[" + ", ".join(render_expr(e) for e in expr.items) + "]"
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, PropertyAccess):
        return f"{expr.variable}.{expr.key}"
    if isinstance(expr, Comparison):
        left = _render_child(expr.left, _PREC_ADD)
        right = _render_child(expr.right, _PREC_ADD)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, StringPredicate):
        left = _render_child(expr.left, _PREC_ADD)
        right = _render_child(expr.right, _PREC_ADD)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, NullCheck):
        operand = _render_child(expr.operand, _PREC_ADD)
        return f"{operand} IS NOT NULL" if expr.negated else f"{operand} IS NULL"
    if isinstance(expr, BoolOp):
        prec = _BOOL_PREC[expr.op]
        left = _render_child(expr.left, prec)
        right = _render_child(expr.right, prec + 1)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, Not):
        return "NOT " + _render_child(expr.operand, _PREC_NOT)
    if isinstance(expr, Arithmetic):
        prec = _prec(expr)
        left = _render_child(expr.left, prec)
        right = _render_child(expr.right, prec + 1)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, Aggregate):
        return f"{expr.fn}({render_expr(expr.operand)})"
    raise TypeError(f"cannot render {expr!r}")


def _render_props(props: tuple[tuple[str, Literal], ...]) -> str:
    parts = [f"{k}: {render_expr(v)}" for k, v in sorted(props)]
    return "{" + ", ".join(parts) + "}"


def render_node_pattern(np: NodePattern) -> str:
    text = np.variable or ""
    for label in sorted(np.labels):
        text += ":" + label
    if np.properties:
        text += (" " if text else "") + _render_props(np.properties)
    return "(" + text + ")"


def render_rel_pattern(rp: RelPattern) -> str:
    inner = rp.variable or ""
    if rp.types:
        inner += ":" + "|".join(sorted(rp.types))
    if rp.properties:
        inner += (" " if inner else "") + _render_props(rp.properties)
    if inner:
        body = "-[" + inner + "]-"
    else:
        body = "--"
    if rp.direction == "right":
        return body + ">"
    if rp.direction == "left":
        return "<" + body
    return body


def render_pattern(pattern: Pattern) -> str:
    parts = []
    for element in pattern.elements:
        if isinstance(element, NodePattern):
            parts.append(render_node_pattern(element))
        else:
            parts.append(render_rel_pattern(element))
    return "".join(parts)


def _render_items(items: tuple[ReturnItem, ...]) -> str:
    parts = []
    for item in items:
        text = render_expr(item.expr)
        if item.alias is not None:
            text += f" AS {item.alias}"
        parts.append(text)
    return ", ".join(parts)


def render_clause(clause: Clause) -> str:
    if isinstance(clause, Match):
        text = "OPTIONAL MATCH " if clause.optional else "MATCH "
        text += ", ".join(render_pattern(p) for p in clause.patterns)
        if clause.where is not None:
            text += " WHERE " + render_expr(clause.where)
        return text
    if isinstance(clause, With):
        text = "WITH " + _render_items(clause.items)
        if clause.where is not None:
            text += " WHERE " + render_expr(clause.where)
        return text
    if isinstance(clause, Unwind):
        return f"UNWIND {render_expr(clause.expr)} AS {clause.alias}"
    if isinstance(clause, Return):
        text = "RETURN " + ("*" if clause.star else _render_items(clause.items))
        if clause.order_by:
            keys = ", ".join(
                render_expr(k.expr) + (" DESC" if k.descending else "")
                for k in clause.order_by
            )
            text += " ORDER BY " + keys
        if clause.skip is not None:
            text += f" SKIP {clause.skip}"
        if clause.limit is not None:
            text += f" LIMIT {clause.limit}"
        return text
    raise TypeError(f"cannot render {clause!r}")


def render(query: Query) -> str:
    """Deterministic single-line canonical text of a query."""
    return " ".join(render_clause(c) for c in query.clauses) + ";"


# ---------------------------------------------------------------------------
# Traversal helpers


def walk_expr(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, ListLiteral):
        for item in expr.items:
            yield from walk_expr(item)
    elif isinstance(expr, (Comparison, BoolOp, Arithmetic, StringPredicate)):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, (Not, NullCheck)):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, Aggregate):
        yield from walk_expr(expr.operand)


def clause_expressions(clause: Clause) -> Iterator[Expr]:
    """Top-level expressions of a clause (not including pattern map literals)."""
    if isinstance(clause, Match):
        if clause.where is not None:
            yield clause.where
    elif isinstance(clause, With):
        for item in clause.items:
            yield item.expr
        if clause.where is not None:
            yield clause.where
    elif isinstance(clause, Unwind):
        yield clause.expr
    elif isinstance(clause, Return):
        for item in clause.items:
            yield item.expr
        for key in clause.order_by:
            yield key.expr


def contains_aggregate(expr: Expr) -> bool:
    return any(isinstance(e, Aggregate) for e in walk_expr(expr))


def query_property_keys(query: Query) -> list[str]:
    """Every syntactic property-key occurrence, in textual order.

    Counts property accesses in expressions and keys of pattern property
    maps; one list entry per occurrence.
    """
    keys: list[str] = []
    for clause in query.clauses:
        if isinstance(clause, Match):
            for pattern in clause.patterns:
                for element in pattern.elements:
                    for key, _ in element.properties:
                        keys.append(key)
        for expr in clause_expressions(clause):
            for sub in walk_expr(expr):
                if isinstance(sub, PropertyAccess):
                    keys.append(sub.key)
    return keys


# ---------------------------------------------------------------------------
# Structural well-formedness


def check_well_formed(query: Query) -> list[str]:
    """Structural (kind-free) invariants of the AST.

    Semantic validity (scope, operand kinds, property keys) is checked
    separately by :func:`cypherfuzz.contexts.validate_semantics`.
    """
    problems: list[str] = []
    if not query.clauses:
        return ["query has no clauses"]
    if not isinstance(query.clauses[-1], Return):
        problems.append("final clause is not RETURN")
    for i, clause in enumerate(query.clauses[:-1]):
        if isinstance(clause, Return):
            problems.append(f"clause {i}: RETURN before the final position")

    for i, clause in enumerate(query.clauses):
        if isinstance(clause, Match):
            if not clause.patterns:
                problems.append(f"clause {i}: empty pattern tuple")
            for pattern in clause.patterns:
                if not _chain_ok(pattern):
                    problems.append(f"clause {i}: malformed pattern chain")
        elif isinstance(clause, With):
            if not clause.items:
                problems.append(f"clause {i}: WITH without items")
            for item in clause.items:
                if item.alias is None:
                    problems.append(f"clause {i}: WITH item lacks an alias")
            problems.extend(_alias_problems(clause.items, i))
        elif isinstance(clause, Unwind):
            if not clause.alias:
                problems.append(f"clause {i}: UNWIND lacks an alias")
        elif isinstance(clause, Return):
            if not clause.star and not clause.items:
                problems.append(f"clause {i}: RETURN without items")
            problems.extend(_alias_problems(clause.items, i))
            if (clause.skip is not None or clause.limit is not None) and not clause.order_by:
                problems.append(f"clause {i}: SKIP/LIMIT without ORDER BY")
    return problems


def _chain_ok(pattern: Pattern) -> bool:
    elements = pattern.elements
    if len(elements) % 2 == 0 or not elements:
        return False
    for j, element in enumerate(elements):
        want_node = j % 2 == 0
        if want_node != isinstance(element, NodePattern):
            return False
    return True


def _alias_problems(items: tuple[ReturnItem, ...], index: int) -> list[str]:
    aliases = [item.alias for item in items if item.alias is not None]
    if len(set(aliases)) != len(aliases):
        return [f"clause {index}: duplicate aliases"]
    return []

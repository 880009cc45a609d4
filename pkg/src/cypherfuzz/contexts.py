"""Per-clause contexts, type inference, and semantic validation.

A clause's context is the set of variables visible to the next clause
(the local environment) together with what is known about each variable:
its kind and, for entities, accumulated label / relationship-type
constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import query_ast as qa
from .model import GraphSchema, Kind

SCALAR_KINDS = (Kind.INTEGER, Kind.FLOAT, Kind.TEXT, Kind.BOOLEAN)


class SemanticError(ValueError):
    """A scope, operand-type, or property-key violation."""

    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category  # "scope" | "type" | "property" | "aggregate"


@dataclass(frozen=True)
class TypeInfo:
    """Statically known kind of a variable plus entity constraints."""

    kind: Kind
    elem: Kind | None = None  # element kind for lists; None when unknown
    labels: tuple[str, ...] = ()  # node label constraints
    rel_types: tuple[str, ...] = ()  # relationship type constraints


@dataclass
class ClauseContext:
    """Local environment: variable name -> TypeInfo, in definition order."""

    env: dict[str, TypeInfo] = field(default_factory=dict)

    def lookup(self, name: str) -> TypeInfo:
        try:
            return self.env[name]
        except KeyError:
            raise SemanticError("scope", f"undefined variable {name!r}") from None

    def vars_of_kind(self, *kinds: Kind) -> list[tuple[str, TypeInfo]]:
        return [(n, t) for n, t in self.env.items() if t.kind in kinds]

    def copy(self) -> "ClauseContext":
        return ClauseContext(dict(self.env))


def free_variables(expr: qa.Expr) -> set[str]:
    names: set[str] = set()
    for sub in qa.walk_expr(expr):
        if isinstance(sub, qa.VarRef):
            names.add(sub.name)
        elif isinstance(sub, qa.PropertyAccess):
            names.add(sub.variable)
    return names


# ---------------------------------------------------------------------------
# Kind inference


def _comparable(a: Kind, b: Kind) -> bool:
    if Kind.NULL in (a, b):
        return True
    return a == b and a in SCALAR_KINDS


def infer_kind(expr: qa.Expr, ctx: ClauseContext, schema: GraphSchema) -> TypeInfo:
    """Static kind of an expression; raises SemanticError on any violation."""
    if isinstance(expr, qa.Literal):
        value = expr.value
        if value is None:
            return TypeInfo(Kind.NULL)
        if isinstance(value, bool):
            return TypeInfo(Kind.BOOLEAN)
        if isinstance(value, int):
            return TypeInfo(Kind.INTEGER)
        if isinstance(value, float):
            return TypeInfo(Kind.FLOAT)
        if isinstance(value, str):
            return TypeInfo(Kind.TEXT)
        raise SemanticError("type", f"unsupported literal {value!r}")
    if isinstance(expr, qa.ListLiteral):
        elem: Kind | None = None
        for item in expr.items:
            kind = infer_kind(item, ctx, schema).kind
            if elem is None:
                elem = kind
            elif elem != kind:
                raise SemanticError("type", "heterogeneous list literal")
        return TypeInfo(Kind.LIST, elem=elem)
    if isinstance(expr, qa.VarRef):
        return ctx.lookup(expr.name)
    if isinstance(expr, qa.PropertyAccess):
        info = ctx.lookup(expr.variable)
        if info.kind == Kind.NODE:
            legal = schema.keys_for_labels(info.labels)
        elif info.kind == Kind.RELATIONSHIP:
            legal = schema.keys_for_rel_types(info.rel_types)
        else:
            raise SemanticError(
                "type", f"property access on non-entity variable {expr.variable!r}"
            )
        for key in legal:
            if key.name == expr.key:
                return TypeInfo(key.kind)
        raise SemanticError(
            "property",
            f"property key {expr.key!r} not in schema for variable {expr.variable!r}",
        )
    if isinstance(expr, qa.Comparison):
        left = infer_kind(expr.left, ctx, schema).kind
        right = infer_kind(expr.right, ctx, schema).kind
        if not _comparable(left, right):
            raise SemanticError(
                "type", f"cannot compare {left.value} with {right.value}"
            )
        return TypeInfo(Kind.BOOLEAN)
    if isinstance(expr, qa.BoolOp):
        for side in (expr.left, expr.right):
            kind = infer_kind(side, ctx, schema).kind
            if kind not in (Kind.BOOLEAN, Kind.NULL):
                raise SemanticError("type", f"{expr.op} operand is {kind.value}")
        return TypeInfo(Kind.BOOLEAN)
    if isinstance(expr, qa.Not):
        kind = infer_kind(expr.operand, ctx, schema).kind
        if kind not in (Kind.BOOLEAN, Kind.NULL):
            raise SemanticError("type", f"NOT operand is {kind.value}")
        return TypeInfo(Kind.BOOLEAN)
    if isinstance(expr, qa.Arithmetic):
        left = infer_kind(expr.left, ctx, schema).kind
        right = infer_kind(expr.right, ctx, schema).kind
        for kind in (left, right):
            if kind not in (Kind.INTEGER, Kind.FLOAT, Kind.NULL):
                raise SemanticError("type", f"arithmetic operand is {kind.value}")
        if left != right and Kind.NULL not in (left, right):
            raise SemanticError(
                "type", f"mixed arithmetic operands {left.value} and {right.value}"
            )
        return TypeInfo(left if left != Kind.NULL else right)
    if isinstance(expr, qa.StringPredicate):
        for side in (expr.left, expr.right):
            kind = infer_kind(side, ctx, schema).kind
            if kind not in (Kind.TEXT, Kind.NULL):
                raise SemanticError("type", f"{expr.op} operand is {kind.value}")
        return TypeInfo(Kind.BOOLEAN)
    if isinstance(expr, qa.NullCheck):
        infer_kind(expr.operand, ctx, schema)
        return TypeInfo(Kind.BOOLEAN)
    if isinstance(expr, qa.Aggregate):
        operand = infer_kind(expr.operand, ctx, schema).kind
        if expr.fn == "count":
            return TypeInfo(Kind.INTEGER)
        if operand not in (Kind.INTEGER, Kind.FLOAT, Kind.NULL):
            raise SemanticError("type", f"{expr.fn} over {operand.value}")
        if expr.fn == "avg":
            return TypeInfo(Kind.FLOAT)
        return TypeInfo(operand if operand != Kind.NULL else Kind.INTEGER)
    raise SemanticError("type", f"unknown expression {expr!r}")


# ---------------------------------------------------------------------------
# Context threading


def _pattern_definitions(
    patterns: tuple[qa.Pattern, ...], ctx: ClauseContext
) -> dict[str, TypeInfo]:
    """Environment after a MATCH: previous env plus pattern variables.

    Reusing a bound variable refines its label/type constraints; reusing
    it with a different entity kind is a scope error.
    """
    env = dict(ctx.env)
    for pattern in patterns:
        for element in pattern.elements:
            name = element.variable
            if name is None:
                continue
            if isinstance(element, qa.NodePattern):
                wanted, constraints = Kind.NODE, element.labels
            else:
                wanted, constraints = Kind.RELATIONSHIP, element.types
            if name in env:
                existing = env[name]
                if existing.kind != wanted:
                    raise SemanticError(
                        "scope",
                        f"variable {name!r} reused as {wanted.value}, "
                        f"was {existing.kind.value}",
                    )
                merged = tuple(sorted(set(existing.labels) | set(constraints))) \
                    if wanted == Kind.NODE else ()
                merged_types = tuple(sorted(set(existing.rel_types) | set(constraints))) \
                    if wanted == Kind.RELATIONSHIP else ()
                env[name] = TypeInfo(wanted, labels=merged, rel_types=merged_types)
            else:
                if wanted == Kind.NODE:
                    env[name] = TypeInfo(wanted, labels=tuple(sorted(constraints)))
                else:
                    env[name] = TypeInfo(wanted, rel_types=tuple(sorted(constraints)))
    return env


def calculate_new_context(
    clause: qa.Clause, ctx: ClauseContext, schema: GraphSchema
) -> ClauseContext:
    """Local environment visible after a clause.

    MATCH extends the previous environment with pattern variables; UNWIND
    adds its alias; WITH and RETURN replace the environment with exactly
    their aliased items.
    """
    if isinstance(clause, qa.Match):
        env = _pattern_definitions(clause.patterns, ctx)
        new_ctx = ClauseContext(env)
        if clause.where is not None:
            for name in sorted(free_variables(clause.where)):
                new_ctx.lookup(name)
        return new_ctx
    if isinstance(clause, qa.Unwind):
        for name in sorted(free_variables(clause.expr)):
            ctx.lookup(name)
        info = infer_kind(clause.expr, ctx, schema)
        if info.kind != Kind.LIST:
            raise SemanticError("type", "UNWIND expression is not a list")
        env = dict(ctx.env)
        env[clause.alias] = TypeInfo(info.elem if info.elem is not None else Kind.NULL)
        return ClauseContext(env)
    if isinstance(clause, (qa.With, qa.Return)):
        env: dict[str, TypeInfo] = {}
        for item in clause.items:
            for name in sorted(free_variables(item.expr)):
                ctx.lookup(name)
            info = infer_kind(item.expr, ctx, schema)
            env[item.alias or qa.render_expr(item.expr)] = info
        new_ctx = ClauseContext(env)
        if isinstance(clause, qa.With) and clause.where is not None:
            for name in sorted(free_variables(clause.where)):
                new_ctx.lookup(name)
        return new_ctx
    raise TypeError(f"unknown clause {clause!r}")


# ---------------------------------------------------------------------------
# Validation


def _check_aggregate_item(expr: qa.Expr, problems: list[str], where: str) -> None:
    """Aggregated items may not nest aggregates, and any leaf outside an
    aggregate operand must be a literal so grouping stays well-defined."""

    def walk(node: qa.Expr, inside: bool) -> None:
        if isinstance(node, qa.Aggregate):
            if inside:
                problems.append(f"{where}: nested aggregate")
            walk(node.operand, True)
            return
        if isinstance(node, (qa.VarRef, qa.PropertyAccess)) and not inside:
            problems.append(
                f"{where}: variable outside an aggregate in an aggregated item"
            )
            return
        if isinstance(node, qa.ListLiteral):
            for item in node.items:
                walk(item, inside)
        elif isinstance(node, (qa.Comparison, qa.BoolOp, qa.Arithmetic, qa.StringPredicate)):
            walk(node.left, inside)
            walk(node.right, inside)
        elif isinstance(node, (qa.Not, qa.NullCheck)):
            walk(node.operand, inside)

    walk(expr, False)


def _no_aggregates(expr: qa.Expr, problems: list[str], where: str) -> None:
    if qa.contains_aggregate(expr):
        problems.append(f"{where}: aggregate is not allowed here")


def _check_pattern_maps(
    clause: qa.Match, ctx: ClauseContext, schema: GraphSchema, problems: list[str], at: str
) -> None:
    for pattern in clause.patterns:
        for element in pattern.elements:
            if not element.properties:
                continue
            if isinstance(element, qa.NodePattern):
                labels = set(element.labels)
                if element.variable and element.variable in ctx.env:
                    labels |= set(ctx.env[element.variable].labels)
                legal = {k.name: k.kind for k in schema.keys_for_labels(tuple(sorted(labels)))}
            else:
                types = set(element.types)
                if element.variable and element.variable in ctx.env:
                    types |= set(ctx.env[element.variable].rel_types)
                legal = {k.name: k.kind for k in schema.keys_for_rel_types(tuple(sorted(types)))}
            for key, literal in element.properties:
                if key not in legal:
                    problems.append(f"{at}: property key {key!r} not in schema here")
                    continue
                value = literal.value
                kind = (
                    Kind.BOOLEAN if isinstance(value, bool)
                    else Kind.INTEGER if isinstance(value, int)
                    else Kind.FLOAT if isinstance(value, float)
                    else Kind.TEXT if isinstance(value, str)
                    else Kind.NULL
                )
                if kind != legal[key]:
                    problems.append(
                        f"{at}: property {key!r} expects {legal[key].value}, got {kind.value}"
                    )


def validate_semantics(query: qa.Query, schema: GraphSchema) -> list[str]:
    """Check variable scope, operand kinds, and property-key legality.

    Returns the list of violations; an empty list means the query is
    semantically valid. Structural defects are included since they make
    semantic judgment impossible.
    """
    problems = qa.check_well_formed(query)
    if problems:
        return problems

    ctx = ClauseContext()
    for i, clause in enumerate(query.clauses):
        at = f"clause {i}"
        try:
            if isinstance(clause, qa.Match):
                _check_pattern_maps(clause, ctx, schema, problems, at)
                new_ctx = calculate_new_context(clause, ctx, schema)
                if clause.where is not None:
                    _no_aggregates(clause.where, problems, at)
                    kind = infer_kind(clause.where, new_ctx, schema).kind
                    if kind not in (Kind.BOOLEAN, Kind.NULL):
                        problems.append(f"{at}: WHERE is {kind.value}, not boolean")
            elif isinstance(clause, qa.Unwind):
                _no_aggregates(clause.expr, problems, at)
                new_ctx = calculate_new_context(clause, ctx, schema)
            elif isinstance(clause, (qa.With, qa.Return)):
                for j, item in enumerate(clause.items):
                    if qa.contains_aggregate(item.expr):
                        _check_aggregate_item(item.expr, problems, f"{at} item {j}")
                new_ctx = calculate_new_context(clause, ctx, schema)
                if isinstance(clause, qa.With) and clause.where is not None:
                    _no_aggregates(clause.where, problems, at)
                    kind = infer_kind(clause.where, new_ctx, schema).kind
                    if kind not in (Kind.BOOLEAN, Kind.NULL):
                        problems.append(f"{at}: WHERE is {kind.value}, not boolean")
                if isinstance(clause, qa.Return):
                    for key in clause.order_by:
                        _no_aggregates(key.expr, problems, at)
                        infer_kind(key.expr, new_ctx, schema)
            else:
                problems.append(f"{at}: unknown clause")
                break
            ctx = new_ctx
        except SemanticError as exc:
            problems.append(f"{at}: {exc}")
            break
    return problems

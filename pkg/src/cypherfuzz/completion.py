"""Skeleton completion: hole filling under per-clause contexts.

Fills pattern, expression, and return-item holes so that every emitted
query satisfies variable-scope, operand-type, and property-key safety,
threading a context clause by clause. Property keys are sampled with the
frequency-guided distribution so rarely used keys are preferred.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from . import query_ast as qa
from .contexts import ClauseContext, TypeInfo, calculate_new_context
from .errors import CompletionError
from .generate import GenLimits, random_value
from .model import GraphSchema, Kind
from .skeleton import MatchSkel, ReturnSkel, Skeleton, UnwindSkel, WithSkel

SCALAR_KINDS = (Kind.INTEGER, Kind.FLOAT, Kind.TEXT, Kind.BOOLEAN)

# Generation knobs. Probabilities are per decision point.
REUSE_NODE_VAR_PROBABILITY = 0.35
ANONYMOUS_NODE_PROBABILITY = 0.2
NODE_LABEL_PROBABILITY = 0.55
NODE_PROPS_PROBABILITY = 0.3
REL_VARIABLE_PROBABILITY = 0.5
REL_TYPE_PROBABILITY = 0.7
REL_PROPS_PROBABILITY = 0.2
PASSTHROUGH_ITEM_PROBABILITY = 0.35
AGGREGATE_ITEM_PROBABILITY = 0.35
ORDER_BY_PROBABILITY = 0.3
ORDER_DESC_PROBABILITY = 0.4
SKIP_PROBABILITY = 0.5
LIMIT_PROBABILITY = 0.5
ENV_LEAF_PROBABILITY = 0.65

DEFAULT_MAX_DEPTH = 3
SUBTREE_RETRIES = 20
CLAUSE_RETRIES = 100


@dataclass
class NameState:
    """Deterministic fresh-name counters: v0, v1, ... and a0, a1, ..."""

    next_var: int = 0
    next_alias: int = 0

    def fresh_var(self) -> str:
        name = f"v{self.next_var}"
        self.next_var += 1
        return name

    def fresh_alias(self) -> str:
        name = f"a{self.next_alias}"
        self.next_alias += 1
        return name

    @classmethod
    def continuing(cls, query: qa.Query) -> "NameState":
        """Counters starting after every v*/a* name already in a query."""
        next_var = next_alias = 0
        for name in used_names(query):
            match = re.fullmatch(r"v(\d+)", name)
            if match:
                next_var = max(next_var, int(match.group(1)) + 1)
            match = re.fullmatch(r"a(\d+)", name)
            if match:
                next_alias = max(next_alias, int(match.group(1)) + 1)
        return cls(next_var, next_alias)


def used_names(query: qa.Query) -> set[str]:
    names: set[str] = set()
    for clause in query.clauses:
        if isinstance(clause, qa.Match):
            for pattern in clause.patterns:
                for element in pattern.elements:
                    if element.variable:
                        names.add(element.variable)
        elif isinstance(clause, (qa.With, qa.Return)):
            for item in clause.items:
                if item.alias:
                    names.add(item.alias)
        elif isinstance(clause, qa.Unwind):
            names.add(clause.alias)
        for expr in qa.clause_expressions(clause):
            for sub in qa.walk_expr(expr):
                if isinstance(sub, qa.VarRef):
                    names.add(sub.name)
                elif isinstance(sub, qa.PropertyAccess):
                    names.add(sub.variable)
    return names


# ---------------------------------------------------------------------------
# Frequency list and key selection


@dataclass
class FrequencyList:
    """Occurrence counts per property key, reset with every new schema."""

    counts: dict[str, int] = field(default_factory=dict)

    @classmethod
    def zero(cls, schema: GraphSchema) -> "FrequencyList":
        return cls({key.name: 0 for key in schema.all_keys()})

    def get(self, name: str) -> int:
        return self.counts.get(name, 0)


def selection_probabilities(freqs: list[int | float]) -> list[float]:
    """Per-candidate selection probability from frequency counts.

    With total T and count F_i over N candidates the probability is
    (T - F_i) / ((N - 1) * T); a single candidate or an all-zero list
    degenerates to certainty / uniform choice.
    """
    n = len(freqs)
    if n == 0:
        raise ValueError("empty candidate list")
    if n == 1:
        return [1.0]
    total = sum(freqs)
    if total == 0:
        return [1.0 / n] * n
    return [(total - f) / ((n - 1) * total) for f in freqs]


def select_property_key(
    candidates: list[str], freq: FrequencyList | None, rng: random.Random
) -> str:
    """Sample a key name, preferring keys with low past frequency."""
    if not candidates:
        raise ValueError("empty candidate list")
    if freq is None:
        return rng.choice(candidates)
    probs = selection_probabilities([freq.get(name) for name in candidates])
    roll = rng.random()
    acc = 0.0
    for name, p in zip(candidates, probs):
        acc += p
        if roll < acc:
            return name
    return candidates[-1]


def update_frequencies(
    freq: FrequencyList, query: qa.Query, *, non_empty: bool = True
) -> FrequencyList:
    """Count every property-key occurrence of the query into a new list.

    Callers pass ``non_empty=False`` for queries whose execution returned
    no rows; those leave the list unchanged.
    """
    if not non_empty:
        return freq
    counts = dict(freq.counts)
    for key in qa.query_property_keys(query):
        counts[key] = counts.get(key, 0) + 1
    return FrequencyList(counts)


# ---------------------------------------------------------------------------
# Expression generation


class _Completer:
    def __init__(
        self,
        schema: GraphSchema,
        freq: FrequencyList | None,
        rng: random.Random,
        names: NameState,
        limits: GenLimits,
        max_depth: int,
    ):
        self.schema = schema
        self.freq = freq
        self.rng = rng
        self.names = names
        self.limits = limits
        self.max_depth = max_depth

    # -- leaves

    def _entity_key_candidates(self, ctx: ClauseContext, kind: Kind | None):
        """(variable, [key names]) pairs for property accesses of `kind`."""
        out = []
        for name, info in ctx.env.items():
            if info.kind == Kind.NODE:
                keys = self.schema.keys_for_labels(info.labels)
            elif info.kind == Kind.RELATIONSHIP:
                keys = self.schema.keys_for_rel_types(info.rel_types)
            else:
                continue
            names = [k.name for k in keys if kind is None or k.kind == kind]
            if names:
                out.append((name, names))
        return out

    def _literal(self, kind: Kind) -> qa.Literal:
        return qa.Literal(random_value(self.rng, kind, self.limits))

    def _property_access(self, ctx: ClauseContext, kind: Kind | None) -> qa.PropertyAccess | None:
        """Frequency-guided access: the candidate list pools every key
        available on any in-scope entity variable at this hole."""
        accesses = self._entity_key_candidates(ctx, kind)
        if not accesses:
            return None
        candidates: list[str] = []
        for _, keys in accesses:
            for key in keys:
                if key not in candidates:
                    candidates.append(key)
        key = select_property_key(candidates, self.freq, self.rng)
        holders = [var for var, keys in accesses if key in keys]
        return qa.PropertyAccess(self.rng.choice(holders), key)

    def _leaf(self, kind: Kind, ctx: ClauseContext, literal_only: bool) -> qa.Expr:
        if kind == Kind.LIST:
            raise ValueError("list leaves are built by _list_expr")
        if not literal_only and self.rng.random() < ENV_LEAF_PROBABILITY:
            variables = [n for n, t in ctx.env.items() if t.kind == kind]
            has_access = bool(self._entity_key_candidates(ctx, kind))
            choices = []
            if variables:
                choices.append("var")
            if has_access:
                choices.append("prop")
            if choices:
                pick = self.rng.choice(choices)
                if pick == "prop":
                    access = self._property_access(ctx, kind)
                    if access is not None:
                        return access
                elif variables:
                    return qa.VarRef(self.rng.choice(variables))
        return self._literal(kind)

    # -- recursive generation

    def expression(
        self,
        kind: Kind,
        ctx: ClauseContext,
        depth: int,
        *,
        elem: Kind | None = None,
        literal_only: bool = False,
    ) -> qa.Expr:
        if kind == Kind.LIST:
            return self._list_expr(ctx, depth, elem, literal_only)
        if depth <= 1:
            return self._leaf(kind, ctx, literal_only)
        if kind == Kind.BOOLEAN:
            return self._boolean_expr(ctx, depth, literal_only)
        if kind in (Kind.INTEGER, Kind.FLOAT):
            if self.rng.random() < 0.5:
                op = self.rng.choice(qa.ARITHMETIC_OPS)
                return qa.Arithmetic(
                    op,
                    self.expression(kind, ctx, depth - 1, literal_only=literal_only),
                    self.expression(kind, ctx, depth - 1, literal_only=literal_only),
                )
            return self._leaf(kind, ctx, literal_only)
        return self._leaf(kind, ctx, literal_only)

    def _list_expr(
        self, ctx: ClauseContext, depth: int, elem: Kind | None, literal_only: bool
    ) -> qa.Expr:
        if elem is None:
            elem = self.rng.choice(SCALAR_KINDS)
        if not literal_only:
            lists = [
                n
                for n, t in ctx.env.items()
                if t.kind == Kind.LIST and (t.elem == elem or t.elem is None)
            ]
            if lists and self.rng.random() < 0.4:
                return qa.VarRef(self.rng.choice(lists))
        count = self.rng.randint(1, 3)
        items = tuple(
            self.expression(elem, ctx, 1, literal_only=literal_only)
            for _ in range(count)
        )
        return qa.ListLiteral(items)

    def _boolean_expr(self, ctx: ClauseContext, depth: int, literal_only: bool) -> qa.Expr:
        options = ["comparison", "comparison", "connective", "not", "string", "leaf"]
        if not literal_only and self._entity_key_candidates(ctx, None):
            options.append("nullcheck")
        pick = self.rng.choice(options)
        if pick == "comparison":
            kind = self.rng.choice(SCALAR_KINDS)
            op = self.rng.choice(qa.COMPARISON_OPS)
            return qa.Comparison(
                op,
                self.expression(kind, ctx, depth - 1, literal_only=literal_only),
                self.expression(kind, ctx, depth - 1, literal_only=literal_only),
            )
        if pick == "connective":
            op = self.rng.choice(qa.BOOL_OPS)
            return qa.BoolOp(
                op,
                self.expression(Kind.BOOLEAN, ctx, depth - 1, literal_only=literal_only),
                self.expression(Kind.BOOLEAN, ctx, depth - 1, literal_only=literal_only),
            )
        if pick == "not":
            return qa.Not(
                self.expression(Kind.BOOLEAN, ctx, depth - 1, literal_only=literal_only)
            )
        if pick == "string":
            op = self.rng.choice(qa.STRING_OPS)
            return qa.StringPredicate(
                op,
                self.expression(Kind.TEXT, ctx, depth - 1, literal_only=literal_only),
                self.expression(Kind.TEXT, ctx, depth - 1, literal_only=literal_only),
            )
        if pick == "nullcheck":
            access = self._property_access(ctx, None)
            if access is not None:
                return qa.NullCheck(access, negated=self.rng.random() < 0.5)
        return self._leaf(Kind.BOOLEAN, ctx, literal_only)

    def _aggregate(self, ctx: ClauseContext) -> tuple[qa.Aggregate, Kind]:
        """A single aggregate call; operands may reference the environment."""
        fn = self.rng.choice(qa.AGGREGATE_FNS)
        if fn == "count":
            # count accepts any operand; prefer counting something in scope
            if ctx.env and self.rng.random() < 0.8:
                operand: qa.Expr = qa.VarRef(self.rng.choice(list(ctx.env)))
            else:
                operand = self.expression(
                    self.rng.choice(SCALAR_KINDS), ctx, self.max_depth - 1
                )
            return qa.Aggregate(fn, operand), Kind.INTEGER
        operand_kind = self.rng.choice((Kind.INTEGER, Kind.FLOAT))
        operand = self.expression(operand_kind, ctx, self.max_depth - 1)
        result = Kind.FLOAT if fn == "avg" else operand_kind
        return qa.Aggregate(fn, operand), result

    def aggregate_item_expr(self, ctx: ClauseContext) -> qa.Expr:
        """An aggregated item: aggregates with literal-only context outside."""
        agg, kind = self._aggregate(ctx)
        form = self.rng.random()
        if form < 0.5:
            return agg
        if form < 0.8:
            op = self.rng.choice(qa.COMPARISON_OPS)
            return qa.Comparison(op, agg, self._literal(kind))
        return qa.Arithmetic(self.rng.choice(qa.ARITHMETIC_OPS), agg, self._literal(kind))

    # -- patterns

    def pattern_tuple(self, ctx: ClauseContext) -> tuple[qa.Pattern, ...]:
        count = 2 if self.rng.random() < 0.3 else 1
        defined: dict[str, TypeInfo] = {}
        patterns = tuple(self._pattern(ctx, defined) for _ in range(count))
        return patterns

    def _node_reuse_candidates(
        self, ctx: ClauseContext, defined: dict[str, TypeInfo]
    ) -> list[str]:
        out = [n for n, t in ctx.env.items() if t.kind == Kind.NODE]
        out.extend(n for n, t in defined.items() if t.kind == Kind.NODE)
        return out

    def _pattern(self, ctx: ClauseContext, defined: dict[str, TypeInfo]) -> qa.Pattern:
        roll = self.rng.random()
        n_nodes = 1 if roll < 0.5 else 2 if roll < 0.85 else 3
        elements: list[qa.NodePattern | qa.RelPattern] = [self._node(ctx, defined)]
        for _ in range(n_nodes - 1):
            elements.append(self._rel(defined))
            elements.append(self._node(ctx, defined))
        return qa.Pattern(tuple(elements))

    def _node(self, ctx: ClauseContext, defined: dict[str, TypeInfo]) -> qa.NodePattern:
        reusable = self._node_reuse_candidates(ctx, defined)
        if reusable and self.rng.random() < REUSE_NODE_VAR_PROBABILITY:
            # constraints already hold for the bound variable; add none
            return qa.NodePattern(self.rng.choice(reusable))
        variable = None
        if self.rng.random() >= ANONYMOUS_NODE_PROBABILITY:
            variable = self.names.fresh_var()
        labels: tuple[str, ...] = ()
        if self.schema.labels and self.rng.random() < NODE_LABEL_PROBABILITY:
            labels = (self.rng.choice(self.schema.label_names()),)
        properties: tuple[tuple[str, qa.Literal], ...] = ()
        if labels and self.rng.random() < NODE_PROPS_PROBABILITY:
            keys = self.schema.keys_for_labels(labels)
            if keys:
                name = select_property_key([k.name for k in keys], self.freq, self.rng)
                kind = self.schema.key_kind(name)
                properties = ((name, self._literal(kind)),)
        if variable:
            defined[variable] = TypeInfo(Kind.NODE, labels=labels)
        return qa.NodePattern(variable, labels, properties)

    def _rel(self, defined: dict[str, TypeInfo]) -> qa.RelPattern:
        variable = None
        types: tuple[str, ...] = ()
        if self.schema.rel_types and self.rng.random() < REL_TYPE_PROBABILITY:
            types = (self.rng.choice(self.schema.rel_type_names()),)
        if self.rng.random() < REL_VARIABLE_PROBABILITY:
            variable = self.names.fresh_var()
            defined[variable] = TypeInfo(Kind.RELATIONSHIP, rel_types=types)
        direction = self.rng.choice(("left", "right", "both"))
        properties: tuple[tuple[str, qa.Literal], ...] = ()
        if types and self.rng.random() < REL_PROPS_PROBABILITY:
            keys = self.schema.keys_for_rel_types(types)
            if keys:
                name = select_property_key([k.name for k in keys], self.freq, self.rng)
                kind = self.schema.key_kind(name)
                properties = ((name, self._literal(kind)),)
        return qa.RelPattern(variable, types, direction, properties)

    # -- items

    def items(self, ctx: ClauseContext, *, final: bool) -> tuple[qa.ReturnItem, ...]:
        count = self.rng.randint(1, 3)
        out = []
        for _ in range(count):
            if (
                not final
                and ctx.env
                and self.rng.random() < PASSTHROUGH_ITEM_PROBABILITY
            ):
                expr: qa.Expr = qa.VarRef(self.rng.choice(list(ctx.env)))
            elif self.rng.random() < AGGREGATE_ITEM_PROBABILITY:
                expr = self.aggregate_item_expr(ctx)
            else:
                kind = self.rng.choice(SCALAR_KINDS)
                expr = self.expression(kind, ctx, self.max_depth)
            out.append(qa.ReturnItem(expr, self.names.fresh_alias()))
        return tuple(out)


# ---------------------------------------------------------------------------
# Skeleton filling


def generate_pattern_tuple(
    ctx: ClauseContext,
    schema: GraphSchema,
    freq: FrequencyList | None,
    rng: random.Random,
    *,
    names: NameState | None = None,
    limits: GenLimits | None = None,
) -> tuple[qa.Pattern, ...]:
    completer = _Completer(
        schema, freq, rng, names or NameState(), limits or GenLimits(), DEFAULT_MAX_DEPTH
    )
    return completer.pattern_tuple(ctx)


def generate_expression(
    kind: Kind,
    ctx: ClauseContext,
    schema: GraphSchema,
    freq: FrequencyList | None,
    rng: random.Random,
    max_depth: int = DEFAULT_MAX_DEPTH,
    *,
    elem: Kind | None = None,
    limits: GenLimits | None = None,
) -> qa.Expr:
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    completer = _Completer(
        schema, freq, rng, NameState(), limits or GenLimits(), max_depth
    )
    return completer.expression(kind, ctx, max_depth, elem=elem)


def fill_skeleton(
    skeleton: Skeleton,
    schema: GraphSchema,
    freq: FrequencyList | None,
    rng: random.Random,
    *,
    initial_ctx: ClauseContext | None = None,
    names: NameState | None = None,
    limits: GenLimits | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> qa.Query:
    """Instantiate every hole of a skeleton into a semantically valid query.

    ``skeleton_of`` of the result equals the input skeleton; the context is
    threaded clause by clause so every reference stays in scope.
    """
    completer = _Completer(
        schema, freq, rng, names or NameState(), limits or GenLimits(), max_depth
    )
    ctx = initial_ctx.copy() if initial_ctx is not None else ClauseContext()
    clauses: list[qa.Clause] = []
    for skel in skeleton.clauses:
        for attempt in range(CLAUSE_RETRIES):
            try:
                clause = _fill_clause(skel, ctx, completer)
                break
            except ValueError:
                continue
        else:
            raise CompletionError(f"could not complete {skel!r}")
        clauses.append(clause)
        ctx = calculate_new_context(clause, ctx, schema)
    return qa.Query(tuple(clauses))


def _fill_clause(skel, ctx: ClauseContext, completer: _Completer) -> qa.Clause:
    rng = completer.rng
    if isinstance(skel, MatchSkel):
        patterns = completer.pattern_tuple(ctx)
        where = None
        if skel.where:
            local = calculate_new_context(
                qa.Match(patterns, optional=skel.optional), ctx, completer.schema
            )
            where = completer.expression(Kind.BOOLEAN, local, completer.max_depth)
        return qa.Match(patterns, optional=skel.optional, where=where)
    if isinstance(skel, WithSkel):
        items = completer.items(ctx, final=False)
        where = None
        if skel.where:
            local = calculate_new_context(qa.With(items), ctx, completer.schema)
            where = completer.expression(Kind.BOOLEAN, local, completer.max_depth)
        return qa.With(items, where=where)
    if isinstance(skel, UnwindSkel):
        expr = completer.expression(
            Kind.LIST, ctx, completer.max_depth, elem=rng.choice(SCALAR_KINDS)
        )
        return qa.Unwind(expr, completer.names.fresh_alias())
    if isinstance(skel, ReturnSkel):
        items = completer.items(ctx, final=True)
        order_by: tuple[qa.OrderKey, ...] = ()
        skip = limit = None
        if rng.random() < ORDER_BY_PROBABILITY:
            order_by = tuple(
                qa.OrderKey(qa.VarRef(item.alias), rng.random() < ORDER_DESC_PROBABILITY)
                for item in items
            )
            if rng.random() < SKIP_PROBABILITY:
                skip = rng.randint(0, 3)
            if rng.random() < LIMIT_PROBABILITY:
                limit = rng.randint(1, 5)
        return qa.Return(items, order_by=order_by, skip=skip, limit=limit)
    raise TypeError(f"unknown skeleton clause {skel!r}")

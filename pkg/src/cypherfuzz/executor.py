"""In-process reference executor for the generated Cypher subset.

Evaluates queries clause by clause over binding tables: MATCH finds all
homomorphic pattern embeddings without repeating a relationship within
one match, OPTIONAL MATCH null-pads unmatched rows, WHERE filters under
three-valued logic, WITH projects with aggregation grouping, UNWIND
expands lists, and the final RETURN projects, sorts, and slices.

Evaluation is deterministic; a configurable work cap turns runaway
queries into a ``timeout`` outcome instead of unbounded computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cmp_to_key
from typing import Callable, Iterator

from . import query_ast as qa
from .model import Node, PropertyGraph, Relationship

DEFAULT_ROW_LIMIT = 200_000


class Fault(str, Enum):
    """Deliberate evaluator perturbations modeling known engine bug classes."""

    #: Aggregation over zero rows with no grouping keys yields zero rows
    #: instead of the single expected row.
    AGG_EMPTY_ZERO_ROWS = "agg-empty-zero-rows"
    #: OPTIONAL MATCH with a WHERE discards rows whose match succeeded.
    OPTIONAL_WHERE_DROP = "optional-where-drop"


class OutcomeKind(str, Enum):
    SUCCESS = "success"
    SEMANTIC_REJECTION = "semantic_rejection"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"
    CONNECTION_LOST = "connection_lost"


@dataclass
class ResultSet:
    columns: tuple[str, ...]
    rows: list[tuple]
    ordered: bool = False  # row order is meaningful (final ORDER BY present)


@dataclass
class ExecOutcome:
    kind: OutcomeKind
    result: ResultSet | None = None
    message: str | None = None

    @classmethod
    def success(cls, result: ResultSet) -> "ExecOutcome":
        return cls(OutcomeKind.SUCCESS, result=result)

    @classmethod
    def rejection(cls, message: str) -> "ExecOutcome":
        return cls(OutcomeKind.SEMANTIC_REJECTION, message=message)

    @classmethod
    def error(cls, message: str) -> "ExecOutcome":
        return cls(OutcomeKind.RUNTIME_ERROR, message=message)

    @classmethod
    def timeout(cls) -> "ExecOutcome":
        return cls(OutcomeKind.TIMEOUT)

    @classmethod
    def lost(cls, message: str = "connection lost") -> "ExecOutcome":
        return cls(OutcomeKind.CONNECTION_LOST, message=message)

    @property
    def non_empty(self) -> bool:
        return self.kind == OutcomeKind.SUCCESS and bool(self.result.rows)


class EvalError(Exception):
    """Internal evaluation fault; surfaced as a runtime_error outcome."""


class RowLimitExceeded(Exception):
    pass


# ---------------------------------------------------------------------------
# Value semantics


def compare_values(a, b) -> int:
    """Total order used by ORDER BY: numbers, text, booleans, lists,
    entities, then null last; ties inside a class compare naturally."""
    ra, rb = _sort_rank(a), _sort_rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == 0:  # numbers
        return (a > b) - (a < b)
    if ra == 1:  # text, by code point
        return (a > b) - (a < b)
    if ra == 2:  # booleans, false < true
        return int(a) - int(b)
    if ra == 3:  # lists, elementwise then by length
        for x, y in zip(a, b):
            c = compare_values(x, y)
            if c:
                return c
        return (len(a) > len(b)) - (len(a) < len(b))
    if ra in (4, 5):  # entities by id
        return (a.id > b.id) - (a.id < b.id)
    return 0  # nulls


def _sort_rank(v) -> int:
    if v is None:
        return 6
    if isinstance(v, bool):
        return 2
    if isinstance(v, (int, float)):
        return 0
    if isinstance(v, str):
        return 1
    if isinstance(v, list):
        return 3
    if isinstance(v, Node):
        return 4
    if isinstance(v, Relationship):
        return 5
    raise EvalError(f"unorderable value {v!r}")


def cells_equal(a, b, *, float_rel_tol: float = 1e-9) -> bool:
    """Result-cell identity: null equals null; floats compare with a
    relative tolerance; booleans never equal numbers."""
    if a is None or b is None:
        return a is None and b is None
    a_bool, b_bool = isinstance(a, bool), isinstance(b, bool)
    if a_bool or b_bool:
        return a_bool and b_bool and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, int) and isinstance(b, int):
            return a == b
        return math.isclose(a, b, rel_tol=float_rel_tol, abs_tol=0.0)
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(
            cells_equal(x, y, float_rel_tol=float_rel_tol) for x, y in zip(a, b)
        )
    if isinstance(a, Node) and isinstance(b, Node):
        return a.id == b.id
    if isinstance(a, Relationship) and isinstance(b, Relationship):
        return a.id == b.id
    return False


def _eq3(a, b):
    """Three-valued equality used inside WHERE."""
    if a is None or b is None:
        return None
    a_bool, b_bool = isinstance(a, bool), isinstance(b, bool)
    if a_bool != b_bool:
        return False
    if a_bool:
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return False
        verdict = True
        for x, y in zip(a, b):
            c = _eq3(x, y)
            if c is False:
                return False
            if c is None:
                verdict = None
        return verdict
    if isinstance(a, Node) and isinstance(b, Node):
        return a.id == b.id
    if isinstance(a, Relationship) and isinstance(b, Relationship):
        return a.id == b.id
    return False


def _ord3(a, b):
    """Three-valued ordering comparison: -1 / 0 / 1, or None."""
    if a is None or b is None:
        return None
    a_bool, b_bool = isinstance(a, bool), isinstance(b, bool)
    if a_bool and b_bool:
        return int(a) - int(b)
    if a_bool or b_bool:
        return None
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return (a > b) - (a < b)
    if isinstance(a, str) and isinstance(b, str):
        return (a > b) - (a < b)
    return None


def _compare_3vl(op: str, a, b):
    if op == "=":
        return _eq3(a, b)
    if op == "<>":
        eq = _eq3(a, b)
        return None if eq is None else not eq
    c = _ord3(a, b)
    if c is None:
        return None
    if op == "<":
        return c < 0
    if op == "<=":
        return c <= 0
    if op == ">":
        return c > 0
    if op == ">=":
        return c >= 0
    raise EvalError(f"unknown comparison {op!r}")


# ---------------------------------------------------------------------------
# Expression evaluation


def eval_expr(expr: qa.Expr, row: dict, graph: PropertyGraph):
    if isinstance(expr, qa.Literal):
        return expr.value
    if isinstance(expr, qa.ListLiteral):
        return [eval_expr(e, row, graph) for e in expr.items]
    if isinstance(expr, qa.VarRef):
        if expr.name not in row:
            raise EvalError(f"undefined variable {expr.name!r}")
        return row[expr.name]
    if isinstance(expr, qa.PropertyAccess):
        if expr.variable not in row:
            raise EvalError(f"undefined variable {expr.variable!r}")
        entity = row[expr.variable]
        if entity is None:
            return None
        if not isinstance(entity, (Node, Relationship)):
            raise EvalError(f"property access on non-entity {expr.variable!r}")
        return entity.properties.get(expr.key)
    if isinstance(expr, qa.Comparison):
        return _compare_3vl(
            expr.op, eval_expr(expr.left, row, graph), eval_expr(expr.right, row, graph)
        )
    if isinstance(expr, qa.BoolOp):
        left = _as_bool(eval_expr(expr.left, row, graph))
        right = _as_bool(eval_expr(expr.right, row, graph))
        if expr.op == "AND":
            if left is False or right is False:
                return False
            if left is None or right is None:
                return None
            return True
        if expr.op == "OR":
            if left is True or right is True:
                return True
            if left is None or right is None:
                return None
            return False
        if expr.op == "XOR":
            if left is None or right is None:
                return None
            return left != right
        raise EvalError(f"unknown connective {expr.op!r}")
    if isinstance(expr, qa.Not):
        value = _as_bool(eval_expr(expr.operand, row, graph))
        return None if value is None else not value
    if isinstance(expr, qa.Arithmetic):
        left = eval_expr(expr.left, row, graph)
        right = eval_expr(expr.right, row, graph)
        if left is None or right is None:
            return None
        for value in (left, right):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise EvalError(f"arithmetic on non-number {value!r}")
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        raise EvalError(f"unknown arithmetic {expr.op!r}")
    if isinstance(expr, qa.StringPredicate):
        left = eval_expr(expr.left, row, graph)
        right = eval_expr(expr.right, row, graph)
        if not isinstance(left, str) or not isinstance(right, str):
            return None
        if expr.op == "STARTS WITH":
            return left.startswith(right)
        if expr.op == "ENDS WITH":
            return left.endswith(right)
        if expr.op == "CONTAINS":
            return right in left
        raise EvalError(f"unknown string predicate {expr.op!r}")
    if isinstance(expr, qa.NullCheck):
        is_null = eval_expr(expr.operand, row, graph) is None
        return not is_null if expr.negated else is_null
    if isinstance(expr, qa.Aggregate):
        raise EvalError("aggregate outside a projecting clause")
    raise EvalError(f"cannot evaluate {expr!r}")


def _as_bool(value):
    if value is None or isinstance(value, bool):
        return value
    raise EvalError(f"expected a boolean, got {value!r}")


def _apply_aggregate(fn: str, values: list):
    non_null = [v for v in values if v is not None]
    if fn == "count":
        return len(non_null)
    if fn == "sum":
        return sum(non_null) if non_null else 0
    if not non_null:
        return None
    if fn == "avg":
        return sum(non_null) / len(non_null)
    if fn == "max":
        return max(non_null)
    if fn == "min":
        return min(non_null)
    raise EvalError(f"unknown aggregate {fn!r}")


# ---------------------------------------------------------------------------
# Clause evaluation


class _Evaluator:
    def __init__(self, graph: PropertyGraph, row_limit: int, faults: frozenset[Fault]):
        self.graph = graph
        self.row_limit = row_limit
        self.step_budget = max(row_limit * 20, 1_000_000)
        self.steps = 0
        self.faults = faults
        self.var_order: list[str] = []

    def run(self, query: qa.Query) -> ResultSet:
        rows: list[dict] = [{}]
        for clause in query.clauses:
            if isinstance(clause, qa.Match):
                rows = self._match(rows, clause)
            elif isinstance(clause, qa.Unwind):
                rows = self._unwind(rows, clause)
            elif isinstance(clause, qa.With):
                rows = self._with(rows, clause)
            elif isinstance(clause, qa.Return):
                return self._return(rows, clause)
            else:
                raise EvalError(f"unknown clause {clause!r}")
        raise EvalError("query did not end in RETURN")

    def _tick(self, amount: int = 1) -> None:
        self.steps += amount
        if self.steps > self.step_budget:
            raise RowLimitExceeded()

    def _check_rows(self, rows: list) -> None:
        if len(rows) > self.row_limit:
            raise RowLimitExceeded()

    # -- MATCH

    def _match(self, rows: list[dict], clause: qa.Match) -> list[dict]:
        pattern_vars: list[str] = []
        for pattern in clause.patterns:
            for element in pattern.elements:
                if element.variable and element.variable not in pattern_vars:
                    pattern_vars.append(element.variable)
        new_vars = [v for v in pattern_vars if v not in self.var_order]

        out: list[dict] = []
        for row in rows:
            matches = list(self._embeddings(row, clause.patterns))
            if clause.where is not None:
                matches = [
                    m for m in matches
                    if eval_expr(clause.where, m, self.graph) is True
                ]
            if clause.optional:
                if (
                    Fault.OPTIONAL_WHERE_DROP in self.faults
                    and clause.where is not None
                ):
                    # faulty engines drop rows whose optional match succeeded
                    if not matches:
                        out.append({**row, **{v: None for v in new_vars}})
                elif matches:
                    out.extend(matches)
                else:
                    out.append({**row, **{v: None for v in new_vars}})
            else:
                out.extend(matches)
            self._check_rows(out)
        self.var_order.extend(new_vars)
        return out

    def _embeddings(self, row: dict, patterns: tuple[qa.Pattern, ...]) -> Iterator[dict]:
        def rec_pattern(index: int, binding: dict, used: frozenset) -> Iterator[dict]:
            if index == len(patterns):
                yield dict(binding)
                return
            elements = patterns[index].elements
            first = elements[0]
            for node in self._node_candidates(first, binding):
                next_binding = dict(binding)
                if first.variable:
                    next_binding[first.variable] = node
                yield from rec_chain(index, elements, 1, node, next_binding, used)

        def rec_chain(
            pindex: int,
            elements,
            eindex: int,
            current: Node,
            binding: dict,
            used: frozenset,
        ) -> Iterator[dict]:
            if eindex >= len(elements):
                yield from rec_pattern(pindex + 1, binding, used)
                return
            rel_pattern = elements[eindex]
            node_pattern = elements[eindex + 1]
            for rel, partner in self._rel_candidates(rel_pattern, current, binding, used):
                if not self._node_matches(node_pattern, partner, binding):
                    continue
                next_binding = dict(binding)
                if rel_pattern.variable:
                    next_binding[rel_pattern.variable] = rel
                if node_pattern.variable:
                    next_binding[node_pattern.variable] = partner
                yield from rec_chain(
                    pindex, elements, eindex + 2, partner, next_binding, used | {rel.id}
                )

        yield from rec_pattern(0, row, frozenset())

    def _node_candidates(self, np: qa.NodePattern, binding: dict) -> Iterator[Node]:
        if np.variable and np.variable in binding:
            bound = binding[np.variable]
            if bound is None:
                return
            if not isinstance(bound, Node):
                raise EvalError(f"pattern variable {np.variable!r} is not a node")
            self._tick()
            if self._node_ok(np, bound):
                yield bound
            return
        for node in self.graph.nodes:
            self._tick()
            if self._node_ok(np, node):
                yield node

    def _node_matches(self, np: qa.NodePattern, node: Node, binding: dict) -> bool:
        if np.variable and np.variable in binding:
            bound = binding[np.variable]
            if bound is None or not isinstance(bound, Node) or bound.id != node.id:
                return False
        return self._node_ok(np, node)

    def _node_ok(self, np: qa.NodePattern, node: Node) -> bool:
        for label in np.labels:
            if label not in node.labels:
                return False
        return self._props_match(np.properties, node.properties)

    def _rel_candidates(
        self, rp: qa.RelPattern, current: Node, binding: dict, used: frozenset
    ) -> Iterator[tuple[Relationship, Node]]:
        if rp.variable and rp.variable in binding:
            bound = binding[rp.variable]
            if bound is None:
                return
            if not isinstance(bound, Relationship):
                raise EvalError(f"pattern variable {rp.variable!r} is not a relationship")
            candidates = [bound]
        else:
            candidates = self.graph.relationships
        for rel in candidates:
            self._tick()
            if rel.id in used:
                continue
            if rp.types and rel.rel_type not in rp.types:
                continue
            if not self._props_match(rp.properties, rel.properties):
                continue
            arms = []
            if rp.direction in ("right", "both") and rel.source == current.id:
                arms.append(rel.target)
            if rp.direction in ("left", "both") and rel.target == current.id:
                arms.append(rel.source)
            if rp.direction == "both" and rel.source == rel.target == current.id:
                arms = [rel.source]  # self-loop matches once undirected
            for partner_id in arms:
                yield rel, self.graph.node(partner_id)

    @staticmethod
    def _props_match(wanted: tuple[tuple[str, qa.Literal], ...], actual: dict) -> bool:
        for key, literal in wanted:
            if _eq3(actual.get(key), literal.value) is not True:
                return False
        return True

    # -- UNWIND

    def _unwind(self, rows: list[dict], clause: qa.Unwind) -> list[dict]:
        out = []
        for row in rows:
            value = eval_expr(clause.expr, row, self.graph)
            if value is None:
                continue
            if not isinstance(value, list):
                raise EvalError("UNWIND over a non-list value")
            for item in value:
                out.append({**row, clause.alias: item})
            self._check_rows(out)
        if clause.alias not in self.var_order:
            self.var_order.append(clause.alias)
        return out

    # -- projection

    def _project(self, rows: list[dict], items: tuple[qa.ReturnItem, ...]) -> list[dict]:
        names = [item.alias or qa.render_expr(item.expr) for item in items]
        aggregated = [qa.contains_aggregate(item.expr) for item in items]
        if not any(aggregated):
            out = []
            for row in rows:
                out.append(
                    {
                        name: eval_expr(item.expr, row, self.graph)
                        for name, item in zip(names, items)
                    }
                )
            return out

        group_indexes = [i for i, agg in enumerate(aggregated) if not agg]
        groups: dict[tuple, list[dict]] = {}
        keyed_values: dict[tuple, list] = {}
        for row in rows:
            values = [eval_expr(items[i].expr, row, self.graph) for i in group_indexes]
            key = tuple(_canon(v) for v in values)
            if key not in groups:
                groups[key] = []
                keyed_values[key] = values
            groups[key].append(row)
            self._tick()
        if not rows and not group_indexes:
            if Fault.AGG_EMPTY_ZERO_ROWS not in self.faults:
                groups[()] = []
                keyed_values[()] = []
        out = []
        for key, grouped_rows in groups.items():
            row_out: dict = {}
            for position, value in zip(group_indexes, keyed_values[key]):
                row_out[names[position]] = value
            for i, item in enumerate(items):
                if aggregated[i]:
                    row_out[names[i]] = self._eval_grouped(item.expr, grouped_rows)
            out.append({name: row_out[name] for name in names})
        return out

    def _eval_grouped(self, expr: qa.Expr, rows: list[dict]):
        if isinstance(expr, qa.Aggregate):
            values = [eval_expr(expr.operand, row, self.graph) for row in rows]
            return _apply_aggregate(expr.fn, values)
        if isinstance(expr, qa.Literal):
            return expr.value
        if isinstance(expr, qa.ListLiteral):
            return [self._eval_grouped(e, rows) for e in expr.items]
        if isinstance(expr, qa.Comparison):
            return _compare_3vl(
                expr.op,
                self._eval_grouped(expr.left, rows),
                self._eval_grouped(expr.right, rows),
            )
        if isinstance(expr, qa.Arithmetic):
            left = self._eval_grouped(expr.left, rows)
            right = self._eval_grouped(expr.right, rows)
            if left is None or right is None:
                return None
            return {"+": left + right, "-": left - right, "*": left * right}[expr.op]
        if isinstance(expr, qa.BoolOp):
            probe = {"__left": self._eval_grouped(expr.left, rows),
                     "__right": self._eval_grouped(expr.right, rows)}
            return eval_expr(
                qa.BoolOp(expr.op, qa.VarRef("__left"), qa.VarRef("__right")),
                probe,
                self.graph,
            )
        if isinstance(expr, qa.Not):
            value = self._eval_grouped(expr.operand, rows)
            return None if value is None else not value
        if isinstance(expr, qa.StringPredicate):
            left = self._eval_grouped(expr.left, rows)
            right = self._eval_grouped(expr.right, rows)
            if not isinstance(left, str) or not isinstance(right, str):
                return None
            return eval_expr(
                qa.StringPredicate(expr.op, qa.Literal(left), qa.Literal(right)),
                {},
                self.graph,
            )
        if isinstance(expr, qa.NullCheck):
            is_null = self._eval_grouped(expr.operand, rows) is None
            return not is_null if expr.negated else is_null
        raise EvalError("aggregated item references a non-grouped variable")

    def _with(self, rows: list[dict], clause: qa.With) -> list[dict]:
        projected = self._project(rows, clause.items)
        if clause.where is not None:
            projected = [
                row for row in projected
                if eval_expr(clause.where, row, self.graph) is True
            ]
        self.var_order = [item.alias or qa.render_expr(item.expr) for item in clause.items]
        return projected

    def _return(self, rows: list[dict], clause: qa.Return) -> ResultSet:
        if clause.star:
            if not self.var_order:
                raise EvalError("RETURN * with no variables in scope")
            items = tuple(qa.ReturnItem(qa.VarRef(v), None) for v in self.var_order)
        else:
            items = clause.items
        names = tuple(item.alias or qa.render_expr(item.expr) for item in items)
        projected = self._project(rows, items)
        if clause.order_by:
            keyed = []
            for row in projected:
                keys = [eval_expr(k.expr, row, self.graph) for k in clause.order_by]
                keyed.append((keys, row))
            directions = [k.descending for k in clause.order_by]

            def compare(a, b) -> int:
                for (x, y), desc in zip(zip(a[0], b[0]), directions):
                    c = compare_values(x, y)
                    if desc:
                        c = -c
                    if c:
                        return c
                return 0

            keyed.sort(key=cmp_to_key(compare))
            projected = [row for _, row in keyed]
        if clause.skip is not None:
            projected = projected[clause.skip:]
        if clause.limit is not None:
            projected = projected[: clause.limit]
        out_rows = [tuple(row[name] for name in names) for row in projected]
        return ResultSet(names, out_rows, ordered=bool(clause.order_by))


def _canon(value):
    """Hashable canonical form for grouping keys."""
    if isinstance(value, list):
        return ("list",) + tuple(_canon(v) for v in value)
    if isinstance(value, Node):
        return ("node", value.id)
    if isinstance(value, Relationship):
        return ("rel", value.id)
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, (int, float)):
        return ("num", float(value))
    return (type(value).__name__, value)


def reference_eval(
    graph: PropertyGraph,
    query: qa.Query,
    *,
    row_limit: int = DEFAULT_ROW_LIMIT,
    faults: frozenset[Fault] | None = None,
) -> ExecOutcome:
    """Evaluate a query over a graph; never raises out of the host process."""
    try:
        result = _Evaluator(graph, row_limit, faults or frozenset()).run(query)
        return ExecOutcome.success(result)
    except RowLimitExceeded:
        return ExecOutcome.timeout()
    except EvalError as exc:
        return ExecOutcome.error(str(exc))
    except RecursionError:
        return ExecOutcome.error("evaluation recursion limit")
    except Exception as exc:  # defensive: evaluation faults must not crash
        return ExecOutcome.error(f"internal evaluation fault: {exc}")


Evaluator = Callable[[PropertyGraph, qa.Query], ExecOutcome]

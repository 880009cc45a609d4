"""Grammar production registry and per-query coverage extraction.

The registry enumerates exactly the constructs the generator can emit; it
is versioned in ``data/productions.json`` and its size is the coverage
denominator.
"""

from __future__ import annotations

import json
from importlib import resources

from . import query_ast as qa

_CMP_IDS = {"=": "expr:eq", "<>": "expr:neq", "<": "expr:lt",
            "<=": "expr:le", ">": "expr:gt", ">=": "expr:ge"}
_BOOL_IDS = {"AND": "expr:and", "OR": "expr:or", "XOR": "expr:xor"}
_ARITH_IDS = {"+": "expr:add", "-": "expr:sub", "*": "expr:mul"}
_STRING_IDS = {"STARTS WITH": "expr:starts-with", "ENDS WITH": "expr:ends-with",
               "CONTAINS": "expr:contains"}
_LITERAL_IDS = {bool: "expr:bool-literal", int: "expr:int-literal",
                float: "expr:float-literal", str: "expr:text-literal"}


def _load_registry() -> tuple[str, ...]:
    data = resources.files("cypherfuzz").joinpath("data/productions.json")
    payload = json.loads(data.read_text(encoding="utf-8"))
    return tuple(payload["productions"])


REGISTRY: tuple[str, ...] = _load_registry()
REGISTRY_SET = frozenset(REGISTRY)


def registry_size() -> int:
    return len(REGISTRY)


def _expr_productions(expr: qa.Expr, out: set[str]) -> None:
    for sub in qa.walk_expr(expr):
        if isinstance(sub, qa.Literal):
            # bool must win over int
            for typ, ident in _LITERAL_IDS.items():
                if isinstance(sub.value, typ):
                    out.add(ident)
                    break
        elif isinstance(sub, qa.ListLiteral):
            out.add("expr:list-literal")
        elif isinstance(sub, qa.VarRef):
            out.add("expr:variable")
        elif isinstance(sub, qa.PropertyAccess):
            out.add("expr:property-access")
        elif isinstance(sub, qa.Comparison):
            out.add(_CMP_IDS[sub.op])
        elif isinstance(sub, qa.BoolOp):
            out.add(_BOOL_IDS[sub.op])
        elif isinstance(sub, qa.Not):
            out.add("expr:not")
        elif isinstance(sub, qa.Arithmetic):
            out.add(_ARITH_IDS[sub.op])
        elif isinstance(sub, qa.StringPredicate):
            out.add(_STRING_IDS[sub.op])
        elif isinstance(sub, qa.Aggregate):
            out.add(f"expr:{sub.fn}")
        elif isinstance(sub, qa.NullCheck):
            out.add("expr:is-not-null" if sub.negated else "expr:is-null")


def _pattern_productions(pattern: qa.Pattern, out: set[str]) -> None:
    out.add("pattern:chain" if len(pattern.elements) > 1 else "pattern:single-node")
    for element in pattern.elements:
        if isinstance(element, qa.NodePattern):
            out.add("node-pattern:variable" if element.variable else "node-pattern:anonymous")
            if element.labels:
                out.add("node-pattern:labeled")
            if element.properties:
                out.add("node-pattern:property-map")
        else:
            out.add(f"rel-pattern:{ {'left': 'left', 'right': 'right', 'both': 'undirected'}[element.direction] }")
            if element.variable:
                out.add("rel-pattern:variable")
            if element.types:
                out.add("rel-pattern:typed")
            if element.properties:
                out.add("rel-pattern:property-map")
        for _, literal in element.properties:
            _expr_productions(literal, out)


def productions_covered(query: qa.Query) -> set[str]:
    """The exact set of registry productions exercised by a query AST."""
    out: set[str] = set()
    out.add("query:return-final")
    if len(query.clauses) > 1:
        out.add("query:clause-extend")
    for clause in query.clauses:
        if isinstance(clause, qa.Match):
            out.add("clause:optional-match" if clause.optional else "clause:match")
            if clause.where is not None:
                out.add("clause:where-on-match")
            out.add("pattern-tuple:multi" if len(clause.patterns) > 1 else "pattern-tuple:single")
            for pattern in clause.patterns:
                _pattern_productions(pattern, out)
        elif isinstance(clause, qa.With):
            out.add("clause:with")
            if clause.where is not None:
                out.add("clause:where-on-with")
            out.add("ret:multi-item" if len(clause.items) > 1 else "ret:single-item")
        elif isinstance(clause, qa.Unwind):
            out.add("clause:unwind")
        elif isinstance(clause, qa.Return):
            if not clause.star:
                out.add("ret:multi-item" if len(clause.items) > 1 else "ret:single-item")
            if clause.order_by:
                out.add("return:order-by")
                if any(k.descending for k in clause.order_by):
                    out.add("return:order-by-desc")
            if clause.skip is not None:
                out.add("return:skip")
            if clause.limit is not None:
                out.add("return:limit")
        for expr in qa.clause_expressions(clause):
            _expr_productions(expr, out)
    return out & REGISTRY_SET

"""Parser for the supported Cypher subset.

Exists for fixtures, bundle replay, and coverage tooling. The grammar
matches exactly what :func:`cypherfuzz.query_ast.render` can emit, plus
``RETURN *`` and un-aliased return items; everything else is rejected
with a positioned error.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import query_ast as qa

_KEYWORDS = {
    "MATCH", "OPTIONAL", "WHERE", "WITH", "UNWIND", "RETURN", "AS",
    "ORDER", "BY", "SKIP", "LIMIT", "ASC", "DESC",
    "AND", "OR", "XOR", "NOT", "STARTS", "ENDS", "CONTAINS", "IS",
    "NULL", "TRUE", "FALSE",
}

# Constructs that are valid Cypher but outside the supported subset.
_UNSUPPORTED = {
    "UNION", "CREATE", "MERGE", "SET", "DELETE", "DETACH", "REMOVE",
    "CALL", "FOREACH", "DISTINCT",
}

_PUNCT = ("<=", ">=", "<>", "<", ">", "=", "+", "-", "*", "(", ")",
          "[", "]", "{", "}", ",", ":", ";", ".", "|")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at column {position})")
        self.position = position


@dataclass(frozen=True)
class _Token:
    kind: str  # KEYWORD | NAME | INT | FLOAT | STRING | punctuation | EOF
    text: str
    position: int  # 1-based column


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        pos = i + 1
        if ch == "'":
            j = text.find("'", i + 1)
            if j < 0:
                raise ParseError("unterminated string literal", pos)
            tokens.append(_Token("STRING", text[i + 1 : j], pos))
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(_Token("FLOAT" if is_float else "INT", text[i:j], pos))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            upper = word.upper()
            if upper in _KEYWORDS or upper in _UNSUPPORTED:
                tokens.append(_Token("KEYWORD", upper, pos))
            else:
                tokens.append(_Token("NAME", word, pos))
            i = j
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(_Token(punct, punct, pos))
                i += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(_Token("EOF", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    # -- token helpers

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        if token.kind != "EOF":
            self.index += 1
        return token

    def expect(self, kind: str, what: str | None = None) -> _Token:
        token = self.peek()
        if token.kind != kind:
            raise ParseError(
                f"expected {what or kind}, found {token.text or 'end of input'!r}",
                token.position,
            )
        return self.advance()

    def accept(self, kind: str) -> bool:
        if self.peek().kind == kind:
            self.advance()
            return True
        return False

    def at_keyword(self, *words: str) -> bool:
        token = self.peek()
        return token.kind == "KEYWORD" and token.text in words

    def accept_keyword(self, word: str) -> bool:
        if self.at_keyword(word):
            self.advance()
            return True
        return False

    def expect_keyword(self, word: str) -> _Token:
        token = self.peek()
        if not self.at_keyword(word):
            raise ParseError(f"expected {word}", token.position)
        return self.advance()

    # -- grammar

    def parse(self) -> qa.Query:
        clauses: list[qa.Clause] = []
        while True:
            token = self.peek()
            if token.kind == "KEYWORD" and token.text in _UNSUPPORTED:
                raise ParseError(f"unsupported construct: {token.text}", token.position)
            if self.at_keyword("MATCH", "OPTIONAL"):
                clauses.append(self._match())
            elif self.at_keyword("WITH"):
                clauses.append(self._with())
            elif self.at_keyword("UNWIND"):
                clauses.append(self._unwind())
            elif self.at_keyword("RETURN"):
                clauses.append(self._return())
                break
            else:
                raise ParseError(
                    f"expected a clause keyword, found {token.text or 'end of input'!r}",
                    token.position,
                )
        self.accept(";")
        trailing = self.peek()
        if trailing.kind != "EOF":
            if trailing.kind == "KEYWORD" and trailing.text in _UNSUPPORTED:
                raise ParseError(f"unsupported construct: {trailing.text}", trailing.position)
            raise ParseError(f"unexpected input after query: {trailing.text!r}", trailing.position)
        return qa.Query(tuple(clauses))

    def _match(self) -> qa.Match:
        optional = self.accept_keyword("OPTIONAL")
        self.expect_keyword("MATCH")
        patterns = [self._pattern()]
        while self.accept(","):
            patterns.append(self._pattern())
        where = self._expr() if self.accept_keyword("WHERE") else None
        return qa.Match(tuple(patterns), optional=optional, where=where)

    def _with(self) -> qa.With:
        self.expect_keyword("WITH")
        items = self._items()
        where = self._expr() if self.accept_keyword("WHERE") else None
        return qa.With(tuple(items), where=where)

    def _unwind(self) -> qa.Unwind:
        self.expect_keyword("UNWIND")
        expr = self._expr()
        self.expect_keyword("AS")
        alias = self.expect("NAME", "an alias").text
        return qa.Unwind(expr, alias)

    def _return(self) -> qa.Return:
        self.expect_keyword("RETURN")
        star = False
        items: tuple[qa.ReturnItem, ...] = ()
        if self.accept("*"):
            star = True
        else:
            items = tuple(self._items())
        order_by: tuple[qa.OrderKey, ...] = ()
        if self.accept_keyword("ORDER"):
            self.expect_keyword("BY")
            keys = [self._order_key()]
            while self.accept(","):
                keys.append(self._order_key())
            order_by = tuple(keys)
        skip = limit = None
        if self.accept_keyword("SKIP"):
            skip = int(self.expect("INT", "a count").text)
        if self.accept_keyword("LIMIT"):
            limit = int(self.expect("INT", "a count").text)
        return qa.Return(items, star=star, order_by=order_by, skip=skip, limit=limit)

    def _order_key(self) -> qa.OrderKey:
        expr = self._expr()
        descending = False
        if self.accept_keyword("DESC"):
            descending = True
        else:
            self.accept_keyword("ASC")
        return qa.OrderKey(expr, descending)

    def _items(self) -> list[qa.ReturnItem]:
        items = [self._item()]
        while self.accept(","):
            items.append(self._item())
        return items

    def _item(self) -> qa.ReturnItem:
        expr = self._expr()
        alias = None
        if self.accept_keyword("AS"):
            alias = self.expect("NAME", "an alias").text
        return qa.ReturnItem(expr, alias)

    # -- patterns

    def _pattern(self) -> qa.Pattern:
        elements: list[qa.NodePattern | qa.RelPattern] = [self._node_pattern()]
        while self.peek().kind in ("-", "<"):
            elements.append(self._rel_pattern())
            elements.append(self._node_pattern())
        return qa.Pattern(tuple(elements))

    def _node_pattern(self) -> qa.NodePattern:
        self.expect("(", "a node pattern")
        variable = None
        if self.peek().kind == "NAME":
            variable = self.advance().text
        labels = []
        while self.accept(":"):
            labels.append(self.expect("NAME", "a label").text)
        props: tuple[tuple[str, qa.Literal], ...] = ()
        if self.peek().kind == "{":
            props = self._property_map()
        self.expect(")")
        return qa.NodePattern(variable, tuple(labels), props)

    def _rel_pattern(self) -> qa.RelPattern:
        left_arrow = self.accept("<")
        self.expect("-", "a relationship pattern")
        variable = None
        types: list[str] = []
        props: tuple[tuple[str, qa.Literal], ...] = ()
        if self.accept("["):
            if self.peek().kind == "NAME":
                variable = self.advance().text
            if self.accept(":"):
                types.append(self.expect("NAME", "a relationship type").text)
                while self.accept("|"):
                    types.append(self.expect("NAME", "a relationship type").text)
            if self.peek().kind == "{":
                props = self._property_map()
            self.expect("]")
        self.expect("-")
        right_arrow = False
        if not left_arrow and self.accept(">"):
            right_arrow = True
        if left_arrow:
            direction = "left"
        elif right_arrow:
            direction = "right"
        else:
            direction = "both"
        return qa.RelPattern(variable, tuple(types), direction, props)

    def _property_map(self) -> tuple[tuple[str, qa.Literal], ...]:
        self.expect("{")
        entries: list[tuple[str, qa.Literal]] = []
        if self.peek().kind != "}":
            while True:
                key = self.expect("NAME", "a property key").text
                self.expect(":")
                entries.append((key, self._literal()))
                if not self.accept(","):
                    break
        self.expect("}")
        return tuple(entries)

    def _literal(self) -> qa.Literal:
        token = self.peek()
        negative = False
        if token.kind == "-":
            self.advance()
            negative = True
            token = self.peek()
        if token.kind == "INT":
            self.advance()
            value: object = int(token.text)
        elif token.kind == "FLOAT":
            self.advance()
            value = float(token.text)
        elif not negative and token.kind == "STRING":
            self.advance()
            return qa.Literal(token.text)
        elif not negative and token.kind == "KEYWORD" and token.text in ("TRUE", "FALSE", "NULL"):
            self.advance()
            return qa.Literal({"TRUE": True, "FALSE": False, "NULL": None}[token.text])
        else:
            raise ParseError("expected a literal value", token.position)
        return qa.Literal(-value if negative else value)

    # -- expressions, loosest binding first

    def _expr(self) -> qa.Expr:
        return self._or()

    def _or(self) -> qa.Expr:
        expr = self._xor()
        while self.accept_keyword("OR"):
            expr = qa.BoolOp("OR", expr, self._xor())
        return expr

    def _xor(self) -> qa.Expr:
        expr = self._and()
        while self.accept_keyword("XOR"):
            expr = qa.BoolOp("XOR", expr, self._and())
        return expr

    def _and(self) -> qa.Expr:
        expr = self._not()
        while self.accept_keyword("AND"):
            expr = qa.BoolOp("AND", expr, self._not())
        return expr

    def _not(self) -> qa.Expr:
        if self.accept_keyword("NOT"):
            return qa.Not(self._not())
        return self._comparison()

    def _comparison(self) -> qa.Expr:
        expr = self._add()
        token = self.peek()
        if token.kind in ("=", "<>", "<", "<=", ">", ">="):
            self.advance()
            return qa.Comparison(token.kind, expr, self._add())
        if self.at_keyword("IS"):
            self.advance()
            negated = self.accept_keyword("NOT")
            self.expect_keyword("NULL")
            return qa.NullCheck(expr, negated)
        if self.at_keyword("STARTS"):
            self.advance()
            self.expect_keyword("WITH")
            return qa.StringPredicate("STARTS WITH", expr, self._add())
        if self.at_keyword("ENDS"):
            self.advance()
            self.expect_keyword("WITH")
            return qa.StringPredicate("ENDS WITH", expr, self._add())
        if self.at_keyword("CONTAINS"):
            self.advance()
            return qa.StringPredicate("CONTAINS", expr, self._add())
        return expr

    def _add(self) -> qa.Expr:
        expr = self._mul()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            expr = qa.Arithmetic(op, expr, self._mul())
        return expr

    def _mul(self) -> qa.Expr:
        expr = self._unary()
        while self.peek().kind == "*":
            self.advance()
            expr = qa.Arithmetic("*", expr, self._unary())
        return expr

    def _unary(self) -> qa.Expr:
        token = self.peek()
        if token.kind == "-":
            nxt = self.peek(1)
            if nxt.kind in ("INT", "FLOAT"):
                return self._literal()
            raise ParseError("unary minus is supported only before numeric literals",
                             token.position)
        return self._atom()

    def _atom(self) -> qa.Expr:
        token = self.peek()
        if token.kind in ("INT", "FLOAT", "STRING"):
            return self._literal()
        if token.kind == "KEYWORD" and token.text in ("TRUE", "FALSE", "NULL"):
            return self._literal()
        if token.kind == "[":
            self.advance()
            items: list[qa.Expr] = []
            if self.peek().kind != "]":
                items.append(self._expr())
                while self.accept(","):
                    items.append(self._expr())
            self.expect("]")
            return qa.ListLiteral(tuple(items))
        if token.kind == "(":
            self.advance()
            expr = self._expr()
            self.expect(")")
            return expr
        if token.kind == "NAME":
            name = self.advance().text
            if name.lower() in qa.AGGREGATE_FNS and self.peek().kind == "(":
                self.advance()
                operand = self._expr()
                self.expect(")")
                return qa.Aggregate(name.lower(), operand)
            if self.accept("."):
                key = self.expect("NAME", "a property key").text
                return qa.PropertyAccess(name, key)
            return qa.VarRef(name)
        raise ParseError(
            f"expected an expression, found {token.text or 'end of input'!r}",
            token.position,
        )


def parse_query(text: str) -> qa.Query:
    """Parse Cypher text within the supported subset into a query AST."""
    query = _Parser(text).parse()
    problems = qa.check_well_formed(query)
    if problems:
        raise ParseError("; ".join(problems), 1)
    return query

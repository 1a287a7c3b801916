"""
Arithmetic expressions over the phase-space variables p and q.

A small Pratt parser: numbers, p, q, + - * / ^, parentheses and the functions
exp, ln, sqrt. ^ is right associative and binds tighter than unary minus, so
-p^2 is -(p^2). There is no implicit multiplication.
"""

import re
from typing import Any, Dict, FrozenSet, Iterator, NamedTuple, Optional, Tuple

import numpy as np

from acsq.core.errors import ExpressionSyntaxError, NumericError

VARIABLES = ("p", "q")
FUNCTIONS = {"exp": np.exp, "ln": np.log, "sqrt": np.sqrt}

_TOKENS = {
    "num": r"\d+(\.\d*)?([Ee][+\-]?\d+)?|\.\d+([Ee][+\-]?\d+)?",
    "name": r"[A-Za-z_][A-Za-z0-9_]*",
    "op": r"[+\-*/^]",
    "lpar": r"\(",
    "rpar": r"\)",
    "skip": r"[ \t]+",
    "error": r".",
}
_REGEX = re.compile("|".join(f"(?P<{name}>{text})" for name, text in _TOKENS.items()))


class Token(NamedTuple):
    type: str
    value: Any
    where: Tuple[int, int]


def tokenize(source: str) -> Iterator[Token]:
    for mo in _REGEX.finditer(source):
        kind = str(mo.lastgroup)
        value = mo.group()
        where = mo.start(), mo.end()
        if kind == "skip":
            continue
        if kind == "error":
            raise ExpressionSyntaxError(source, where, f"unknown symbol '{value}'")
        if kind == "num":
            yield Token(kind, float(value), where)
        elif kind in ("op", "lpar", "rpar"):
            yield Token(value, value, where)
        else:
            yield Token(kind, value, where)


class Symbol:
    id = ""
    lbp = 0

    def __init__(self, parser: "Parser", token: Optional[Token] = None):
        self.parser = parser
        self.token = token
        self.value = token.value if token is not None else self.id
        self.first: Optional["Symbol"] = None
        self.second: Optional["Symbol"] = None

    @property
    def where(self) -> Tuple[int, int]:
        if self.token is None:
            end = len(self.parser.source)
            return end, end + 1
        return self.token.where

    def fail(self, message: str) -> ExpressionSyntaxError:
        return ExpressionSyntaxError(self.parser.source, self.where, message)

    def nud(self) -> "Symbol":
        if self.token is None:
            raise self.fail("unexpected end of expression")
        raise self.fail(f"unexpected '{self.value}'")

    def led(self, left: "Symbol") -> "Symbol":
        raise self.fail(f"unexpected '{self.value}'")

    def eval(self, env: Dict[str, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def names(self) -> FrozenSet[str]:
        found: FrozenSet[str] = frozenset()
        for child in (self.first, self.second):
            if child is not None:
                found |= child.names()
        return found


class Number(Symbol):
    def nud(self) -> Symbol:
        return self

    def eval(self, env):
        return np.float64(self.value)


class Name(Symbol):
    def nud(self) -> Symbol:
        if self.value in VARIABLES:
            return self
        if self.value in FUNCTIONS:
            parser = self.parser
            if parser.token.id != "(":
                raise parser.token.fail(f"function '{self.value}' needs parenthesized arguments")
            parser.advance("(")
            self.first = parser.expression(0)
            parser.advance(")")
            return self
        raise self.fail(f"unknown identifier '{self.value}'")

    def eval(self, env):
        if self.first is None:
            return env[self.value]
        return FUNCTIONS[self.value](self.first.eval(env))

    def names(self) -> FrozenSet[str]:
        if self.first is None:
            return frozenset({self.value})
        return self.first.names()


class Infix(Symbol):
    right_assoc = False

    def led(self, left: Symbol) -> Symbol:
        self.first = left
        rbp = self.lbp - int(self.right_assoc)
        self.second = self.parser.expression(rbp)
        return self

    def eval(self, env):
        a = self.first.eval(env)
        b = self.second.eval(env)
        if self.value == "+":
            return a + b
        if self.value == "-":
            return a - b
        if self.value == "*":
            return a * b
        if self.value == "/":
            return a / b
        return np.power(a, b)


class Power(Infix):
    right_assoc = True


class Minus(Infix):
    def nud(self) -> Symbol:
        self.first = self.parser.expression(UNARY_BP)
        return self

    def eval(self, env):
        if self.second is None:
            return -self.first.eval(env)
        return super().eval(env)


class Plus(Infix):
    def nud(self) -> Symbol:
        return self.parser.expression(UNARY_BP)


class Group(Symbol):
    def nud(self) -> Symbol:
        inner = self.parser.expression(0)
        self.parser.advance(")")
        return inner


class End(Symbol):
    pass


class Close(Symbol):
    pass


UNARY_BP = 25


class Parser:
    def __init__(self) -> None:
        self.source = ""
        self.tokens: Iterator[Token] = iter([])
        self.token: Symbol = End(self)
        self.symbol_table = {
            "num": (Number, 0),
            "name": (Name, 0),
            "+": (Plus, 10),
            "-": (Minus, 10),
            "*": (Infix, 20),
            "/": (Infix, 20),
            "^": (Power, 30),
            "(": (Group, 0),
            ")": (Close, 0),
        }

    def expression(self, rbp: int) -> Symbol:
        tok = self.token
        self.advance()
        left = tok.nud()
        while rbp < self.token.lbp:
            tok = self.token
            self.advance()
            left = tok.led(left)
        return left

    def advance(self, value: Optional[str] = None) -> Symbol:
        symbol = self.token
        if value is not None and symbol.id != value:
            found = "end of expression" if isinstance(symbol, End) else f"'{symbol.value}'"
            raise symbol.fail(f"expected '{value}', found {found}")
        try:
            token = next(self.tokens)
            symbol_class, lbp = self.symbol_table[token.type]
            self.token = type(symbol_class.__name__, (symbol_class,), {"id": token.type, "lbp": lbp})(
                self, token
            )
        except StopIteration:
            self.token = End(self)
        return self.token

    def parse(self, source: str) -> Symbol:
        try:
            self.source = source
            self.tokens = tokenize(source)
            self.advance()
            tree = self.expression(0)
            if not isinstance(self.token, End):
                raise self.token.fail(f"unexpected '{self.token.value}'")
            return tree
        finally:
            self.tokens = iter([])
            self.token = End(self)


class Expression:
    """
    A parsed expression, callable on broadcastable arrays of p and q.

    Evaluation never raises on division by zero or ln of non-positive values;
    those points come back as inf or nan unless strict=True.
    """

    def __init__(self, source: str, tree: Symbol):
        self.source = source
        self._tree = tree
        self.variables = tree.names()

    def __call__(self, p=0.0, q=1.0, strict: bool = False) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        shape = np.broadcast(p, q).shape
        with np.errstate(all="ignore"):
            values = np.asarray(self._tree.eval({"p": p, "q": q}), dtype=float)
        values = np.broadcast_to(values, shape)
        if strict and not np.all(np.isfinite(values)):
            raise NumericError(f"Expression '{self.source}' is not finite on the requested points")
        return values

    def of_q(self):
        """Single-variable view q -> value, for p-independent pieces"""
        return lambda q: self(0.0, q)

    def __repr__(self) -> str:
        return f"Expression('{self.source}')"


def parse_expression(source: str, allowed: Tuple[str, ...] = VARIABLES) -> Expression:
    '''
    Parse an arithmetic expression in p and q into a vectorized evaluator.

    parse_expression: source: str, allowed: Tuple[str, ...] = ("p", "q") -> Expression

    Examples:
        parse_expression("1/q^2")(0, 2) -> 0.25
        parse_expression("exp(-p^2)*exp(-(ln(q)-1)^2)")(0, math.e) -> 1.0
        parse_expression("p q") -> Raises ExpressionSyntaxError at position 2
        parse_expression("q+*p") -> Raises ExpressionSyntaxError at position 2
    '''
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError(str(source), None, "empty expression")
    tree = Parser().parse(source)
    expression = Expression(source, tree)
    extra = sorted(expression.variables - set(allowed))
    if extra:
        raise ExpressionSyntaxError(
            source, None, f"variable(s) {', '.join(extra)} not allowed here (allowed: {', '.join(allowed)})"
        )
    return expression

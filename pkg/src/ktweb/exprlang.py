"""Potential expression language: parsing, printing, symbolic derivatives.

Grammar (standard precedence, tightest last):

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          -- right-associative
    atom   := number | "x1" | "x2" | func "(" expr ")" | "(" expr ")"
    func   := "sqrt" | "sin" | "cos" | "exp" | "log"

Implicit multiplication is not accepted.  Exponents must fold to rational
constants at parse time, which keeps symbolic differentiation total on the
accepted language.  Numbers may be integers, decimals, or fractions "p/q";
all are carried exactly as rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import EvaluationSingularityError, ExprParseError

_FUNCTIONS = ("sqrt", "sin", "cos", "exp", "log")


class Expr:
    """Base expression node; subclasses are immutable."""

    def diff(self, var: int) -> "Expr":
        raise NotImplementedError

    def evaluate(self, x1: float, x2: float) -> float:
        raise NotImplementedError

    def to_text(self, parent_prec: int = 0) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_text()})"


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction

    def diff(self, var: int) -> Expr:
        return Const(Fraction(0))

    def evaluate(self, x1, x2):
        return float(self.value)

    def to_text(self, parent_prec: int = 0) -> str:
        if self.value.denominator == 1:
            text = str(self.value.numerator)
        else:
            # Bare "p/q" would re-associate with neighbouring * and /.
            text = f"{self.value.numerator}/{self.value.denominator}"
        if parent_prec > 0 and (self.value < 0 or self.value.denominator != 1):
            return f"({text})"
        return text


@dataclass(frozen=True, repr=False)
class Var(Expr):
    index: int  # 1 or 2

    def diff(self, var: int) -> Expr:
        return Const(Fraction(1 if var == self.index else 0))

    def evaluate(self, x1, x2):
        return x1 if self.index == 1 else x2

    def to_text(self, parent_prec: int = 0) -> str:
        return f"x{self.index}"


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


@dataclass(frozen=True, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def diff(self, var: int) -> Expr:
        u, v = self.left, self.right
        du, dv = u.diff(var), v.diff(var)
        if self.op == "+":
            return add(du, dv)
        if self.op == "-":
            return sub(du, dv)
        if self.op == "*":
            return add(mul(du, v), mul(u, dv))
        if self.op == "/":
            return div(sub(mul(du, v), mul(u, dv)), mul(v, v))
        raise AssertionError(self.op)

    def evaluate(self, x1, x2):
        a = self.left.evaluate(x1, x2)
        b = self.right.evaluate(x1, x2)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if b == 0:
            raise EvaluationSingularityError(f"division by zero at ({x1}, {x2})")
        return a / b

    def to_text(self, parent_prec: int = 0) -> str:
        prec = _PREC[self.op]
        left = self.left.to_text(prec)
        # Same-precedence right operands need parens: a - (b - c), a / (b * c).
        right = self.right.to_text(prec + 1)
        text = f"{left} {self.op} {right}"
        return f"({text})" if prec < parent_prec else text


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    operand: Expr

    def diff(self, var: int) -> Expr:
        return neg(self.operand.diff(var))

    def evaluate(self, x1, x2):
        return -self.operand.evaluate(x1, x2)

    def to_text(self, parent_prec: int = 0) -> str:
        prec = _PREC["neg"]
        text = f"-{self.operand.to_text(prec)}"
        return f"({text})" if prec < parent_prec else text


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: Fraction

    def diff(self, var: int) -> Expr:
        db = self.base.diff(var)
        return mul(mul(Const(self.exponent), power(self.base, self.exponent - 1)), db)

    def evaluate(self, x1, x2):
        b = self.base.evaluate(x1, x2)
        e = self.exponent
        if e.denominator == 1:
            if b == 0 and e < 0:
                raise EvaluationSingularityError(f"zero base with negative power at ({x1}, {x2})")
            return b ** int(e)
        if b < 0:
            raise EvaluationSingularityError(
                f"negative base {b} under fractional power at ({x1}, {x2})")
        if b == 0 and e < 0:
            raise EvaluationSingularityError(f"zero base with negative power at ({x1}, {x2})")
        return b ** float(e)

    def to_text(self, parent_prec: int = 0) -> str:
        prec = _PREC["^"]
        base = self.base.to_text(prec + 1)
        e = self.exponent
        if e.denominator == 1 and e >= 0:
            etext = str(e.numerator)
        else:
            etext = f"({e.numerator}/{e.denominator})" if e.denominator != 1 else f"({e.numerator})"
        text = f"{base}^{etext}"
        return f"({text})" if prec < parent_prec else text


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    argument: Expr

    def diff(self, var: int) -> Expr:
        u = self.argument
        du = u.diff(var)
        if self.name == "sqrt":
            outer = div(Const(Fraction(1, 2)), Func("sqrt", u))
        elif self.name == "sin":
            outer = Func("cos", u)
        elif self.name == "cos":
            outer = neg(Func("sin", u))
        elif self.name == "exp":
            outer = Func("exp", u)
        elif self.name == "log":
            outer = div(Const(Fraction(1)), u)
        else:
            raise AssertionError(self.name)
        return mul(outer, du)

    def evaluate(self, x1, x2):
        a = self.argument.evaluate(x1, x2)
        if self.name == "sqrt":
            if a < 0:
                raise EvaluationSingularityError(f"sqrt of negative value at ({x1}, {x2})")
            return math.sqrt(a)
        if self.name == "sin":
            return math.sin(a)
        if self.name == "cos":
            return math.cos(a)
        if self.name == "exp":
            return math.exp(a)
        if a <= 0:
            raise EvaluationSingularityError(f"log of non-positive value at ({x1}, {x2})")
        return math.log(a)

    def to_text(self, parent_prec: int = 0) -> str:
        return f"{self.name}({self.argument.to_text()})"


# ---------------------------------------------------------------------------
# smart constructors: light local simplification keeps derivative trees small
# ---------------------------------------------------------------------------

def _const(e: Expr) -> Fraction | None:
    return e.value if isinstance(e, Const) else None


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca + cb)
    if ca == 0:
        return b
    if cb == 0:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    if cb == 0:
        return a
    if ca == 0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    if ca == 0 or cb == 0:
        return Const(Fraction(0))
    if ca == 1:
        return b
    if cb == 1:
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _const(a), _const(b)
    if cb is not None and cb != 0:
        if ca is not None:
            return Const(ca / cb)
        if cb == 1:
            return a
    if ca == 0:
        return Const(Fraction(0))
    return BinOp("/", a, b)


def neg(a: Expr) -> Expr:
    ca = _const(a)
    if ca is not None:
        return Const(-ca)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(base: Expr, exponent: Fraction) -> Expr:
    exponent = Fraction(exponent)
    if exponent == 0:
        return Const(Fraction(1))
    if exponent == 1:
        return base
    cb = _const(base)
    if cb is not None and exponent.denominator == 1:
        if exponent >= 0 or cb != 0:
            return Const(cb ** exponent.numerator if exponent >= 0
                         else 1 / (cb ** -exponent.numerator))
    # No (f^a)^b -> f^(a*b) collapse: it is wrong on negative bases when the
    # inner exponent is even, e.g. (x^2)^(1/2) is |x|, not x.
    return Pow(base, exponent)


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # number, name, op, lparen, rparen, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^":
            tokens.append(_Token("op", ch, i))
            i += 1
        elif ch == "(":
            tokens.append(_Token("lparen", ch, i))
            i += 1
        elif ch == ")":
            tokens.append(_Token("rparen", ch, i))
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(_Token("number", text[i:j], i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], i))
            i = j
        else:
            raise ExprParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExprParseError("syntax error", tok.pos, expected=what)
        return self.advance()

    def parse(self) -> Expr:
        expr = self.expression()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprParseError("syntax error", tok.pos, expected="operator or end of input")
        return expr

    def expression(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.unary()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return neg(self.unary())
        if tok.kind == "op" and tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            exp_pos = self.peek().pos
            exponent = self.unary()  # right-associative; x^-2 and x^(1/2) both land here
            folded = _fold_rational(exponent)
            if folded is None:
                raise ExprParseError(
                    "non-differentiable construct: exponent must be a rational constant",
                    exp_pos)
            return power(base, folded)
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            if "." in tok.text:
                return Const(Fraction(tok.text))
            return Const(Fraction(int(tok.text)))
        if tok.kind == "name":
            self.advance()
            if tok.text in ("x1", "x2"):
                return Var(1 if tok.text == "x1" else 2)
            if tok.text in _FUNCTIONS:
                self.expect("lparen", "'(' after function name")
                arg = self.expression()
                self.expect("rparen", "')'")
                return Func(tok.text, arg)
            raise ExprParseError(f"unknown identifier {tok.text!r}", tok.pos,
                                 expected="x1, x2, or a function name")
        if tok.kind == "lparen":
            self.advance()
            node = self.expression()
            self.expect("rparen", "')'")
            return node
        raise ExprParseError("syntax error", tok.pos,
                             expected="number, variable, function, or '('")


def _fold_rational(e: Expr) -> Fraction | None:
    """Fold an exponent expression to a rational constant, if possible."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg):
        inner = _fold_rational(e.operand)
        return None if inner is None else -inner
    if isinstance(e, BinOp):
        left = _fold_rational(e.left)
        right = _fold_rational(e.right)
        if left is None or right is None:
            return None
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if e.op == "/" and right != 0:
            return left / right
    return None


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()

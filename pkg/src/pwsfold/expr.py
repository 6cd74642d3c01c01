"""Scalar expressions in the variables x1, x2, x3, lambda.

Grammar (standard precedence, left-associative within a level):

    expression := term (('+' | '-') term)*
    term       := unary (('*' | '/') unary)*
    unary      := '-' unary | power
    power      := atom ('^' ['-'] INTEGER)*
    atom       := NUMBER | VARIABLE | FUNC '(' expression ')' | '(' expression ')'

'^' binds tighter than unary minus, so -x2^2 parses as -(x2^2). Exponents are
restricted to integer literals. Parsed trees are immutable and safe to share
between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from .exceptions import EvaluationError, ParseError

__all__ = [
    "Const", "Var", "Neg", "BinOp", "Pow", "Call", "Expression",
    "parse_expression", "evaluate", "differentiate", "to_text",
    "polynomial_degree", "compile_expression", "compile_field",
    "VARIABLES", "FUNCTIONS",
]

VARIABLES = ("x1", "x2", "x3", "lambda")
FUNCTIONS = ("sin", "cos", "tanh", "sqrt", "abs")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Const, Var, Neg, BinOp, Pow, Call]

ZERO = Const(0.0)
ONE = Const(1.0)


# --- tokenizer -------------------------------------------------------------

_SYMBOLS = "+-*/^()"


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SYMBOLS:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(("number", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return self.advance()

    def expression(self) -> Expression:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        node = self.atom()
        while self.peek()[0] == "^":
            self.advance()
            sign = 1
            if self.peek()[0] == "-":
                self.advance()
                sign = -1
            kind, text, pos = self.peek()
            if kind != "number" or any(ch in text for ch in ".eE"):
                raise ParseError("exponent must be an integer literal", pos)
            self.advance()
            node = Pow(node, sign * int(text))
        return node

    def atom(self) -> Expression:
        kind, text, pos = self.peek()
        if kind == "number":
            self.advance()
            return Const(float(text))
        if kind == "ident":
            self.advance()
            if self.peek()[0] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos)
                self.advance()
                arg = self.expression()
                self.expect(")")
                return Call(text, arg)
            if text not in VARIABLES:
                raise ParseError(f"unknown identifier {text!r}", pos)
            return Var(text)
        if kind == "(":
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        raise ParseError(f"expected an operand, found {text or 'end of input'!r}", pos)


def parse_expression(text: str) -> Expression:
    """Parse text into an expression tree."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(text)
    node = parser.expression()
    kind, tok_text, pos = parser.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing input {tok_text!r}", pos)
    return node


# --- printing ---------------------------------------------------------------


def to_text(e: Expression) -> str:
    """Canonical fully parenthesized form; round-trips through the parser."""
    if isinstance(e, Const):
        # negative literals need parentheses: -a^n parses as -(a^n)
        if math.copysign(1.0, e.value) < 0:
            return f"(-{abs(e.value)!r})"
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)}^{e.exponent})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# --- evaluation -------------------------------------------------------------

_FUNC_IMPL: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "sqrt": math.sqrt,
    "abs": abs,
}


def evaluate(e: Expression, x1: float, x2: float, x3: float, lam: float) -> float:
    """Evaluate at a binding of the four variables. Non-finite results raise."""
    for name, v in (("x1", x1), ("x2", x2), ("x3", x3), ("lambda", lam)):
        if not math.isfinite(v):
            raise EvaluationError(f"binding for {name} is not finite: {v!r}")
    value = _eval(e, x1, x2, x3, lam)
    if not math.isfinite(value):
        raise EvaluationError(f"expression evaluated to {value!r}")
    return value


def _eval(e: Expression, x1: float, x2: float, x3: float, lam: float) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.name == "x1":
            return x1
        if e.name == "x2":
            return x2
        if e.name == "x3":
            return x3
        return lam
    if isinstance(e, Neg):
        return -_eval(e.arg, x1, x2, x3, lam)
    if isinstance(e, BinOp):
        lv = _eval(e.left, x1, x2, x3, lam)
        rv = _eval(e.right, x1, x2, x3, lam)
        if e.op == "+":
            return lv + rv
        if e.op == "-":
            return lv - rv
        if e.op == "*":
            return lv * rv
        if rv == 0.0:
            raise EvaluationError("division by zero")
        return lv / rv
    if isinstance(e, Pow):
        base = _eval(e.base, x1, x2, x3, lam)
        if e.exponent < 0 and base == 0.0:
            raise EvaluationError("zero raised to a negative power")
        try:
            return base ** e.exponent
        except OverflowError as exc:
            raise EvaluationError(str(exc)) from exc
    if isinstance(e, Call):
        arg = _eval(e.arg, x1, x2, x3, lam)
        if e.func == "sqrt" and arg < 0.0:
            raise EvaluationError(f"sqrt of negative value {arg!r}")
        return _FUNC_IMPL[e.func](arg)
    raise TypeError(f"not an expression node: {e!r}")


# --- differentiation --------------------------------------------------------


def _is_zero(e: Expression) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def _is_one(e: Expression) -> bool:
    return isinstance(e, Const) and e.value == 1.0


def _add(a: Expression, b: Expression) -> Expression:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return BinOp("+", a, b)


def _sub(a: Expression, b: Expression) -> Expression:
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Neg(b)
    return BinOp("-", a, b)


def _mul(a: Expression, b: Expression) -> Expression:
    if _is_zero(a) or _is_zero(b):
        return ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return BinOp("*", a, b)


def _div(a: Expression, b: Expression) -> Expression:
    if _is_zero(a):
        return ZERO
    if _is_one(b):
        return a
    return BinOp("/", a, b)


def differentiate(e: Expression, var: str) -> Expression:
    """Exact symbolic partial derivative with respect to one variable."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}; expected one of {VARIABLES}")
    return _diff(e, var)


def _diff(e: Expression, var: str) -> Expression:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        d = _diff(e.arg, var)
        return ZERO if _is_zero(d) else Neg(d)
    if isinstance(e, BinOp):
        dl = _diff(e.left, var)
        dr = _diff(e.right, var)
        if e.op == "+":
            return _add(dl, dr)
        if e.op == "-":
            return _sub(dl, dr)
        if e.op == "*":
            return _add(_mul(dl, e.right), _mul(e.left, dr))
        # (l/r)' = l'/r - l r'/r^2
        return _sub(_div(dl, e.right), _div(_mul(e.left, dr), Pow(e.right, 2)))
    if isinstance(e, Pow):
        d = _diff(e.base, var)
        if _is_zero(d) or e.exponent == 0:
            return ZERO
        if e.exponent == 1:
            return d
        return _mul(Const(float(e.exponent)), _mul(Pow(e.base, e.exponent - 1), d))
    if isinstance(e, Call):
        d = _diff(e.arg, var)
        if _is_zero(d):
            return ZERO
        u = e.arg
        if e.func == "sin":
            outer: Expression = Call("cos", u)
        elif e.func == "cos":
            outer = Neg(Call("sin", u))
        elif e.func == "tanh":
            outer = _sub(ONE, Pow(Call("tanh", u), 2))
        elif e.func == "sqrt":
            outer = _div(ONE, _mul(Const(2.0), Call("sqrt", u)))
        else:  # abs: u/|u|, valid away from u = 0
            outer = _div(u, Call("abs", u))
        return _mul(outer, d)
    raise TypeError(f"not an expression node: {e!r}")


# --- structure queries -------------------------------------------------------


def polynomial_degree(e: Expression, var: str) -> int | None:
    """Degree of e as a polynomial in var, or None if not polynomial in var."""
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return 1 if e.name == var else 0
    if isinstance(e, Neg):
        return polynomial_degree(e.arg, var)
    if isinstance(e, BinOp):
        dl = polynomial_degree(e.left, var)
        dr = polynomial_degree(e.right, var)
        if dl is None or dr is None:
            return None
        if e.op in ("+", "-"):
            return max(dl, dr)
        if e.op == "*":
            return dl + dr
        return dl if dr == 0 else None
    if isinstance(e, Pow):
        db = polynomial_degree(e.base, var)
        if db is None:
            return None
        if db == 0:
            return 0
        return db * e.exponent if e.exponent >= 0 else None
    if isinstance(e, Call):
        da = polynomial_degree(e.arg, var)
        return 0 if da == 0 else None
    raise TypeError(f"not an expression node: {e!r}")


# --- compilation to plain Python --------------------------------------------

_FUNC_SOURCE = {
    "sin": "_sin",
    "cos": "_cos",
    "tanh": "_tanh",
    "sqrt": "_sqrt",
    "abs": "abs",
}


def _py_source(e: Expression) -> str:
    if isinstance(e, Const):
        return f"({e.value!r})"  # ** binds tighter than unary minus
    if isinstance(e, Var):
        return "lam" if e.name == "lambda" else e.name
    if isinstance(e, Neg):
        return f"(-{_py_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({_py_source(e.left)} {e.op} {_py_source(e.right)})"
    if isinstance(e, Pow):
        return f"({_py_source(e.base)} ** {e.exponent})"
    if isinstance(e, Call):
        return f"{_FUNC_SOURCE[e.func]}({_py_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


_PRELUDE = "_sin=math.sin, _cos=math.cos, _tanh=math.tanh, _sqrt=math.sqrt"


def compile_expression(e: Expression):
    """Compile to a fast callable (x1, x2, x3, lam) -> float.

    The compiled path does no finiteness checking; use evaluate() when
    diagnostics matter. ZeroDivisionError and ValueError pass through raw.
    """
    src = f"def _f(x1, x2, x3, lam, {_PRELUDE}):\n    return {_py_source(e)}\n"
    ns: dict = {"math": math}
    exec(src, ns)
    return ns["_f"]


def compile_field(components) -> Callable:
    """Compile several expressions into one callable returning a tuple."""
    body = ", ".join(_py_source(c) for c in components)
    src = f"def _f(x1, x2, x3, lam, {_PRELUDE}):\n    return ({body})\n"
    ns: dict = {"math": math}
    exec(src, ns)
    return ns["_f"]

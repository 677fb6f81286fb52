"""Small expression language for potentials and weights.

Grammar: real literals, the variable ``t``, named parameters, the binary
operators ``+ - * / ^`` (with ``^`` right-associative), unary minus,
parentheses, the functions log, exp, sqrt, sin, sinh, cosh, coth, pow,
abs, min, max, and piecewise definitions

    case(t < 1, -1, t < 2, 49, -1)

where conditions have the form ``t < c`` or ``t >= c``. Division by zero
and log/sqrt outside their domain evaluate to a NaN sentinel so that
sampling-based validation fails fast instead of propagating garbage.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable

from . import intervals as iv
from .errors import EvaluationError, ParseError

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>>=|[+\-*/^(),<]))"
)

_CONSTANTS = {"pi": math.pi, "e": math.e}

_UNARY_FNS = {
    "log": math.log,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "coth": lambda x: 1.0 / math.tanh(x),
    "abs": abs,
}

_NARY_FNS = {"pow": 2, "min": 2, "max": 2}

_FUNCTIONS = set(_UNARY_FNS) | set(_NARY_FNS) | {"case"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | name | op | end
    text: str
    pos: int


def _tokenize(src: str) -> list[Token]:
    out, i = [], 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if not m or m.end() == i:
            stripped = src[i:].lstrip()
            if not stripped:
                break
            bad = len(src) - len(stripped)
            raise ParseError(f"unexpected character {src[bad]!r}", bad,
                             ("number", "name", "operator"))
        if m.group("num") is not None:
            out.append(Token("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            out.append(Token("name", m.group("name"), m.start("name")))
        else:
            out.append(Token("op", m.group("op"), m.start("op")))
        i = m.end()
    out.append(Token("end", "", len(src)))
    return out


# --- AST ------------------------------------------------------------------

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Name(Node):
    ident: str


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Call(Node):
    fn: str
    args: tuple


@dataclass(frozen=True)
class Cmp(Node):
    op: str  # "<" or ">="
    left: Node
    right: Node


@dataclass(frozen=True)
class Case(Node):
    branches: tuple  # of (Cmp, Node)
    default: Node


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"got {t.text!r}", t.pos, (text,))
        return t

    def parse(self) -> Node:
        node = self.sum()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"trailing input {t.text!r}", t.pos, ("end of input",))
        return node

    def sum(self) -> Node:
        node = self.product()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek().text == "-":
            self.next()
            return Neg(self.unary())
        if self.peek().text == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().text == "^":
            self.next()
            return BinOp("^", base, self.unary())  # right-associative
        return base

    def atom(self) -> Node:
        t = self.next()
        if t.kind == "num":
            return Num(float(t.text))
        if t.kind == "name":
            if self.peek().text == "(":
                return self.call(t)
            return Name(t.text)
        if t.text == "(":
            node = self.sum()
            self.expect(")")
            return node
        raise ParseError(f"got {t.text!r}" if t.text else "unexpected end of input",
                         t.pos, ("number", "name", "("))

    def call(self, name_tok: Token) -> Node:
        fn = name_tok.text
        if fn not in _FUNCTIONS:
            raise ParseError(f"unknown function {fn!r}", name_tok.pos,
                             sorted(_FUNCTIONS))
        self.expect("(")
        if fn == "case":
            return self.case(name_tok)
        args = [self.argument()]
        while self.peek().text == ",":
            self.next()
            args.append(self.argument())
        self.expect(")")
        want = 1 if fn in _UNARY_FNS else _NARY_FNS[fn]
        if len(args) != want:
            raise ParseError(f"{fn} takes {want} argument(s), got {len(args)}",
                             name_tok.pos, ())
        return Call(fn, tuple(args))

    def argument(self) -> Node:
        node = self.sum()
        if self.peek().text in ("<", ">="):
            op = self.next().text
            return Cmp(op, node, self.sum())
        return node

    def case(self, name_tok: Token) -> Node:
        items = [self.argument()]
        while self.peek().text == ",":
            self.next()
            items.append(self.argument())
        self.expect(")")
        if len(items) % 2 == 0 or len(items) < 3:
            raise ParseError("case needs cond, expr pairs plus a default",
                             name_tok.pos, ())
        branches = []
        for j in range(0, len(items) - 1, 2):
            cond, val = items[j], items[j + 1]
            if not isinstance(cond, Cmp):
                raise ParseError("case condition must use < or >=", name_tok.pos,
                                 ("t < c", "t >= c"))
            if isinstance(val, Cmp):
                raise ParseError("comparison not allowed as a case value",
                                 name_tok.pos, ())
            branches.append((cond, val))
        default = items[-1]
        if isinstance(default, Cmp):
            raise ParseError("case default must be an expression", name_tok.pos, ())
        return Case(tuple(branches), default)


# --- evaluation -----------------------------------------------------------

def _eval(node: Node, env: dict) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        try:
            return env[node.ident]
        except KeyError:
            raise EvaluationError(f"unbound name {node.ident!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b if b != 0.0 else math.nan
        # "^"
        try:
            return math.pow(a, b)
        except (ValueError, OverflowError):
            return math.nan
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        if any(math.isnan(x) for x in args):
            return math.nan
        try:
            if node.fn in _UNARY_FNS:
                return _UNARY_FNS[node.fn](args[0])
            if node.fn == "pow":
                return math.pow(args[0], args[1])
            if node.fn == "min":
                return min(args)
            return max(args)
        except (ValueError, ZeroDivisionError, OverflowError):
            return math.nan
    if isinstance(node, Case):
        for cond, val in node.branches:
            lhs = _eval(cond.left, env)
            rhs = _eval(cond.right, env)
            hit = lhs < rhs if cond.op == "<" else lhs >= rhs
            if hit:
                return _eval(val, env)
        return _eval(node.default, env)
    raise TypeError(f"unknown node {node!r}")


def _eval_interval(node: Node, var: str, box: iv.Interval, env: dict) -> iv.Interval:
    if isinstance(node, Num):
        return iv.point(node.value)
    if isinstance(node, Name):
        if node.ident == var:
            return box
        return iv.point(env[node.ident])
    if isinstance(node, Neg):
        return -_eval_interval(node.arg, var, box, env)
    if isinstance(node, BinOp):
        a = _eval_interval(node.left, var, box, env)
        if node.op == "^":
            if not isinstance(node.right, (Num, Name)) and not isinstance(node.right, Neg):
                raise ValueError("interval power needs a constant exponent")
            expo = _eval(node.right, env)
            return iv.pow_iv(a, expo)
        b = _eval_interval(node.right, var, box, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Call):
        if node.fn == "pow":
            base = _eval_interval(node.args[0], var, box, env)
            return iv.pow_iv(base, _eval(node.args[1], env))
        args = [_eval_interval(a, var, box, env) for a in node.args]
        table = {
            "log": iv.log_iv, "exp": iv.exp_iv, "sqrt": iv.sqrt_iv,
            "sin": iv.sin_iv, "sinh": iv.sinh_iv, "cosh": iv.cosh_iv,
            "coth": iv.coth_iv, "abs": iv.abs_iv,
        }
        if node.fn in table:
            return table[node.fn](args[0])
        if node.fn == "min":
            return iv.Interval(min(a.lo for a in args), min(a.hi for a in args))
        return iv.Interval(max(a.lo for a in args), max(a.hi for a in args))
    if isinstance(node, Case):
        # hull over every branch whose condition can hold on the box
        out = None
        remaining = True
        for cond, val in node.branches:
            if not remaining:
                break
            c = _eval(cond.right, env)
            if cond.left != Name("t") and not isinstance(cond.left, Name):
                raise ValueError("interval case needs variable on the left")
            lo, hi = box.lo, box.hi
            holds_some = (lo < c) if cond.op == "<" else (hi >= c)
            holds_all = (hi < c) if cond.op == "<" else (lo >= c)
            if holds_some:
                piece = _eval_interval(val, var, box, env)
                out = piece if out is None else out.hull(piece)
            if holds_all:
                remaining = False
        if remaining:
            piece = _eval_interval(node.default, var, box, env)
            out = piece if out is None else out.hull(piece)
        return out
    raise TypeError(f"unknown node {node!r}")


def _free_names(node: Node, acc: set):
    if isinstance(node, Name):
        acc.add(node.ident)
    elif isinstance(node, BinOp):
        _free_names(node.left, acc)
        _free_names(node.right, acc)
    elif isinstance(node, Neg):
        _free_names(node.arg, acc)
    elif isinstance(node, Call):
        for a in node.args:
            _free_names(a, acc)
    elif isinstance(node, Cmp):
        _free_names(node.left, acc)
        _free_names(node.right, acc)
    elif isinstance(node, Case):
        for cond, val in node.branches:
            _free_names(cond, acc)
            _free_names(val, acc)
        _free_names(node.default, acc)


class Expression:
    """A parsed, immutable expression in one variable plus parameters."""

    def __init__(self, src: str, variable: str = "t"):
        self.src = src
        self.variable = variable
        self.ast = _Parser(src).parse()
        names = set()
        _free_names(self.ast, names)
        self.parameters = tuple(sorted(
            names - {variable} - set(_CONSTANTS)))

    def __repr__(self):
        return f"Expression({self.src!r})"

    def __call__(self, t: float, params: dict | None = None) -> float:
        env = dict(_CONSTANTS)
        if params:
            env.update(params)
        env[self.variable] = t
        return _eval(self.ast, env)

    def check_bound(self, params: dict | None) -> None:
        missing = [p for p in self.parameters if p not in (params or {})]
        if missing:
            raise EvaluationError(
                f"unbound parameter(s): {', '.join(missing)} in {self.src!r}")

    def interval(self, lo: float, hi: float, params: dict | None = None) -> iv.Interval:
        """Over-approximating range of the expression for t in [lo, hi]."""
        env = dict(_CONSTANTS)
        if params:
            env.update(params)
        return _eval_interval(self.ast, self.variable, iv.Interval(lo, hi), env)

    def breakpoints(self, params: dict | None = None) -> list[float]:
        """Constants appearing in case conditions, sorted ascending."""
        env = dict(_CONSTANTS)
        if params:
            env.update(params)
        pts: list[float] = []

        def walk(node):
            if isinstance(node, Case):
                for cond, val in node.branches:
                    pts.append(_eval(cond.right, env))
                    walk(val)
                walk(node.default)
            elif isinstance(node, BinOp):
                walk(node.left)
                walk(node.right)
            elif isinstance(node, Neg):
                walk(node.arg)
            elif isinstance(node, Call):
                for a in node.args:
                    walk(a)

        walk(self.ast)
        return sorted(set(pts))


def parse_expression(src: str, variable: str = "t") -> Expression:
    """Parse ``src`` into an evaluable :class:`Expression`.

    Raises :class:`~osckit.errors.ParseError` with position and the
    expected-token set on malformed input.
    """
    return Expression(src, variable=variable)


def sample_values(expr: Expression, params: dict, grid: Iterable[float]) -> list[float]:
    return [expr(t, params) for t in grid]

"""Small arithmetic expression language for model coefficient functions.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

Variables are ``x1 .. xn``.  Functions: sin, cos, sqrt, exp, abs.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "sin": (math.sin, np.sin),
    "cos": (math.cos, np.cos),
    "sqrt": (math.sqrt, np.sqrt),
    "exp": (math.exp, np.exp),
    "abs": (abs, np.abs),
}


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvaluationError(ExprError):
    def __init__(self, message, subexpr):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    raw = text.encode("utf-8")
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            offset = len(text[:pos].encode("utf-8"))
            offset += len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}", offset)
        kind = m.lastgroup
        start = len(text[: m.start(kind)].encode("utf-8"))
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", None, len(raw)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                digits = m.group(1)
                if int(digits) == 0 or digits.startswith("0"):
                    raise ExprSyntaxError(f"invalid variable index in {val!r}", off)
                return Var(int(digits))
            raise UnknownIdentifierError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", off)


def parse_expression(text):
    """Parse ``text`` into an immutable expression tree."""
    if not isinstance(text, str):
        raise TypeError("expression must be a string")
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 5


def to_string(node):
    """Canonical text form; re-parsing it yields an equal tree."""
    if isinstance(node, Num):
        if node.value.is_integer() and abs(node.value) < 1e16:
            return str(int(node.value))
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.operand)
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[node.op]
    left = to_string(node.left)
    right = to_string(node.right)
    if node.op == "^":
        # base binds tighter than anything but atoms; exponent is a unary operand
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


def free_variables(node):
    """Set of variable indices appearing in ``node``."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return free_variables(node.operand if isinstance(node, Neg) else node.arg)
    return free_variables(node.left) | free_variables(node.right)


def evaluate(node, point):
    """Evaluate at one point (``point[k-1]`` is the value of ``xk``)."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.index > len(point):
            raise EvaluationError(f"point has only {len(point)} coordinates", to_string(node))
        return float(point[node.index - 1])
    if isinstance(node, Neg):
        return -evaluate(node.operand, point)
    if isinstance(node, Call):
        arg = evaluate(node.arg, point)
        if node.func == "sqrt" and arg < 0:
            raise EvaluationError("sqrt of negative value", to_string(node))
        try:
            value = FUNCTIONS[node.func][0](arg)
        except OverflowError:
            raise EvaluationError("overflow", to_string(node)) from None
        return _finite(value, node)
    left = evaluate(node.left, point)
    right = evaluate(node.right, point)
    if node.op == "+":
        value = left + right
    elif node.op == "-":
        value = left - right
    elif node.op == "*":
        value = left * right
    elif node.op == "/":
        if right == 0:
            raise EvaluationError("division by zero", to_string(node))
        value = left / right
    else:
        if left < 0 and not float(right).is_integer():
            raise EvaluationError("non-integer power of negative base", to_string(node))
        if left == 0 and right < 0:
            raise EvaluationError("division by zero", to_string(node))
        try:
            value = math.pow(left, right)
        except OverflowError:
            raise EvaluationError("overflow", to_string(node)) from None
    return _finite(value, node)


def _finite(value, node):
    if not math.isfinite(value):
        raise EvaluationError("overflow", to_string(node))
    return value


def evaluate_array(node, points):
    """Vectorized evaluation over the rows of an ``(M, n)`` array.

    Raises :class:`EvaluationError` naming the first offending row when any
    row hits a domain violation.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    with np.errstate(all="ignore"):
        out = _eval_array(node, points)
    return np.broadcast_to(out, (points.shape[0],)).astype(float, copy=True)


def _fail_rows(mask, message, node):
    if np.any(mask):
        row = int(np.flatnonzero(np.broadcast_to(mask, np.shape(mask)))[0]) if np.ndim(mask) else 0
        raise EvaluationError(f"{message} (row {row})", to_string(node))


def _eval_array(node, pts):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        if node.index > pts.shape[1]:
            raise EvaluationError(f"points have only {pts.shape[1]} coordinates", to_string(node))
        return pts[:, node.index - 1]
    if isinstance(node, Neg):
        return -_eval_array(node.operand, pts)
    if isinstance(node, Call):
        arg = _eval_array(node.arg, pts)
        if node.func == "sqrt":
            _fail_rows(arg < 0, "sqrt of negative value", node)
        value = FUNCTIONS[node.func][1](arg)
        _fail_rows(~np.isfinite(value), "overflow", node)
        return value
    left = _eval_array(node.left, pts)
    right = _eval_array(node.right, pts)
    if node.op == "+":
        value = left + right
    elif node.op == "-":
        value = left - right
    elif node.op == "*":
        value = left * right
    elif node.op == "/":
        _fail_rows(right == 0, "division by zero", node)
        value = left / right
    else:
        bad = (left < 0) & (np.floor(right) != right)
        _fail_rows(bad, "non-integer power of negative base", node)
        _fail_rows((left == 0) & (right < 0), "division by zero", node)
        value = np.power(left, right)
    _fail_rows(~np.isfinite(value), "overflow", node)
    return value

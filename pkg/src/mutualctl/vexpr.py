"""A small arithmetic language for the right-hand sides f(x, y), g(x, y).

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

``VAR`` is ``x1..xn`` or ``y1..yn``; ``FUNC`` is one of sin, cos, exp, tanh,
sqrt, abs (one argument) or min, max (two or more). Evaluation is
vectorized: variables may hold arrays of sample points.

Also provides sampled (uncertified) estimates of the Lipschitz and
linear-growth constants of a vector field on a box around the origin.
"""

import re
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .exceptions import DomainError, ExpressionEvaluationError, ExpressionSyntaxError

DEFAULT_BOX_RADIUS = 10.0
DEFAULT_SAMPLES = 2000
INFLATION = 1.05

_UNARY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
_NARY_FUNCS = {"min": np.minimum, "max": np.maximum}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)
_VAR_RE = re.compile(r"([xy])([1-9]\d*)$")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str
    index: int  # zero based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}",
                                        _byte_offset(text, pos))
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text, n):
        self.text = text
        self.n = n
        self.tokens = _tokenize(text)
        self.i = 0

    def error(self, message, pos=None):
        if pos is None:
            pos = self.tokens[self.i][2]
        return ExpressionSyntaxError(message, _byte_offset(self.text, pos))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            shown = text or "end of input"
            raise self.error(f"expected {value!r}, found {shown!r}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise self.error(f"unexpected {text!r}", pos)
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
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                return self.call(text, pos)
            m = _VAR_RE.match(text)
            if m is None:
                raise self.error(f"unknown identifier {text!r}", pos)
            index = int(m.group(2))
            if index > self.n:
                raise self.error(
                    f"variable {text} out of range for dimension n={self.n}", pos)
            return Var(m.group(1), index - 1)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected {text or 'end of input'!r}", pos)

    def call(self, name, pos):
        if name not in _UNARY_FUNCS and name not in _NARY_FUNCS:
            raise self.error(f"unknown function {name!r}", pos)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[:2] == ("op", ","):
            self.take()
            args.append(self.expr())
        self.expect(")")
        if name in _UNARY_FUNCS and len(args) != 1:
            raise self.error(f"{name} takes exactly one argument", pos)
        if name in _NARY_FUNCS and len(args) < 2:
            raise self.error(f"{name} takes at least two arguments", pos)
        return Call(name, tuple(args))


def _to_string(node):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{_to_string(node.arg)})"
    if isinstance(node, BinOp):
        return f"({_to_string(node.left)} {node.op} {_to_string(node.right)})"
    return f"{node.name}({', '.join(_to_string(a) for a in node.args)})"


def _evaluate(node, x, y):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x[node.index] if node.kind == "x" else y[node.index]
    if isinstance(node, Neg):
        return -_evaluate(node.arg, x, y)
    if isinstance(node, Call):
        args = [_evaluate(a, x, y) for a in node.args]
        if node.name == "sqrt" and np.any(np.asarray(args[0]) < 0):
            raise ExpressionEvaluationError("sqrt of a negative number")
        if node.name in _UNARY_FUNCS:
            return _UNARY_FUNCS[node.name](args[0])
        out = args[0]
        for a in args[1:]:
            out = _NARY_FUNCS[node.name](out, a)
        return out
    left = _evaluate(node.left, x, y)
    right = _evaluate(node.right, x, y)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            raise ExpressionEvaluationError("division by zero")
        return left / right
    return np.power(left, right)


class Expression:
    """Parsed scalar expression in the variables x1..xn, y1..yn."""

    def __init__(self, root, n, source=None):
        self.root = root
        self.n = n
        self.source = source if source is not None else _to_string(root)

    def __str__(self):
        return _to_string(self.root)

    def __repr__(self):
        return f"Expression({self.source!r}, n={self.n})"

    def __call__(self, x, y):
        """Evaluate at ``x, y`` of shape (n,) or (n, N)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(all="ignore"):
            value = _evaluate(self.root, x, y)
        return np.broadcast_to(np.asarray(value, dtype=float), x.shape[1:]).copy()


def parse(text, n):
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    if n < 1:
        raise DomainError("dimension n must be >= 1")
    return Expression(_Parser(text, n).parse(), n, source=text)


class VectorField:
    """n expressions evaluated together as a map R^n x R^n -> R^n."""

    def __init__(self, components, n=None):
        components = [components] if isinstance(components, str) else list(components)
        if n is None:
            n = len(components)
        exprs = []
        for c in components:
            exprs.append(c if isinstance(c, Expression) else parse(c, n))
        if len(exprs) != n:
            raise DomainError(f"vector field needs {n} components, got {len(exprs)}")
        self.n = n
        self.components = tuple(exprs)

    def __repr__(self):
        return f"VectorField({[e.source for e in self.components]!r})"

    def sources(self):
        return [e.source for e in self.components]

    def __call__(self, x, y):
        """Evaluate at points of shape (n,) or (n, N); returns the same shape."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape[0] != self.n or y.shape != x.shape:
            raise DomainError(
                f"expected x, y with leading dimension {self.n}, got {x.shape}, {y.shape}")
        out = np.empty(x.shape)
        for i, expr in enumerate(self.components):
            try:
                value = expr(x, y)
            except ExpressionEvaluationError as exc:
                raise ExpressionEvaluationError(str(exc), component=i) from None
            if not np.all(np.isfinite(value)):
                raise ExpressionEvaluationError(
                    "non-finite value (domain violation or overflow)", component=i)
            out[i] = value
        return out


def evaluate(field, x, y):
    return field(x, y)


@dataclass(frozen=True)
class ConstantEstimate:
    """Constants of one field: ``a`` (in x), ``b`` (in y) and ``gamma`` (offset).

    For g the same slots hold c, d and delta.
    """

    a: float
    b: float
    gamma: float = 0.0
    box_radius: float = DEFAULT_BOX_RADIUS
    sample_count: int = 0
    certified: bool = False


def _sample_box(rng, n, count, radius):
    return rng.uniform(-radius, radius, size=(n, count))


def _check_sampling(box_radius, samples):
    if not box_radius > 0:
        raise DomainError("box_radius must be positive")
    if samples < 100:
        raise DomainError("at least 100 samples are required")


def _max_quotient(field, moving, fixed, radius, rng, in_x):
    n, count = moving.shape
    half = count // 2
    # half the partners are close (local slope), half independent (global)
    near = moving[:, :half] + rng.normal(scale=1e-4 * radius, size=(n, half))
    far = _sample_box(rng, n, count - half, radius)
    partner = np.concatenate([near, far], axis=1)
    if in_x:
        diff = field(moving, fixed) - field(partner, fixed)
    else:
        diff = field(fixed, moving) - field(fixed, partner)
    dist = np.linalg.norm(moving - partner, axis=0)
    ok = dist > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(np.linalg.norm(diff, axis=0)[ok] / dist[ok]))


def estimate_lipschitz(field, box_radius=DEFAULT_BOX_RADIUS, samples=DEFAULT_SAMPLES,
                       random_state=0):
    """Sampled Lipschitz constants of ``field`` in x and in y, inflated by 5%."""
    _check_sampling(box_radius, samples)
    rng = np.random.default_rng(random_state)
    n = field.n
    x = _sample_box(rng, n, samples, box_radius)
    y = _sample_box(rng, n, samples, box_radius)
    a = _max_quotient(field, x, y, box_radius, rng, in_x=True)
    b = _max_quotient(field, y, x, box_radius, rng, in_x=False)
    return ConstantEstimate(a=float(INFLATION * a), b=float(INFLATION * b), gamma=0.0,
                            box_radius=box_radius, sample_count=samples)


def estimate_growth(field, box_radius=DEFAULT_BOX_RADIUS, samples=DEFAULT_SAMPLES,
                    random_state=0):
    """Sampled constants with |f(x, y)| <= a|x| + b|y| + gamma on the box.

    Among all triples valid on the samples, picks the one minimizing the
    bound at |x| = |y| = radius/2 (a linear program), then inflates by 5%.
    """
    _check_sampling(box_radius, samples)
    rng = np.random.default_rng(random_state)
    n = field.n
    x = _sample_box(rng, n, samples, box_radius)
    y = _sample_box(rng, n, samples, box_radius)
    # the axes and the origin carry the extremes of many fields
    x[:, :samples // 4] = 0.0
    y[:, samples // 4: samples // 2] = 0.0
    x[:, -1] = y[:, -1] = 0.0
    fx = np.linalg.norm(field(x, y), axis=0)
    nx = np.linalg.norm(x, axis=0)
    ny = np.linalg.norm(y, axis=0)

    half = 0.5 * box_radius
    result = linprog(
        c=[half, half, 1.0],
        A_ub=-np.column_stack([nx, ny, np.ones(samples)]),
        b_ub=-fx,
        bounds=[(0, None)] * 3,
        method="highs",
    )
    if result.status != 0:
        raise ArithmeticError(f"growth fit failed: {result.message}")
    a, b, gamma = np.maximum(result.x, 0.0)
    return ConstantEstimate(a=float(INFLATION * a), b=float(INFLATION * b),
                            gamma=float(INFLATION * gamma),
                            box_radius=box_radius, sample_count=samples)

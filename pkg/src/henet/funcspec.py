"""Target functions, an expression parser, and grid sampling."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ExpressionSyntaxError, NonFinite, UnknownIdentifier


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def _relu(x):
    return np.maximum(x, 0.0)


BUILTINS: dict[str, Callable] = {
    "sigmoid": sigmoid,
    "tanh": np.tanh,
    "relu": _relu,
    "abs": np.abs,
    "sign": np.sign,
    "sin": np.sin,
    "gauss": lambda x: np.exp(-np.square(x)),
}

FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "abs": np.abs,
    "sign": np.sign,
}


# ---------------------------------------------------------------------------
# Expression trees


@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, x):
        return self.value + 0.0 * x

    def to_text(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    def eval(self, x):
        return x

    def to_text(self):
        return "x"


@dataclass(frozen=True)
class Neg:
    arg: object

    def eval(self, x):
        return -self.arg.eval(x)

    def to_text(self):
        return f"(-{self.arg.to_text()})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def eval(self, x):
        a, b = self.left.eval(x), self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def to_text(self):
        return f"({self.left.to_text()} {self.op} {self.right.to_text()})"


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int

    def eval(self, x):
        return self.base.eval(x) ** float(self.exponent)

    def to_text(self):
        return f"({self.base.to_text()}^{self.exponent})"


@dataclass(frozen=True)
class Call:
    name: str
    arg: object

    def eval(self, x):
        return FUNCTIONS[self.name](self.arg.eval(x))

    def to_text(self):
        return f"{self.name}({self.arg.to_text()})"


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        kind = ("num", "name", "op")[m.lastindex - 1]
        tokens.append((kind, m.group(m.lastindex), m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    # binding power: + - < * / < unary minus < ^
    BINARY = {"+": 10, "-": 10, "*": 20, "/": 20}
    UNARY = 30
    POWER = 40

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _offset(self, tok):
        return len(self.text[: tok[2]].encode()) if tok[0] != "end" else tok[2]

    def error(self, msg, tok=None):
        tok = tok or self.tokens[self.i]
        raise ExpressionSyntaxError(msg, self.text, self._offset(tok))

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] == "num":
            self.error(f"expected {value!r}", tok)

    def parse(self):
        node = self.expression(0)
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expression(self, min_bp):
        left = self.prefix()
        while True:
            kind, val, _ = self.peek()
            if kind != "op":
                if kind == "end" or min_bp > 0:
                    return left
                self.error(f"unexpected {val!r}")
            if val == "^":
                if self.POWER < min_bp:
                    return left
                self.take()
                left = Pow(left, self.exponent())
            elif val in self.BINARY:
                bp = self.BINARY[val]
                if bp <= min_bp:
                    return left
                self.take()
                left = BinOp(val, left, self.expression(bp))
            elif val == ")":
                return left
            else:
                self.error(f"unexpected {val!r}")

    def exponent(self):
        sign = 1
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            sign = -1
        tok = self.take()
        if tok[0] != "num" or not re.fullmatch(r"\d+", tok[1]):
            self.error("exponent must be an integer literal", tok)
        return sign * int(tok[1])

    def prefix(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "x":
                return Var()
            if val not in FUNCTIONS:
                raise UnknownIdentifier(f"unknown identifier {val!r} at offset {self._offset(tok)}")
            self.expect("(")
            arg = self.expression(0)
            self.expect(")")
            return Call(val, arg)
        if val == "-":
            return Neg(self.expression(self.UNARY))
        if val == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        self.error("unexpected end of input" if kind == "end" else f"unexpected {val!r}", tok)


def parse_ast(text: str):
    return _Parser(text).parse()


def pretty(node) -> str:
    return node.to_text()


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetFunction:
    """A real function to approximate on [-radius, radius] at a grid step."""

    source: str
    radius: float = 30.0
    sample_step: float = 0.01

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 < self.sample_step <= 2 * self.radius:
            raise ValueError("sample_step must lie in (0, 2*radius]")
        self._fn  # fail early on bad sources

    @property
    def _fn(self) -> Callable:
        if self.source in BUILTINS:
            return BUILTINS[self.source]
        ast = parse_ast(self.source)
        return lambda x: ast.eval(np.asarray(x, dtype=float))

    def __call__(self, x):
        with np.errstate(all="ignore"):
            y = self._fn(x)
        return y if np.ndim(y) else float(y)


def parse_expression(text: str, radius: float = 30.0, sample_step: float = 0.01) -> TargetFunction:
    parse_ast(text)
    return TargetFunction(text, radius, sample_step)


def make_target(source: str, radius: float = 30.0, sample_step: float = 0.01) -> TargetFunction:
    """Builtin name or expression text."""
    return TargetFunction(source, radius, sample_step)


@dataclass(frozen=True)
class SampleSet:
    xs: np.ndarray
    ys: np.ndarray

    def __len__(self):
        return len(self.xs)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("x,y\n")
            for x, y in zip(self.xs, self.ys):
                fh.write(f"{x:.17g},{y:.17g}\n")

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["x", "y"]:
            raise ValueError("sample CSV must start with header 'x,y'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]]).reshape(-1, 2)
        return cls(data[:, 0].copy(), data[:, 1].copy())


def grid(radius: float, step: float) -> np.ndarray:
    """Arithmetic grid -R, -R+step, ..., with R included when 2R/step is whole."""
    ratio = 2 * radius / step
    n = int(math.floor(ratio + 1e-9)) + 1
    i = np.arange(n, dtype=float)
    if n > 1 and abs(ratio - (n - 1)) <= 1e-9 * max(ratio, 1.0):
        # exactly symmetric grid: keeps x=0 and the endpoints exact
        return radius * (2 * i - (n - 1)) / (n - 1)
    return -radius + i * step


def sample(f: TargetFunction) -> SampleSet:
    xs = grid(f.radius, f.sample_step)
    ys = np.asarray(f(xs), dtype=float)
    bad = ~np.isfinite(ys)
    if bad.any():
        raise NonFinite(f"{f.source} is not finite at x={xs[bad][0]!r}")
    return SampleSet(xs, ys)


def split_train_validation(s: SampleSet, keep_every: int) -> tuple[SampleSet, SampleSet]:
    if keep_every < 1:
        raise ValueError("keep_every must be >= 1")
    mask = np.arange(len(s)) % keep_every == 0
    return SampleSet(s.xs[mask], s.ys[mask]), SampleSet(s.xs[~mask], s.ys[~mask])

"""Dense univariate polynomials with multiplication-cost accounting.

Coefficients are stored constant term first. Every evaluation routine returns
the value together with a :class:`MultCount` describing how many ciphertext
and scalar multiplications an encrypted evaluation of the same schedule would
need, and the depth of the longest multiplication chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CyclicPlan, DegreeLimitExceeded, IllConditioned, InsufficientData

DEGREE_CAP = 4096


@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float] = (0.0,)):
        cs = [float(c) for c in coeffs]
        while len(cs) > 1 and cs[-1] == 0.0:
            cs.pop()
        if not cs:
            cs = [0.0]
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, x):
        acc = self.coeffs[-1] + 0 * np.asarray(x, dtype=float)
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc if np.ndim(acc) else float(acc)

    def __add__(self, other):
        return poly_add(self, _as_poly(other))

    __radd__ = __add__

    def __sub__(self, other):
        return poly_add(self, poly_scale(_as_poly(other), -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return poly_scale(self, other)
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return poly_scale(self, -1.0)

    def __len__(self):
        return len(self.coeffs)

    def to_text(self) -> str:
        """One coefficient per line, constant term first, shortest exact decimal."""
        return "".join(_fmt(c) + "\n" for c in self.coeffs)

    @classmethod
    def from_text(cls, text: str) -> "Polynomial":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        return cls([float(ln) for ln in lines])


def _fmt(c: float) -> str:
    s = repr(float(c))
    return s[:-2] if s.endswith(".0") else s


def _as_poly(p) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    return Polynomial([float(p)])


@dataclass(frozen=True)
class MultCount:
    ct_mults: int = 0
    scalar_mults: int = 0
    depth: int = 0

    def __post_init__(self):
        if min(self.ct_mults, self.scalar_mults, self.depth) < 0:
            raise ValueError("MultCount fields must be nonnegative")


def _check_cap(degree: int, cap: int):
    if degree > cap:
        raise DegreeLimitExceeded(f"result degree {degree} exceeds cap {cap}")


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    n = max(len(p.coeffs), len(q.coeffs))
    a = np.zeros(n)
    a[: len(p.coeffs)] += p.coeffs
    a[: len(q.coeffs)] += q.coeffs
    return Polynomial(a)


def poly_scale(p: Polynomial, c: float) -> Polynomial:
    return Polynomial([c * v for v in p.coeffs])


def poly_mul(p: Polynomial, q: Polynomial, cap: int = DEGREE_CAP) -> Polynomial:
    if p.is_zero() or q.is_zero():
        return Polynomial([0.0])
    _check_cap(p.degree + q.degree, cap)
    return Polynomial(np.convolve(p.coeffs, q.coeffs))


def poly_compose(p: Polynomial, q: Polynomial, cap: int = DEGREE_CAP) -> Polynomial:
    """Return p(q(x)), expanded by running Horner's rule over polynomials."""
    if not q.is_zero():
        _check_cap(p.degree * q.degree, cap)
    acc = Polynomial([p.coeffs[-1]])
    for c in reversed(p.coeffs[:-1]):
        acc = poly_add(poly_mul(acc, q, cap), Polynomial([c]))
    return acc


def eval_horner(p: Polynomial, x):
    """Horner's rule. Every step multiplies the running value by x."""
    acc = p.coeffs[-1] + 0 * np.asarray(x, dtype=float)
    for c in reversed(p.coeffs[:-1]):
        acc = acc * x + c
    acc = acc if np.ndim(acc) else float(acc)
    return acc, MultCount(ct_mults=p.degree, scalar_mults=0, depth=p.degree)


class _Tracer:
    """Counts multiplications on values that depend on the encrypted input."""

    def __init__(self):
        self.ct_mults = 0
        self.scalar_mults = 0

    def mul(self, a, b):
        (va, da, ea), (vb, db, eb) = a, b
        if ea and eb:
            self.ct_mults += 1
        elif ea or eb:
            self.scalar_mults += 1
        else:
            return (va * vb, 0, False)
        return (va * vb, max(da, db) + 1, True)

    @staticmethod
    def add(a, b):
        return (a[0] + b[0], max(a[1], b[1]), a[2] or b[2])


def eval_paterson_stockmeyer(p: Polynomial, x):
    """Baby-step giant-step evaluation with about 2*sqrt(d) nonscalar products.

    With k = ceil(sqrt(d+1)), the powers x^1..x^k are built in log depth, each
    block of k coefficients is combined with scalar products only, and the
    blocks are joined by Horner's rule in x^k.
    """
    d = p.degree
    x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    if d == 0:
        return p.coeffs[0] + 0 * x, MultCount()
    tr = _Tracer()
    k = math.isqrt(d + 1)
    if k * k < d + 1:
        k += 1
    powers = [None, (x, 0, True)]
    for j in range(2, k + 1):
        powers.append(tr.mul(powers[j // 2], powers[(j + 1) // 2]))

    def block(b):
        cs = p.coeffs[b * k : (b + 1) * k]
        acc = (cs[0] + 0 * x, 0, False)
        for j in range(1, len(cs)):
            if cs[j] != 0.0:
                acc = tr.add(acc, tr.mul((cs[j], 0, False), powers[j]))
        return acc

    m = -(-(d + 1) // k)
    acc = block(m - 1)
    for b in range(m - 2, -1, -1):
        acc = tr.add(tr.mul(acc, powers[k]), block(b))
    value = acc[0] if np.ndim(acc[0]) else float(acc[0])
    return value, MultCount(tr.ct_mults, tr.scalar_mults, acc[1])


def fit_least_squares(xs, ys, degree: int) -> Polynomial:
    """Least-squares polynomial of degree <= ``degree`` through (xs, ys).

    Solved by QR factorization of the column-normalized Vandermonde matrix.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if degree < 0 or xs.ndim != 1 or xs.shape != ys.shape:
        raise InsufficientData("xs and ys must be equal-length 1-D sequences")
    if len(np.unique(xs)) < degree + 1:
        raise InsufficientData(f"need at least {degree + 1} distinct x values")
    ynorm = float(np.linalg.norm(ys))
    if ynorm == 0.0:
        return Polynomial([0.0])
    V = np.vander(xs, degree + 1, increasing=True)
    norms = np.linalg.norm(V, axis=0)
    Q, R = np.linalg.qr(V / norms)
    diag = np.abs(np.diag(R))
    if diag.min() <= np.finfo(float).eps * diag.max() * len(xs):
        raise IllConditioned("Vandermonde factor is numerically singular")
    rhs = Q.T @ ys
    scaled = solve_triangular(R, rhs)
    if np.linalg.norm(R @ scaled - rhs) > 1e-6 * ynorm or not np.all(np.isfinite(scaled)):
        raise IllConditioned("triangular solve residual too large")
    return Polynomial(scaled / norms)


_ARITY = {"x": 0, "const": 0, "add": 2, "sub": 2, "neg": 1, "mul": 2, "square": 1}


@dataclass(frozen=True)
class PlanNode:
    """One node of an evaluation plan.

    ``op`` is one of ``x``, ``const``, ``add``, ``sub``, ``neg``, ``mul`` or
    ``square``; ``args`` names operand nodes.
    """

    op: str
    args: tuple[str, ...] = ()
    value: float = 0.0


@dataclass(frozen=True)
class Plan:
    nodes: Mapping[str, PlanNode]
    root: str

    def _order(self) -> list[str]:
        """Topological order of the nodes reachable from the root."""
        state: dict[str, int] = {}
        order: list[str] = []
        stack = [(self.root, False)]
        while stack:
            name, done = stack.pop()
            if done:
                state[name] = 2
                order.append(name)
                continue
            if state.get(name) == 2:
                continue
            if state.get(name) == 1:
                raise CyclicPlan(f"cycle through node {name!r}")
            if name not in self.nodes:
                raise KeyError(f"plan references unknown node {name!r}")
            node = self.nodes[name]
            if len(node.args) != _ARITY[node.op]:
                raise ValueError(f"node {name!r}: {node.op} takes {_ARITY[node.op]} operands")
            state[name] = 1
            stack.append((name, True))
            for a in node.args:
                if state.get(a) == 1:
                    raise CyclicPlan(f"cycle through node {a!r}")
                if state.get(a) != 2:
                    stack.append((a, False))
        return order

    def evaluate(self, x):
        vals: dict[str, object] = {}
        for name in self._order():
            n = self.nodes[name]
            a = [vals[s] for s in n.args]
            if n.op == "x":
                vals[name] = x
            elif n.op == "const":
                vals[name] = n.value
            elif n.op == "add":
                vals[name] = a[0] + a[1]
            elif n.op == "sub":
                vals[name] = a[0] - a[1]
            elif n.op == "neg":
                vals[name] = -a[0]
            elif n.op == "mul":
                vals[name] = a[0] * a[1]
            else:
                vals[name] = a[0] * a[0]
        return vals[self.root]


def mult_depth_of_plan(plan: Plan) -> MultCount:
    """Count multiplications in a plan and the longest multiplication chain.

    A product of two input-dependent operands is a ciphertext multiplication,
    a product with exactly one input-dependent operand is a scalar
    multiplication, and products of constants are folded for free.
    """
    depth: dict[str, int] = {}
    enc: dict[str, bool] = {}
    ct = sc = 0
    for name in plan._order():
        n = plan.nodes[name]
        if n.op == "x":
            depth[name], enc[name] = 0, True
            continue
        if n.op == "const":
            depth[name], enc[name] = 0, False
            continue
        args = n.args if n.op != "square" else n.args * 2
        e = [enc[a] for a in args]
        dmax = max(depth[a] for a in args)
        if n.op in ("mul", "square") and any(e):
            if all(e):
                ct += 1
            else:
                sc += 1
            dmax += 1
        depth[name], enc[name] = dmax, any(e)
    return MultCount(ct_mults=ct, scalar_mults=sc, depth=depth[plan.root])

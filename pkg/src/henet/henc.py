"""A leveled homomorphic-arithmetic simulator.

Ciphertexts are plain complex slot vectors carrying a level (remaining
multiplicative budget). There is no cryptography here: the simulator exists to
account for depth, multiplication counts and bootstraps, and optionally to
inject Gaussian noise after every multiplication.

Cost model: ``mul`` and ``cmul`` consume one level; ``add``, ``cadd``,
``neg`` and ``imul`` are free; binary operations align both operands to the
lower level at no cost; ``bootstrap`` restores the full budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContextMismatch, LevelExhausted, NonFinite
from .extract import _log2_ceil
from .netcore import Network

_context_ids = itertools.count()


@dataclass(frozen=True, eq=False)
class Ciphertext:
    slots: np.ndarray
    level: int
    context_id: int
    # multiplicative depth of the circuit that produced this value
    depth: int = 0


@dataclass(frozen=True)
class SineParams:
    t: int = 10
    k: int = 7

    def __post_init__(self):
        if not 0 <= self.t <= 40:
            raise ValueError("t must lie in [0, 40]")
        if not 1 <= self.k <= 64:
            raise ValueError("k must lie in [1, 64]")


class Context:
    def __init__(
        self,
        slot_count: int = 8192,
        max_level: int = 40,
        noise_sigma: float = 0.0,
        auto_bootstrap: bool = False,
        seed: int = 0,
        bootstrap_noise: float = 0.0,
    ):
        if slot_count < 1 or max_level < 1 or noise_sigma < 0:
            raise ValueError("slot_count and max_level must be positive, noise_sigma nonnegative")
        self.slot_count = slot_count
        self.max_level = max_level
        self.noise_sigma = noise_sigma
        self.auto_bootstrap = auto_bootstrap
        self.bootstrap_noise = bootstrap_noise
        self.id = next(_context_ids)
        self.ct_mults = 0
        self.scalar_mults = 0
        self.bootstraps = 0
        self._rng = np.random.default_rng(seed)

    def counters(self) -> dict:
        return {"ct_mults": self.ct_mults, "scalar_mults": self.scalar_mults, "bootstraps": self.bootstraps}

    # -- helpers ---------------------------------------------------------

    def _wrap(self, slots, level, depth) -> Ciphertext:
        slots = np.asarray(slots, dtype=complex)
        slots.flags.writeable = False
        return Ciphertext(slots, level, self.id, depth)

    def _own(self, *cts):
        for ct in cts:
            if ct.context_id != self.id:
                raise ContextMismatch("ciphertext belongs to a different context")

    def _noise(self, slots):
        if self.noise_sigma > 0:
            n = self.slot_count
            slots = slots + self.noise_sigma * (self._rng.standard_normal(n) + 1j * self._rng.standard_normal(n))
        return slots

    def _ready(self, ct: Ciphertext) -> Ciphertext:
        if ct.level >= 1:
            return ct
        if not self.auto_bootstrap:
            raise LevelExhausted("no multiplicative levels left")
        return self.bootstrap(ct)

    # -- encryption ------------------------------------------------------

    def encrypt(self, values) -> Ciphertext:
        values = np.asarray(values, dtype=complex).ravel()
        if len(values) > self.slot_count:
            raise ValueError(f"{len(values)} values do not fit in {self.slot_count} slots")
        slots = np.zeros(self.slot_count, dtype=complex)
        slots[: len(values)] = values
        return self._wrap(slots, self.max_level, 0)

    def encrypt_const(self, value) -> Ciphertext:
        return self._wrap(np.full(self.slot_count, value, dtype=complex), self.max_level, 0)

    def decrypt(self, ct: Ciphertext) -> np.ndarray:
        self._own(ct)
        return ct.slots.copy()

    # -- free operations -------------------------------------------------

    def add(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        self._own(a, b)
        return self._wrap(a.slots + b.slots, min(a.level, b.level), max(a.depth, b.depth))

    def sub(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        return self.add(a, self.neg(b))

    def cadd(self, ct: Ciphertext, c) -> Ciphertext:
        self._own(ct)
        return self._wrap(ct.slots + c, ct.level, ct.depth)

    def neg(self, ct: Ciphertext) -> Ciphertext:
        self._own(ct)
        return self._wrap(-ct.slots, ct.level, ct.depth)

    def imul(self, ct: Ciphertext) -> Ciphertext:
        self._own(ct)
        return self._wrap(ct.slots * 1j, ct.level, ct.depth)

    # -- leveled operations ----------------------------------------------

    def mul(self, a: Ciphertext, b: Ciphertext) -> Ciphertext:
        self._own(a, b)
        same = a is b
        a = self._ready(a)
        b = a if same else self._ready(b)
        self.ct_mults += 1
        slots = self._noise(a.slots * b.slots)
        return self._wrap(slots, min(a.level, b.level) - 1, max(a.depth, b.depth) + 1)

    def square(self, a: Ciphertext) -> Ciphertext:
        return self.mul(a, a)

    def cmul(self, ct: Ciphertext, c) -> Ciphertext:
        self._own(ct)
        ct = self._ready(ct)
        self.scalar_mults += 1
        slots = self._noise(ct.slots * c)
        return self._wrap(slots, ct.level - 1, ct.depth + 1)

    def bootstrap(self, ct: Ciphertext) -> Ciphertext:
        self._own(ct)
        self.bootstraps += 1
        return self._wrap(ct.slots + self.bootstrap_noise, self.max_level, ct.depth)

    def ensure_level(self, ct: Ciphertext, needed: int) -> Ciphertext:
        """Bootstrap ``ct`` if it cannot afford ``needed`` more levels."""
        if ct.level < needed and self.auto_bootstrap and needed <= self.max_level:
            return self.bootstrap(ct)
        return ct


# ---------------------------------------------------------------------------


def _check_finite(ct: Ciphertext):
    if not np.all(np.isfinite(ct.slots)):
        raise NonFinite("ciphertext slots overflowed")


def exp_series(ctx: Context, arg: Ciphertext, p: SineParams) -> Ciphertext:
    """exp(arg) for a small ``arg``: k-term Taylor sum, then t repeated squarings."""
    acc = ctx.encrypt_const(1.0)
    pw = ctx.encrypt_const(1.0)
    for i in range(1, p.k + 1):
        pw = ctx.mul(pw, arg)
        acc = ctx.add(acc, ctx.cmul(pw, 1.0 / math.factorial(i)))
    for _ in range(p.t):
        acc = ctx.mul(acc, acc)
    return acc


def sine_compute(ctx: Context, ct: Ciphertext, p: SineParams = SineParams()) -> Ciphertext:
    """sin(x) per slot via Euler's formula.

    The input is scaled by 1/2**t and turned into i*x; exp(ix) and exp(-ix)
    are each built from their own Taylor chain and squared back up, and the
    result is i * (-0.5) * (exp(ix) - exp(-ix)). Consumes k + t + 3 levels.
    """
    x = ctx.imul(ctx.cmul(ct, 1.0 / 2**p.t))
    nx = ctx.neg(x)
    res = ctx.add(exp_series(ctx, x, p), ctx.neg(exp_series(ctx, nx, p)))
    res = ctx.imul(ctx.cmul(res, -0.5))
    _check_finite(res)
    return res


def dense_encrypted(ctx: Context, W, b, h: list[Ciphertext]) -> list[Ciphertext]:
    out = []
    for j in range(W.shape[0]):
        acc = ctx.cmul(h[0], W[j, 0])
        for i in range(1, W.shape[1]):
            acc = ctx.add(acc, ctx.cmul(h[i], W[j, i]))
        out.append(ctx.cadd(acc, b[j]))
    return out


def activation_encrypted(ctx: Context, c, z: Ciphertext) -> Ciphertext:
    pw = [None, z]
    for j in range(2, len(c)):
        a, b = pw[j // 2], pw[(j + 1) // 2]
        pw.append(ctx.square(a) if a is b else ctx.mul(a, b))
    acc = ctx.cmul(pw[1], c[1])
    for i in range(2, len(c)):
        acc = ctx.add(acc, ctx.cmul(pw[i], c[i]))
    return ctx.cadd(acc, c[0])


def forward_encrypted(ctx: Context, net: Network, ct_x: Ciphertext) -> Ciphertext:
    """Run the network on every slot of ``ct_x``.

    The hidden state is one ciphertext per neuron. Before each layer, if
    auto-bootstrap is on and the state cannot afford the layer's levels, every
    hidden ciphertext is refreshed.
    """
    ctx._own(ct_x)
    layer_cost = 2 + _log2_ceil(net.degree)
    h = [ct_x]
    for W, b, c in zip(net.weights, net.biases, net.activations):
        h = [ctx.ensure_level(ct, layer_cost) for ct in h]
        h = [activation_encrypted(ctx, c, z) for z in dense_encrypted(ctx, W, b, h)]
    h = [ctx.ensure_level(ct, 1) for ct in h]
    out = dense_encrypted(ctx, net.weights[-1], net.biases[-1], h)[0]
    _check_finite(out)
    return out


def eval_polynomial_encrypted(ctx: Context, coeffs, ct: Ciphertext, method: str = "ps") -> Ciphertext:
    """Evaluate a plaintext polynomial on a ciphertext by Horner or Paterson-Stockmeyer."""
    cs = [float(c) for c in coeffs]
    d = len(cs) - 1
    if d == 0:
        return ctx.cadd(ctx.cmul(ct, 0.0), cs[0])
    if method == "horner":
        acc = ctx.cadd(ctx.cmul(ct, cs[d]), cs[d - 1])
        for c in reversed(cs[: d - 1]):
            acc = ctx.cadd(ctx.mul(acc, ct), c)
        return acc
    if method != "ps":
        raise ValueError(f"unknown method {method!r}")
    k = math.isqrt(d + 1)
    if k * k < d + 1:
        k += 1
    pw = [None, ct]
    for j in range(2, k + 1):
        a, b = pw[j // 2], pw[(j + 1) // 2]
        pw.append(ctx.square(a) if a is b else ctx.mul(a, b))

    def block(i):
        part = cs[i * k : (i + 1) * k]
        acc = None
        for j in range(1, len(part)):
            term = ctx.cmul(pw[j], part[j])
            acc = term if acc is None else ctx.add(acc, term)
        if acc is None:
            return part[0]
        return ctx.cadd(acc, part[0])

    m = -(-(d + 1) // k)
    acc = block(m - 1)
    for i in range(m - 2, -1, -1):
        top = ctx.cmul(pw[k], acc) if not isinstance(acc, Ciphertext) else ctx.mul(acc, pw[k])
        nxt = block(i)
        acc = ctx.add(top, nxt) if isinstance(nxt, Ciphertext) else ctx.cadd(top, nxt)
    return acc

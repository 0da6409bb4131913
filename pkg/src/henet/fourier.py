"""Fourier sine series for odd targets, in plaintext and on ciphertexts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, OddIntervals
from .henc import Ciphertext, Context, SineParams, exp_series

DEFAULT_SUBINTERVALS = 2**16


def simpson_integrate(f, a: float, b: float, m: int) -> float:
    """Composite Simpson's rule with ``m`` (even) subintervals; ``f`` is vectorized."""
    if m < 2 or m % 2:
        raise OddIntervals(f"Simpson's rule needs an even positive m, got {m}")
    xs = np.linspace(a, b, m + 1)
    with np.errstate(all="ignore"):
        fx = np.asarray(f(xs), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise NonFinite("integrand is not finite on [a, b]")
    return _simpson(fx, (b - a) / m)


def _simpson(fx: np.ndarray, h: float) -> float:
    s = fx[0] + fx[-1] + 4.0 * fx[1:-1:2].sum() + 2.0 * fx[2:-1:2].sum()
    return float(h * s / 3.0)


@dataclass(frozen=True)
class FourierSeries:
    """F_N(x) = sum_n b_n sin(n pi x / l), n = 1..N."""

    period_half: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if not self.period_half > 0:
            raise ValueError("period_half must be positive")
        if len(self.coeffs) < 1:
            raise ValueError("need at least one harmonic")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    def truncate(self, n: int) -> "FourierSeries":
        return FourierSeries(self.period_half, self.coeffs[:n])

    def to_text(self) -> str:
        lines = [f"{self.period_half:.17g},{self.n_terms}"]
        lines += [f"{b:.17g}" for b in self.coeffs]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FourierSeries":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        head = lines[0].split(",")
        if len(head) != 2:
            raise ValueError("first line must be 'l,N'")
        ell, n = float(head[0]), int(head[1])
        coeffs = [float(v) for v in lines[1:]]
        if len(coeffs) != n:
            raise ValueError(f"header announces {n} coefficients, found {len(coeffs)}")
        return cls(ell, tuple(coeffs))


def fourier_sine_coeffs(f, period_half: float, n_terms: int, m: int = DEFAULT_SUBINTERVALS) -> FourierSeries:
    """b_n = (2/l) * integral_0^l f(x) sin(n pi x / l) dx for n = 1..N.

    ``f`` should be odd; shift it first (e.g. sigmoid - 0.5).
    """
    if m < 2 or m % 2:
        raise OddIntervals(f"Simpson's rule needs an even positive m, got {m}")
    xs = np.linspace(0.0, period_half, m + 1)
    with np.errstate(all="ignore"):
        fx = np.asarray(f(xs), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise NonFinite("target is not finite on [0, l]")
    h = period_half / m
    coeffs = [
        2.0 / period_half * _simpson(fx * np.sin(n * math.pi * xs / period_half), h)
        for n in range(1, n_terms + 1)
    ]
    return FourierSeries(period_half, tuple(coeffs))


def eval_series_plain(s: FourierSeries, x):
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for n, b in enumerate(s.coeffs, start=1):
        acc = acc + b * np.sin(n * math.pi * x / s.period_half)
    return acc if acc.ndim else float(acc)


def eval_series_encrypted(
    ctx: Context, s: FourierSeries, ct_x: Ciphertext, p: SineParams = SineParams()
) -> Ciphertext:
    """Encrypted partial sum.

    exp(+-i pi x / l) come from the Taylor-and-squaring core, higher harmonics
    from successive products, and each sin(n theta) is recovered as
    i * (-0.5) * (exp(i n theta) - exp(-i n theta)). Consumes
    (k + t + 2) + (N - 1) + 2 levels.
    """
    theta = ctx.imul(ctx.cmul(ct_x, math.pi / s.period_half / 2**p.t))
    up = exp_series(ctx, theta, p)
    down = exp_series(ctx, ctx.neg(theta), p)
    e_up, e_down = up, down
    acc = None
    for n, b in enumerate(s.coeffs, start=1):
        if n > 1:
            e_up = ctx.mul(e_up, up)
            e_down = ctx.mul(e_down, down)
        sin_n = ctx.imul(ctx.cmul(ctx.sub(e_up, e_down), -0.5))
        term = ctx.cmul(sin_n, b)
        acc = term if acc is None else ctx.add(acc, term)
    if not np.all(np.isfinite(acc.slots)):
        raise NonFinite("encrypted series overflowed")
    return acc


def odd_shift(f, offset: float):
    """x -> f(x) - offset; sigmoid - 0.5 is odd."""
    return lambda x: f(x) - offset


def levels_for_series(n_terms: int, p: SineParams) -> int:
    return (p.k + p.t + 2) + (n_terms - 1) + 2

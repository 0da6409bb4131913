"""Post-training symmetric uniform quantization of network weights."""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch
from .funcspec import SampleSet
from .netcore import Network, forward
from .report import EvalReport


def _scale(amax: float, qmax: int) -> float:
    s = amax / qmax
    # nudge until q*s/q == s so that re-quantizing reproduces the same grid
    for _ in range(8):
        if (qmax * s) / qmax == s:
            break
        s = float(np.nextafter(s, np.inf))
    return s


def quantize_tensor(w: np.ndarray, bits: int) -> tuple[np.ndarray, float]:
    qmax = 2 ** (bits - 1) - 1
    amax = float(np.max(np.abs(w))) if w.size else 0.0
    if amax == 0.0:
        return w.copy(), 0.0
    s = _scale(amax, qmax)
    return np.round(w / s) * s, s


def quantize_uniform(net: Network, bits: int) -> Network:
    """Quantize every weight matrix per tensor; biases and activations stay exact."""
    if not 2 <= bits <= 16:
        raise ValueError("bits must lie in 2..16")
    weights = [quantize_tensor(W, bits)[0] for W in net.weights]
    return Network(
        weights,
        [b.copy() for b in net.biases],
        [c.copy() for c in net.activations],
        net.config,
    )


def quantization_report(net: Network, net_q: Network, eval_set: SampleSet, radius: float | None = None):
    """Errors of both networks on ``eval_set`` and the ratio of their max errors."""
    shapes = [W.shape for W in net.weights] + [c.shape for c in net.activations]
    shapes_q = [W.shape for W in net_q.weights] + [c.shape for c in net_q.activations]
    if shapes != shapes_q:
        raise ShapeMismatch("networks differ in shape")
    radius = float(np.max(np.abs(eval_set.xs))) if radius is None else radius
    full = EvalReport.from_errors("nn", radius, eval_set.ys, forward(net, eval_set.xs))
    quant = EvalReport.from_errors("nn-quantized", radius, eval_set.ys, forward(net_q, eval_set.xs))
    if full.max_abs_error == 0.0:
        ratio = 1.0 if quant.max_abs_error == 0.0 else float("inf")
    else:
        ratio = quant.max_abs_error / full.max_abs_error
    return full, quant, ratio

"""Expand a network into the polynomial it computes, and plan its depth."""

from __future__ import annotations

import math

from .errors import DegreeLimitExceeded, DomainError
from .netcore import Network, NetworkConfig
from .poly import DEGREE_CAP, MultCount, Plan, PlanNode, Polynomial, poly_add, poly_compose, poly_scale

_INT64_MAX = 2**63 - 1


def degree_bound(cfg: NetworkConfig) -> int:
    """Largest degree a network with this shape can produce: d**L."""
    bound = cfg.activation_degree**cfg.hidden_layers
    if bound > _INT64_MAX:
        raise OverflowError(f"{cfg.activation_degree}**{cfg.hidden_layers} exceeds 64-bit range")
    return bound


def required_layers(radius: float, precision: float, degree: int) -> int:
    """Smallest L with degree**L >= 2*R*P/degree, i.e. ceil(log_d(2RP/d))."""
    if degree < 2:
        raise DomainError("activation degree must be >= 2")
    ratio = 2.0 * radius * precision / degree
    if not ratio > 1.0:
        raise DomainError("need 2*R*P > d")
    k = max(1, math.ceil(math.log(ratio, degree)))
    # correct float error in the logarithm at exact powers
    while k > 1 and degree ** (k - 1) >= ratio * (1 - 1e-12):
        k -= 1
    while degree**k < ratio * (1 - 1e-12):
        k += 1
    return k


def _log2_ceil(d: int) -> int:
    return (d - 1).bit_length()


def plan_depth(cfg: NetworkConfig) -> MultCount:
    """Multiplication counts and depth of the encrypted forward pass.

    Each dense layer costs one scalar level, each activation ceil(log2 d)
    levels for the powers plus one for the coefficients.
    """
    L, n, d = cfg.hidden_layers, cfg.width, cfg.activation_degree
    depth = L * (2 + _log2_ceil(d)) + 1
    if L == 0:
        return MultCount(ct_mults=0, scalar_mults=1, depth=depth)
    dense = n + (L - 1) * n * n + n
    return MultCount(ct_mults=L * n * (d - 1), scalar_mults=dense + L * n * d, depth=depth)


def extract_polynomial(net: Network, cap: int = DEGREE_CAP) -> Polynomial:
    L, d = net.hidden_layers, net.degree
    if L and d**L > cap:
        raise DegreeLimitExceeded(f"network degree {d}**{L} exceeds cap {cap}")
    h = [Polynomial([0.0, 1.0])]
    for W, b, c in zip(net.weights, net.biases, net.activations):
        act = Polynomial(c)
        h = [poly_compose(act, _affine(W[j], b[j], h), cap) for j in range(W.shape[0])]
    return _affine(net.weights[-1][0], net.biases[-1][0], h)


def _affine(row, bias, h) -> Polynomial:
    acc = Polynomial([float(bias)])
    for w, p in zip(row, h):
        acc = poly_add(acc, poly_scale(p, float(w)))
    return acc


def network_plan(net: Network) -> Plan:
    """Evaluation DAG of the encrypted forward pass, node for node."""
    nodes: dict[str, PlanNode] = {"x": PlanNode("x")}
    counter = iter(range(10**9))

    def add(op, *args, value=0.0):
        name = f"n{next(counter)}"
        nodes[name] = PlanNode(op, tuple(args), value)
        return name

    def dense(W, b, h):
        out = []
        for j in range(W.shape[0]):
            acc = add("mul", h[0], add("const", value=W[j, 0]))
            for i in range(1, W.shape[1]):
                acc = add("add", acc, add("mul", h[i], add("const", value=W[j, i])))
            out.append(add("add", acc, add("const", value=b[j])))
        return out

    h = ["x"]
    for W, b, c in zip(net.weights, net.biases, net.activations):
        zs = dense(W, b, h)
        h = []
        for z in zs:
            pw = [None, z]
            for j in range(2, len(c)):
                a, bb = pw[j // 2], pw[(j + 1) // 2]
                pw.append(add("square", a) if a == bb else add("mul", a, bb))
            acc = add("mul", pw[1], add("const", value=c[1]))
            for i in range(2, len(c)):
                acc = add("add", acc, add("mul", pw[i], add("const", value=c[i])))
            h.append(add("add", acc, add("const", value=c[0])))
    root = dense(net.weights[-1], net.biases[-1], h)[0]
    return Plan(nodes, root)

"""Scalar-in, scalar-out regression networks with polynomial activations.

Every hidden layer is dense and followed by a polynomial activation whose
coefficients are trainable and shared by all neurons of the layer. The output
layer is linear, so the whole network computes a polynomial in its input.
"""

from __future__ import annotations

import copy
import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import Diverged, MalformedRow, NonFinite, ShapeMismatch
from .funcspec import SampleSet
from .poly import Polynomial

log = logging.getLogger(__name__)

# degree-2 activation used as the starting point for training
P2 = (1.1110537229, 0.5, 0.054235537)


def default_activation(degree: int) -> Polynomial:
    """P2 for degree 2; higher degrees extend P2 by small top coefficients."""
    if degree < 2:
        raise ValueError("activation degree must be >= 2")
    return Polynomial(list(P2) + [1e-3] * (degree - 2))


@dataclass(frozen=True)
class NetworkConfig:
    hidden_layers: int = 6
    width: int = 16
    activation_degree: int = 2
    activation_init: Polynomial | None = None
    learning_rate: float = 1e-3
    max_epochs: int = 2000
    batch_size: int = 256
    l2_lambda: float = 0.0
    patience: int = 200
    seed: int = 0
    input_scale: float = 1.0

    def __post_init__(self):
        if self.activation_init is None:
            object.__setattr__(self, "activation_init", default_activation(self.activation_degree))
        if self.activation_init.degree != self.activation_degree:
            raise ValueError("activation_init degree must equal activation_degree")
        if self.hidden_layers < 0 or self.width < 1:
            raise ValueError("hidden_layers must be >= 0 and width >= 1")
        if not self.input_scale > 0:
            raise ValueError("input_scale must be positive")
        if self.learning_rate <= 0 or self.max_epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("learning_rate, max_epochs, batch_size and patience must be positive")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be nonnegative")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["activation_init"] = list(self.activation_init.coeffs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        d = dict(d)
        if d.get("activation_init") is not None:
            d["activation_init"] = Polynomial(d["activation_init"])
        return cls(**d)


@dataclass
class Network:
    """Dense layers (W, b) with one activation coefficient vector per hidden layer.

    ``weights[-1]`` and ``biases[-1]`` form the linear output layer, which has
    no activation. W has shape (n_out, n_in).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[np.ndarray]
    config: NetworkConfig = field(default_factory=NetworkConfig)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.activations) != len(self.weights) - 1:
            raise ShapeMismatch("need one activation per hidden layer and one bias per layer")
        n_in = 1
        for W, b in zip(self.weights, self.biases):
            if W.ndim != 2 or W.shape[1] != n_in or b.shape != (W.shape[0],):
                raise ShapeMismatch(f"layer shapes do not chain: W{W.shape}, b{b.shape}, n_in={n_in}")
            n_in = W.shape[0]
        if n_in != 1:
            raise ShapeMismatch("output layer must have exactly one unit")

    @property
    def hidden_layers(self) -> int:
        return len(self.activations)

    @property
    def degree(self) -> int:
        return len(self.activations[0]) - 1 if self.activations else 1

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list: (W, b, c) per hidden layer, then W_out, b_out."""
        out = []
        for W, b, c in zip(self.weights, self.biases, self.activations):
            out += [W, b, c]
        return out + [self.weights[-1], self.biases[-1]]

    @classmethod
    def from_parameters(cls, params, config) -> "Network":
        L = (len(params) - 2) // 3
        Ws = [params[3 * i] for i in range(L)] + [params[-2]]
        bs = [params[3 * i + 1] for i in range(L)] + [params[-1]]
        cs = [params[3 * i + 2] for i in range(L)]
        return cls(Ws, bs, cs, config)

    def copy(self) -> "Network":
        return copy.deepcopy(self)


def init_network(cfg: NetworkConfig) -> Network:
    rng = np.random.default_rng(cfg.seed)
    sizes = [1] + [cfg.width] * cfg.hidden_layers + [1]
    Ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        Ws.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    Ws[0] = Ws[0] * cfg.input_scale
    acts = [np.array(cfg.activation_init.coeffs, dtype=float) for _ in range(cfg.hidden_layers)]
    return Network(Ws, bs, acts, cfg)


def _powers(z, d):
    """[None, z, z^2, ..., z^d]; z^j is the product of z^(j//2) and z^((j+1)//2)."""
    pw = [None, z]
    for j in range(2, d + 1):
        pw.append(pw[j // 2] * pw[(j + 1) // 2])
    return pw


def apply_activation(c, z):
    """c0 + c1 z + ... + cd z^d, summed in the same order as the encrypted path."""
    pw = _powers(z, len(c) - 1)
    acc = pw[1] * c[1]
    for i in range(2, len(c)):
        acc = acc + pw[i] * c[i]
    return acc + c[0]


def _dense(W, b, h):
    # sequential accumulation over inputs mirrors the encrypted dense layer
    acc = W[:, 0:1] * h[0]
    for i in range(1, W.shape[1]):
        acc = acc + W[:, i : i + 1] * h[i]
    return acc + b[:, None]


def forward(net: Network, x):
    """Evaluate the network at a scalar or a 1-D array of inputs."""
    scalar = np.ndim(x) == 0
    h = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        for W, b, c in zip(net.weights, net.biases, net.activations):
            h = apply_activation(c, _dense(W, b, h))
        y = _dense(net.weights[-1], net.biases[-1], h)[0]
    if not np.all(np.isfinite(y)):
        raise NonFinite("network output overflowed")
    return float(y[0]) if scalar else y


def _forward_cache(params, L, xs):
    a = xs[None, :]
    cache = []
    for l in range(L):
        W, b, c = params[3 * l : 3 * l + 3]
        z = W @ a + b[:, None]
        cache.append((a, z))
        a = apply_activation(c, z)
    y = (params[-2] @ a + params[-1][:, None])[0]
    return y, a, cache


def loss_and_gradients(net: Network, batch: SampleSet, l2_lambda: float = 0.0):
    """Mean squared error plus ``l2_lambda`` times the sum of squared weights.

    Returns the loss and a gradient list aligned with ``net.parameters()``.
    """
    return _loss_grad(net.parameters(), net.hidden_layers, batch.xs, batch.ys, l2_lambda)


def _loss_grad(params, L, xs, ys, lam):
    if len(xs) == 0:
        raise ValueError("batch must be non-empty")
    with np.errstate(over="ignore", invalid="ignore"):
        y, a_last, cache = _forward_cache(params, L, xs)
        r = y - ys
        loss = float(np.mean(r * r))
        if lam:
            loss += lam * sum(float(np.sum(params[3 * l] ** 2)) for l in range(L))
            loss += lam * float(np.sum(params[-2] ** 2))
        if not np.isfinite(loss):
            raise NonFinite("loss is not finite")
        grads = [None] * len(params)
        dy = (2.0 / len(xs)) * r[None, :]
        grads[-2] = dy @ a_last.T + 2 * lam * params[-2]
        grads[-1] = dy.sum(axis=1)
        da = params[-2].T @ dy
        for l in range(L - 1, -1, -1):
            W, b, c = params[3 * l : 3 * l + 3]
            a_prev, z = cache[l]
            d = len(c) - 1
            zp = [np.ones_like(z), z]
            for _ in range(2, d + 1):
                zp.append(zp[-1] * z)
            dphi = c[1] * zp[0]
            for i in range(2, d + 1):
                dphi = dphi + i * c[i] * zp[i - 1]
            grads[3 * l + 2] = np.array([np.sum(da * zp[i]) for i in range(d + 1)])
            dz = da * dphi
            grads[3 * l] = dz @ a_prev.T + 2 * lam * W
            grads[3 * l + 1] = dz.sum(axis=1)
            da = W.T @ dz
    return loss, grads


@dataclass
class TrainReport:
    epochs_run: int
    final_train_mse: float
    final_validation_mse: float
    best_epoch: int
    loss_history: list[float]

    def to_dict(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "final_train_mse": self.final_train_mse,
            "final_validation_mse": self.final_validation_mse,
            "best_epoch": self.best_epoch,
            "loss_history": self.loss_history,
        }


def _mse(params, L, s: SampleSet) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        y, _, _ = _forward_cache(params, L, s.xs)
        return float(np.mean((y - s.ys) ** 2))


def train(cfg: NetworkConfig, train_set: SampleSet, validation_set: SampleSet | None = None):
    """Minibatch Adam with early stopping on validation MSE.

    Returns the best snapshot (lowest validation MSE) and a TrainReport. When
    no validation points are given, the training MSE is monitored instead.
    """
    if len(train_set) == 0:
        raise ValueError("train_set must be non-empty")
    monitor = validation_set if validation_set is not None and len(validation_set) else train_set
    net = init_network(cfg)
    L = cfg.hidden_layers
    params = [p.copy() for p in net.parameters()]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    rng = np.random.default_rng([cfg.seed, 1])
    n = len(train_set)
    step = 0
    best = (np.inf, 0, [p.copy() for p in params])
    history: list[float] = []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            try:
                loss, grads = _loss_grad(params, L, train_set.xs[idx], train_set.ys[idx], cfg.l2_lambda)
            except NonFinite as exc:
                raise Diverged(f"training diverged at epoch {epoch}") from exc
            if not all(np.all(np.isfinite(g)) for g in grads):
                raise Diverged(f"non-finite gradient at epoch {epoch}")
            total += loss * len(idx)
            step += 1
            c1, c2 = 1 - b1**step, 1 - b2**step
            with np.errstate(over="ignore", invalid="ignore"):
                for p, g, mi, vi in zip(params, grads, m, v):
                    mi *= b1
                    mi += (1 - b1) * g
                    vi *= b2
                    vi += (1 - b2) * g * g
                    p -= cfg.learning_rate * (mi / c1) / (np.sqrt(vi / c2) + eps)
            if not all(np.all(np.isfinite(p)) for p in params):
                raise Diverged(f"parameters became non-finite at epoch {epoch}")
        history.append(total / n)
        val = _mse(params, L, monitor)
        if not np.isfinite(val):
            raise Diverged(f"validation loss is not finite at epoch {epoch}")
        if val < best[0]:
            best = (val, epoch, [p.copy() for p in params])
        elif epoch - best[1] >= cfg.patience:
            break
    best_val, best_epoch, best_params = best
    out = Network.from_parameters(best_params, cfg)
    report = TrainReport(
        epochs_run=epoch,
        final_train_mse=_mse(best_params, L, train_set),
        final_validation_mse=best_val,
        best_epoch=best_epoch,
        loss_history=history,
    )
    log.info("trained %d epochs, best epoch %d, validation mse %.3e", epoch, best_epoch, best_val)
    return out, report


# ---------------------------------------------------------------------------
# weights CSV


def save_weights_csv(net: Network, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("layer,kind,row,col,value\n")
        for l, W in enumerate(net.weights):
            for (r, c), w in np.ndenumerate(W):
                fh.write(f"{l},weight,{r},{c},{w:.17g}\n")
            for r, b in enumerate(net.biases[l]):
                fh.write(f"{l},bias,{r},0,{b:.17g}\n")
            if l < len(net.activations):
                for r, a in enumerate(net.activations[l]):
                    fh.write(f"{l},act,{r},0,{a:.17g}\n")


def load_weights_csv(path, config: NetworkConfig | None = None) -> Network:
    entries: dict[tuple[int, str], dict[tuple[int, int], float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["layer", "kind", "row", "col", "value"]:
            raise MalformedRow(1, "expected header layer,kind,row,col,value")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedRow(lineno, f"expected 5 fields, got {len(row)}")
            try:
                layer, kind, r, c, value = int(row[0]), row[1], int(row[2]), int(row[3]), float(row[4])
            except ValueError as exc:
                raise MalformedRow(lineno, str(exc)) from None
            if kind not in ("weight", "bias", "act") or min(layer, r, c) < 0:
                raise MalformedRow(lineno, f"bad kind or index in {row!r}")
            if kind != "weight" and c != 0:
                raise MalformedRow(lineno, f"{kind} rows must have col=0")
            cell = entries.setdefault((layer, kind), {})
            if (r, c) in cell:
                raise MalformedRow(lineno, f"duplicate entry {row[:4]!r}")
            cell[(r, c)] = value

    def dense(cells, shape):
        arr = np.full(shape, np.nan)
        for (r, c), val in cells.items():
            if r >= shape[0] or c >= shape[1]:
                raise ShapeMismatch("entry outside tensor bounds")
            arr[r, c] = val
        if np.isnan(arr).any():
            raise ShapeMismatch("tensor has missing entries")
        return arr

    n_layers = 1 + max((l for l, _ in entries), default=-1)
    if n_layers == 0:
        raise ShapeMismatch("weights file is empty")
    Ws, bs, acts = [], [], []
    for l in range(n_layers):
        wc = entries.get((l, "weight"))
        bc = entries.get((l, "bias"))
        if not wc or not bc:
            raise ShapeMismatch(f"layer {l} lacks weights or biases")
        shape = (1 + max(r for r, _ in wc), 1 + max(c for _, c in wc))
        Ws.append(dense(wc, shape))
        bs.append(dense(bc, (shape[0], 1))[:, 0])
        ac = entries.get((l, "act"))
        if l < n_layers - 1:
            if not ac:
                raise ShapeMismatch(f"hidden layer {l} lacks activation coefficients")
            acts.append(dense(ac, (1 + max(r for r, _ in ac), 1))[:, 0])
        elif ac:
            raise ShapeMismatch("output layer must not have an activation")
    if acts and len({len(a) for a in acts}) != 1:
        raise ShapeMismatch("activation degrees differ between layers")
    if config is None:
        d = len(acts[0]) - 1 if acts else 2
        init = Polynomial(acts[0]) if acts and Polynomial(acts[0]).degree == d else None
        config = NetworkConfig(
            hidden_layers=len(acts),
            width=Ws[0].shape[0] if acts else 1,
            activation_degree=d,
            activation_init=init,
        )
    return Network(Ws, bs, acts, config)


def with_config(net: Network, **changes) -> Network:
    return Network(net.weights, net.biases, net.activations, replace(net.config, **changes))

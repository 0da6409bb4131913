import numpy as np
import pytest

from henet.funcspec import SampleSet
from henet.netcore import Network, NetworkConfig, init_network

ACCEPTANCE_LINES: list[str] = []


def random_net(seed, layers, width, degree, scale=0.5):
    """Network with random weights, biases and activation coefficients."""
    rng = np.random.default_rng(seed)
    cfg = NetworkConfig(hidden_layers=layers, width=width, activation_degree=degree, seed=seed)
    net = init_network(cfg)
    weights = [rng.uniform(-scale, scale, W.shape) for W in net.weights]
    biases = [rng.uniform(-0.2, 0.2, b.shape) for b in net.biases]
    acts = [rng.uniform(-0.6, 0.6, c.shape) for c in net.activations]
    return Network(weights, biases, acts, cfg)


def identity_net():
    cfg = NetworkConfig(hidden_layers=1, width=1, activation_degree=2)
    return Network(
        [np.array([[1.0]]), np.array([[1.0]])],
        [np.zeros(1), np.zeros(1)],
        [np.array([0.0, 1.0, 0.0])],
        cfg,
    )


def p2_neuron_net():
    cfg = NetworkConfig(hidden_layers=1, width=1, activation_degree=2)
    return Network(
        [np.array([[1.0]]), np.array([[1.0]])],
        [np.zeros(1), np.zeros(1)],
        [np.array([1.1110537229, 0.5, 0.054235537])],
        cfg,
    )


@pytest.fixture
def small_batch():
    rng = np.random.default_rng(11)
    xs = rng.uniform(-1, 1, 40)
    return SampleSet(xs, np.tanh(2 * xs) + 0.1 * rng.standard_normal(40))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

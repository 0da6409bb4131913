"""Polynomial-activation networks as function approximators under leveled HE."""

from .extract import extract_polynomial, plan_depth, required_layers
from .funcspec import SampleSet, TargetFunction, parse_expression, sample, split_train_validation
from .netcore import Network, NetworkConfig, forward, init_network, train
from .henc import Ciphertext, Context, SineParams, forward_encrypted, sine_compute
from .poly import MultCount, Polynomial

__all__ = [
    "Ciphertext",
    "Context",
    "SineParams",
    "extract_polynomial",
    "forward_encrypted",
    "plan_depth",
    "required_layers",
    "sine_compute",
    "MultCount",
    "Network",
    "NetworkConfig",
    "Polynomial",
    "SampleSet",
    "TargetFunction",
    "forward",
    "init_network",
    "parse_expression",
    "sample",
    "split_train_validation",
    "train",
]

__version__ = "0.1.0"

"""Gradient-fidelity check on synthetic graph functions.

A small graph network is fit to a known smooth function of the node features
of a 3-node complete graph; the report compares both the learned values and
the learned input derivatives with the analytic ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from relaynet.errors import InputError
from relaynet.harness.training import TrainHyper, fit
from relaynet.models.architectures import GraphModel, Layout, graph_conv_layout, linear_layout, HIDDEN
from relaynet.nn import Tape, losses
from relaynet.nn import functional as F
from relaynet.utils import seeding

logger = logging.getLogger(__name__)

NODES = 3
LOW, HIGH = 1.0, 4.0
DERIVATIVE_TOL = 0.15


def f1(X: np.ndarray) -> np.ndarray:
    """Sum of squares of all node features."""
    return np.sum(X * X, axis=(-2, -1))


def f1_grad(X: np.ndarray) -> np.ndarray:
    return 2.0 * X


def f2(X: np.ndarray) -> np.ndarray:
    """Sum over nodes of the product of the two features."""
    return np.sum(X[..., 0] * X[..., 1], axis=-1)


def f2_grad(X: np.ndarray) -> np.ndarray:
    return X[..., ::-1].copy()


FUNCTIONS = {"f1": (f1, f1_grad), "f2": (f2, f2_grad)}


class SynthModel(GraphModel):
    """Three GraphConvs (each with GELU and graph-size normalization), sum pooling, MLP head."""

    architecture = "synth"
    in_features = 2

    @classmethod
    def layout(cls) -> Layout:
        return (
            graph_conv_layout("conv1", 2, HIDDEN)
            + graph_conv_layout("conv2", HIDDEN, HIDDEN)
            + graph_conv_layout("conv3", HIDDEN, HIDDEN)
            + linear_layout("lin1", HIDDEN, HIDDEN)
            + linear_layout("lin2", HIDDEN, HIDDEN)
            + linear_layout("out", HIDDEN, 1)
        )

    def build(self, p, X, A):
        h = X
        for name in ("conv1", "conv2", "conv3"):
            h = F.graph_size_norm(F.gelu(F.graph_conv(h, A, p[f"{name}.root"], p[f"{name}.rel"], p[f"{name}.bias"])))
        h = F.global_add_pool(h)
        h = F.gelu(F.linear(h, p["lin1.weight"], p["lin1.bias"]))
        h = F.gelu(F.linear(h, p["lin2.weight"], p["lin2.bias"]))
        out = F.linear(h, p["out.weight"], p["out.bias"])
        return F.reshape(out, out.shape[:-1])


def complete_graph(n: int = NODES) -> np.ndarray:
    return np.ones((n, n)) - np.eye(n)


def sample_inputs(rng: np.random.Generator, count: int) -> np.ndarray:
    return rng.uniform(LOW, HIGH, size=(count, NODES, 2))


@dataclass
class SynthReport:
    function: str
    value_errors: np.ndarray  # per test sample
    derivative_errors: np.ndarray  # per test sample and input entry
    final_loss: float

    @property
    def mean_value_error(self) -> float:
        return float(np.mean(self.value_errors))

    @property
    def max_value_error(self) -> float:
        return float(np.max(self.value_errors))

    @property
    def max_derivative_error(self) -> float:
        return float(np.max(self.derivative_errors))

    def derivative_share_within(self, tol: float = DERIVATIVE_TOL) -> float:
        return float(np.mean(self.derivative_errors <= tol))

    def summary_lines(self):
        return [
            f"function {self.function}",
            f"value relative error: mean {self.mean_value_error:.6g}, max {self.max_value_error:.6g}",
            f"derivative relative error: median {float(np.median(self.derivative_errors)):.6g}, "
            f"max {self.max_derivative_error:.6g}, share <= {DERIVATIVE_TOL:g}: {self.derivative_share_within():.6g}",
        ]


def model_input_gradients(model: GraphModel, X: np.ndarray, A: np.ndarray) -> np.ndarray:
    """d output / d X for every graph of a stack (graphs are independent, so one pass suffices)."""
    tape = Tape()
    Xt = tape.input("X", X)
    out = model.forward(Xt, A)
    return tape.backward(out, [np.ones(out.shape)])[Xt]


def synth_check(
    function: str,
    samples: int,
    epochs: int,
    *,
    lr: float = 2e-3,
    batch_size: int = 100,
    test_samples: int = 500,
    seed: int = 0,
) -> SynthReport:
    if function not in FUNCTIONS:
        raise InputError(f"unknown synthetic function {function!r}; expected f1 or f2")
    if samples < 1 or test_samples < 1:
        raise InputError("sample counts must be positive")
    fn, grad = FUNCTIONS[function]
    train_X = sample_inputs(seeding.stream(seed, seeding.SYNTH, 0), samples)
    test_X = sample_inputs(seeding.stream(seed, seeding.SYNTH, 1), test_samples)
    A = complete_graph()
    train_A = np.broadcast_to(A, (samples, NODES, NODES)).copy()
    test_A = np.broadcast_to(A, (test_samples, NODES, NODES)).copy()

    model = SynthModel.initialize(seeding.stream(seed, seeding.INIT, 2))
    hyper = TrainHyper(lr=lr, epochs=epochs, batch_size=batch_size, seed=seed)
    logger.info(f"Synthetic check {function}: {samples} samples, {epochs} epochs")
    result = fit(model, train_X, train_A, fn(train_X), losses.mse, hyper, label=f"synth-{function}")

    truth = fn(test_X)
    predicted = result.model.forward(test_X, test_A).data
    value_errors = np.abs(predicted - truth) / np.abs(truth)
    true_grad = grad(test_X)
    learned_grad = model_input_gradients(result.model, test_X, test_A)
    derivative_errors = (np.abs(learned_grad - true_grad) / np.abs(true_grad)).reshape(test_samples, -1)
    report = SynthReport(function, value_errors, derivative_errors, result.losses[-1] if result.losses else float("nan"))
    for line in report.summary_lines():
        logger.info(line)
    return report

"""Convolution ablation: the max-flow regressor rebuilt on a first-order layer."""

from __future__ import annotations

import logging
from typing import Optional, Sequence, Tuple

from relaynet.channel import Deployment
from relaynet.datagen.dataset import TrajectorySample
from relaynet.harness.evaluate import EvalReport, evaluate
from relaynet.harness.scenario import ExperimentConfig
from relaynet.harness.training import TrainHyper, train_mfl
from relaynet.models.architectures import HIDDEN, GraphModel, Layout, MflModel, linear_layout
from relaynet.nn import functional as F
from relaynet.optimize.trajectory import optimize_deployments
from relaynet.utils import seeding

logger = logging.getLogger(__name__)

GRAPHCONV = "mfl"
FIRST_ORDER = "mfl-first-order"


def first_order_layout(name: str, d_in: int, d_out: int) -> Layout:
    return [(f"{name}.weight", (d_in, d_out)), (f"{name}.bias", (d_out,))]


class FirstOrderMflModel(GraphModel):
    """MFL with x'_i = W^T (x_i + sum_j A_ij x_j) + b in place of GraphConv."""

    architecture = "mfl-first-order"

    @classmethod
    def layout(cls) -> Layout:
        return (
            first_order_layout("conv1", 3, HIDDEN)
            + first_order_layout("conv2", HIDDEN, HIDDEN)
            + first_order_layout("conv3", HIDDEN, HIDDEN)
            + linear_layout("lin1", HIDDEN, HIDDEN)
            + linear_layout("lin2", HIDDEN, 1)
        )

    def build(self, p, X, A):
        h = X
        for name in ("conv1", "conv2", "conv3"):
            h = F.gelu(F.first_order_conv(h, A, p[f"{name}.weight"], p[f"{name}.bias"]))
        h = F.gelu(F.linear(F.global_add_pool(h), p["lin1.weight"], p["lin1.bias"]))
        out = F.linear(h, p["lin2.weight"], p["lin2.bias"])
        return F.reshape(out, out.shape[:-1])


def ablation_layer(
    samples: Sequence[TrajectorySample],
    test_set: Sequence[Tuple[int, Deployment]],
    cfg: ExperimentConfig,
    hyper: TrainHyper,
    *,
    graphconv: Optional[MflModel] = None,
    bins: int = 20,
    fraction: float = 0.1,
    workers: int = 1,
) -> EvalReport:
    """Train both variants on the same data and compare their optimized max-flows.

    The first-order variant is the baseline, so a win means GraphConv ended higher.
    """
    if graphconv is None:
        graphconv = train_mfl(samples, cfg.channel, hyper).model
    first_order = FirstOrderMflModel.initialize(seeding.stream(hyper.seed, seeding.INIT, 3))
    first_order = train_mfl(samples, cfg.channel, hyper, model=first_order).model

    runs = {}
    for name, model in ((GRAPHCONV, graphconv), (FIRST_ORDER, first_order)):
        logger.info(f"Ablation: optimizing {len(test_set)} deployments with {name}")
        runs[name] = dict(optimize_deployments("mfl", {"mfl": model}, cfg, test_set, workers=workers))
    return evaluate(runs, FIRST_ORDER, bins=bins, fraction=fraction)

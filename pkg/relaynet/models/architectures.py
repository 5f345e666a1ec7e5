"""Graph network architectures.

A model is an immutable, ordered set of named float64 arrays plus a forward
definition. Forward passes accept a single graph (X: n x d, A: n x n) or a
stack of equal-size graphs with a leading batch axis, and optionally record
onto a :class:`Tape` so gradients reach the parameters and the inputs.
"""

from __future__ import annotations

import logging
from typing import ClassVar, Dict, List, Optional, Tuple, Type

import numpy as np

from relaynet.errors import ShapeError
from relaynet.nn import Tape, Tensor, as_tensor, init_uniform
from relaynet.nn import functional as F

logger = logging.getLogger(__name__)

HIDDEN = 32
ACTOR_RELAYS = 4
SORT_K = 4

Layout = List[Tuple[str, Tuple[int, ...]]]

ARCHITECTURES: Dict[str, Type["GraphModel"]] = {}


def graph_conv_layout(name: str, d_in: int, d_out: int) -> Layout:
    return [(f"{name}.root", (d_in, d_out)), (f"{name}.rel", (d_in, d_out)), (f"{name}.bias", (d_out,))]


def linear_layout(name: str, d_in: int, d_out: int) -> Layout:
    return [(f"{name}.weight", (d_in, d_out)), (f"{name}.bias", (d_out,))]


class GraphModel:
    architecture: ClassVar[str] = ""
    in_features: ClassVar[int] = 3

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.architecture:
            ARCHITECTURES[cls.architecture] = cls

    def __init__(self, params: Dict[str, np.ndarray]):
        layout = self.layout()
        expected = [name for name, _ in layout]
        if sorted(params) != sorted(expected):
            raise ShapeError(
                f"{self.architecture}: parameter names {sorted(params)} do not match {sorted(expected)}"
            )
        checked = {}
        for name, shape in layout:
            value = np.array(params[name], dtype=np.float64)
            if value.shape != shape:
                raise ShapeError(f"{self.architecture}: {name} has shape {value.shape}, expected {shape}")
            value.setflags(write=False)
            checked[name] = value
        self.params = checked

    @classmethod
    def layout(cls) -> Layout:
        raise NotImplementedError

    @classmethod
    def initialize(cls, rng: np.random.Generator) -> "GraphModel":
        params = {}
        fan_in = {}
        for name, shape in cls.layout():
            layer = name.rsplit(".", 1)[0]
            if len(shape) == 2:
                fan_in.setdefault(layer, shape[0])
            params[name] = init_uniform(rng, fan_in.get(layer, shape[0]), shape)
        return cls(params)

    def with_params(self, params: Dict[str, np.ndarray]) -> "GraphModel":
        return type(self)(params)

    def bind(self, tape: Optional[Tape]) -> Dict[str, Tensor]:
        if tape is None:
            return {name: Tensor(value) for name, value in self.params.items()}
        return {name: tape.param(name, value) for name, value in self.params.items()}

    def forward(self, X, A, tape: Optional[Tape] = None):
        """Run the network; with a tape the parameters are recorded as trainable leaves."""
        X, A = as_tensor(X), as_tensor(A)
        single = X.data.ndim == 2
        if X.data.ndim not in (2, 3) or X.shape[-1] != self.in_features:
            raise ShapeError(f"{self.architecture}: features must be n x {self.in_features}, got {X.shape}")
        if A.shape != X.shape[:-1] + (X.shape[-2],):
            raise ShapeError(f"{self.architecture}: adjacency {A.shape} does not match features {X.shape}")
        if single:
            X = F.reshape(X, (1,) + X.shape)
            A = F.reshape(A, (1,) + A.shape)
        out = self.build(self.bind(tape), X, A)
        if single:
            if isinstance(out, tuple):
                return tuple(F.reshape(o, o.shape[1:]) for o in out)
            return F.reshape(out, out.shape[1:])
        return out

    def build(self, p: Dict[str, Tensor], X: Tensor, A: Tensor):
        raise NotImplementedError

    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())


def _conv(p, name, X, A):
    return F.graph_conv(X, A, p[f"{name}.root"], p[f"{name}.rel"], p[f"{name}.bias"])


def _linear(p, name, X):
    return F.linear(X, p[f"{name}.weight"], p[f"{name}.bias"])


class MflModel(GraphModel):
    """Max-flow regressor: three GraphConvs, sum pooling, two linear layers."""

    architecture = "mfl"

    @classmethod
    def layout(cls) -> Layout:
        return (
            graph_conv_layout("conv1", 3, HIDDEN)
            + graph_conv_layout("conv2", HIDDEN, HIDDEN)
            + graph_conv_layout("conv3", HIDDEN, HIDDEN)
            + linear_layout("lin1", HIDDEN, HIDDEN)
            + linear_layout("lin2", HIDDEN, 1)
        )

    def build(self, p, X, A):
        h = F.gelu(_conv(p, "conv1", X, A))
        h = F.gelu(_conv(p, "conv2", h, A))
        h = F.gelu(_conv(p, "conv3", h, A))
        h = F.gelu(_linear(p, "lin1", F.global_add_pool(h)))
        out = _linear(p, "lin2", h)
        return F.reshape(out, out.shape[:-1])


class GlModel(GraphModel):
    """Per-node direction predictor; the relay rows are returned."""

    architecture = "gl"

    @classmethod
    def layout(cls) -> Layout:
        return (
            graph_conv_layout("conv1", 3, HIDDEN)
            + graph_conv_layout("conv2", HIDDEN, HIDDEN)
            + graph_conv_layout("conv3", HIDDEN, HIDDEN)
            + linear_layout("lin1", HIDDEN, HIDDEN)
            + linear_layout("lin2", HIDDEN, 2)
        )

    def build(self, p, X, A):
        h = F.gelu(_conv(p, "conv1", X, A))
        h = F.gelu(_conv(p, "conv2", h, A))
        h = F.gelu(_conv(p, "conv3", h, A))
        h = F.gelu(_linear(p, "lin1", h))
        out = _linear(p, "lin2", h)
        n = X.shape[-2]
        return F.select_rows(out, range(1, n - 1))


class ActorModel(GraphModel):
    """Gaussian policy over the relay moves: (means, stds), each 2 per relay."""

    architecture = "actor"

    @classmethod
    def layout(cls) -> Layout:
        width = SORT_K * HIDDEN
        return (
            graph_conv_layout("conv1", 3, HIDDEN)
            + graph_conv_layout("conv2", HIDDEN, HIDDEN)
            + linear_layout("mean", width, 2 * ACTOR_RELAYS)
            + linear_layout("std", width, 2 * ACTOR_RELAYS)
        )

    def build(self, p, X, A):
        if X.shape[-2] != ACTOR_RELAYS + 2:
            raise ShapeError(f"actor expects {ACTOR_RELAYS + 2} nodes, got {X.shape[-2]}")
        h = F.gelu(_conv(p, "conv1", X, A))
        h = F.gelu(_conv(p, "conv2", h, A))
        pooled = F.global_sort_pool(h, SORT_K)
        return F.tanh(_linear(p, "mean", pooled)), F.softplus(_linear(p, "std", pooled))


class CriticModel(GraphModel):
    architecture = "critic"

    @classmethod
    def layout(cls) -> Layout:
        return (
            graph_conv_layout("conv1", 3, HIDDEN)
            + graph_conv_layout("conv2", HIDDEN, HIDDEN)
            + linear_layout("lin", HIDDEN, 1)
        )

    def build(self, p, X, A):
        h = F.gelu(_conv(p, "conv1", X, A))
        h = F.gelu(_conv(p, "conv2", h, A))
        out = _linear(p, "lin", F.global_add_pool(h))
        return F.reshape(out, out.shape[:-1])


def _expect(model: GraphModel, cls: Type[GraphModel]) -> None:
    if not isinstance(model, cls):
        raise ShapeError(f"expected a {cls.architecture} model, got {model.architecture}")


def mfl_forward(model: MflModel, X, A) -> float:
    _expect(model, MflModel)
    return model.forward(X, A).item()


def gl_forward(model: GlModel, X, A) -> np.ndarray:
    _expect(model, GlModel)
    return model.forward(X, A).data


def actor_forward(model: ActorModel, X, A) -> Tuple[np.ndarray, np.ndarray]:
    _expect(model, ActorModel)
    means, stds = model.forward(X, A)
    return means.data, stds.data


def critic_forward(model: CriticModel, X, A) -> float:
    _expect(model, CriticModel)
    return model.forward(X, A).item()


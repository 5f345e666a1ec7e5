"""Reverse-mode automatic differentiation over dense float64 arrays.

A :class:`Tape` records every primitive applied to its tensors in creation
order, which is already a topological order; :meth:`Tape.backward` walks it
once in reverse and accumulates vector-Jacobian products additively, so a
tensor used twice receives the sum of both contributions.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from relaynet.errors import ShapeError

ArrayLike = Union[np.ndarray, float, int, Sequence]
Vjp = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    __slots__ = ("data", "tape", "index", "name")

    def __init__(self, data: ArrayLike, tape: Optional["Tape"] = None, index: int = -1, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.index = index
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def requires_grad(self) -> bool:
        return self.tape is not None

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def __add__(self, other):
        from relaynet.nn import functional as F

        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from relaynet.nn import functional as F

        return F.sub(self, other)

    def __mul__(self, other):
        from relaynet.nn import functional as F

        if isinstance(other, (int, float)):
            return F.scale(self, float(other))
        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from relaynet.nn import functional as F

        return F.scale(self, -1.0)

    def __matmul__(self, other):
        from relaynet.nn import functional as F

        return F.matmul(self, other)

    def __repr__(self):
        where = f", tape@{self.index}" if self.tape is not None else ""
        return f"Tensor(shape={self.shape}{where})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Node:
    __slots__ = ("op", "parents", "vjp")

    def __init__(self, op: str, parents: Tuple[Tensor, ...], vjp: Optional[Vjp]):
        self.op = op
        self.parents = parents
        self.vjp = vjp


class Gradients:
    """Result of one backward pass, indexable by tensor."""

    def __init__(self, tape: "Tape", grads: List[Optional[np.ndarray]]):
        self._tape = tape
        self._grads = grads

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        if tensor.tape is not self._tape:
            raise ShapeError("tensor was not recorded on this tape")
        g = self._grads[tensor.index]
        return np.zeros_like(tensor.data) if g is None else g

    def inputs(self) -> Dict[str, np.ndarray]:
        return {name: self[t] for name, t in self._tape.inputs.items()}

    def params(self) -> Dict[str, np.ndarray]:
        return {name: self[t] for name, t in self._tape.params.items()}


class Tape:
    def __init__(self):
        self.nodes: List[_Node] = []
        self.inputs: Dict[str, Tensor] = {}
        self.params: Dict[str, Tensor] = {}

    def _leaf(self, data: ArrayLike, name: str) -> Tensor:
        t = Tensor(np.array(data, dtype=np.float64), self, len(self.nodes), name)
        self.nodes.append(_Node("leaf", (), None))
        return t

    def input(self, name: str, data: ArrayLike) -> Tensor:
        """A designated input leaf (node features X, adjacency A, ...)."""
        t = self._leaf(data, name)
        self.inputs[name] = t
        return t

    def param(self, name: str, data: ArrayLike) -> Tensor:
        t = self._leaf(data, name)
        self.params[name] = t
        return t

    def record(self, op: str, value: np.ndarray, parents: Tuple[Tensor, ...], vjp: Vjp) -> Tensor:
        t = Tensor(value, self, len(self.nodes))
        self.nodes.append(_Node(op, parents, vjp))
        return t

    def backward(
        self,
        outputs: Union[Tensor, Sequence[Tensor]],
        seeds: Optional[Iterable[ArrayLike]] = None,
    ) -> Gradients:
        """Accumulate d(sum_k <seed_k, output_k>) into every recorded tensor.

        Without seeds the single output must be a scalar and is seeded with 1.
        """
        if isinstance(outputs, Tensor):
            outputs = [outputs]
        outputs = list(outputs)
        if seeds is None:
            if len(outputs) != 1 or outputs[0].data.size != 1:
                raise ShapeError("backward without seeds needs a single scalar output")
            seeds = [np.ones_like(outputs[0].data)]
        grads: List[Optional[np.ndarray]] = [None] * len(self.nodes)
        for out, seed in zip(outputs, seeds, strict=True):
            if out.tape is not self:
                raise ShapeError("output was not recorded on this tape")
            seed = np.broadcast_to(np.asarray(seed, dtype=np.float64), out.shape)
            _accumulate(grads, out.index, np.array(seed))

        for idx in range(len(self.nodes) - 1, -1, -1):
            g = grads[idx]
            node = self.nodes[idx]
            if g is None or node.vjp is None:
                continue
            for parent, pg in zip(node.parents, node.vjp(g)):
                if pg is not None and parent.tape is self:
                    _accumulate(grads, parent.index, pg)
        return Gradients(self, grads)


def _accumulate(grads: List[Optional[np.ndarray]], index: int, g: np.ndarray) -> None:
    grads[index] = g if grads[index] is None else grads[index] + g


def grad_wrt_inputs(tape: Tape, output: Tensor) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of a scalar output at the designated inputs ``X`` and ``A``."""
    if output.data.size != 1:
        raise ShapeError(f"output must be a scalar, got shape {output.shape}")
    grads = tape.backward(output)
    if "X" not in tape.inputs or "A" not in tape.inputs:
        raise ShapeError("tape has no designated X and A inputs")
    return grads[tape.inputs["X"]], grads[tape.inputs["A"]]

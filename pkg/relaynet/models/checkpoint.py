"""Checkpoint files: a text header naming every parameter, then raw float64 data.

    relaynet-checkpoint v1
    architecture mfl
    param conv1.root 3 32
    ...
    end
    <little-endian float64 values, parameters in header order>
"""

from __future__ import annotations

import importlib
import logging
from pathlib import Path
from typing import Optional, Type

import numpy as np

from relaynet.errors import CheckpointError, ShapeError
from relaynet.models.architectures import ARCHITECTURES, GraphModel

logger = logging.getLogger(__name__)

MAGIC = "relaynet-checkpoint v1"
_END = b"\nend\n"
_DTYPE = np.dtype("<f8")

# models defined next to the experiments that use them; importing registers them
EXTRA_ARCHITECTURE_MODULES = ("relaynet.harness.synth", "relaynet.harness.ablation")


def resolve_architecture(name: str) -> Optional[Type[GraphModel]]:
    if name not in ARCHITECTURES:
        for module in EXTRA_ARCHITECTURE_MODULES:
            importlib.import_module(module)
    return ARCHITECTURES.get(name)


def save_checkpoint(model: GraphModel, path) -> None:
    lines = [MAGIC, f"architecture {model.architecture}"]
    for name, value in model.params.items():
        dims = " ".join(str(d) for d in value.shape)
        lines.append(f"param {name} {dims}".rstrip())
    header = ("\n".join(lines) + "\nend\n").encode("ascii")
    body = b"".join(np.ascontiguousarray(v, dtype=_DTYPE).tobytes() for v in model.params.values())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + body)
    logger.info(f"Saved {model.architecture} checkpoint ({model.num_parameters()} values) to {path}")


def _parse_header(raw: bytes, where: str):
    cut = raw.find(_END)
    if cut < 0:
        raise CheckpointError(f"{where}: header is not terminated")
    try:
        lines = raw[:cut].decode("ascii").split("\n")
    except UnicodeDecodeError as e:
        raise CheckpointError(f"{where}: header is not text") from e
    if not lines or lines[0] != MAGIC:
        raise CheckpointError(f"{where}: not a relaynet checkpoint")
    if len(lines) < 2 or not lines[1].startswith("architecture "):
        raise CheckpointError(f"{where}: missing architecture line")
    architecture = lines[1].split(" ", 1)[1]
    entries = []
    for line in lines[2:]:
        fields = line.split(" ")
        if fields[0] != "param" or len(fields) < 2:
            raise CheckpointError(f"{where}: malformed header line {line!r}")
        try:
            shape = tuple(int(d) for d in fields[2:])
        except ValueError as e:
            raise CheckpointError(f"{where}: bad dimensions in {line!r}") from e
        entries.append((fields[1], shape))
    return architecture, entries, raw[cut + len(_END):]


def load_checkpoint(path, expected: Optional[Type[GraphModel]] = None) -> GraphModel:
    """Read a checkpoint; with ``expected`` the stored layout must match that architecture."""
    path = Path(path)
    raw = path.read_bytes()
    architecture, entries, body = _parse_header(raw, str(path))

    sizes = [int(np.prod(shape, dtype=np.int64)) for _, shape in entries]
    if len(body) != sum(sizes) * _DTYPE.itemsize:
        raise CheckpointError(
            f"{path}: expected {sum(sizes) * _DTYPE.itemsize} data bytes, found {len(body)}"
        )
    values = np.frombuffer(body, dtype=_DTYPE)
    params = {}
    offset = 0
    for (name, shape), size in zip(entries, sizes):
        params[name] = values[offset:offset + size].reshape(shape).astype(np.float64)
        offset += size

    cls = expected if expected is not None else resolve_architecture(architecture)
    if cls is None:
        raise CheckpointError(f"{path}: unknown architecture {architecture!r}")
    if expected is not None and list(entries) != list(expected.layout()):
        raise ShapeError(
            f"{path}: {architecture} checkpoint does not fit the {expected.architecture} architecture"
        )
    return cls(params)

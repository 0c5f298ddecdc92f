"""Small multilayer perceptron with explicit gradients over flat parameter vectors.

Parameters live in one flat vector in canonical order: layer 1 weights
(fan_in x fan_out, row-major), layer 1 biases, layer 2 weights, and so on.
Hidden layers use ReLU, the output layer softmax, and the loss is the mean
cross-entropy. Arithmetic runs in float64; committed parameters are rounded
to float32, the precision they are stored and transmitted with.
"""
import struct
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import (
    BYTES_PER_PARAM,
    DEFAULT_HIDDEN_DIMS,
    DEFAULT_INPUT_DIM,
    NUM_LABELS,
)
from models.errors import (
    DimensionError,
    EmptyDataError,
    ParameterError,
    SerializationError,
)

WIRE_MAGIC = b"OFLW"
WIRE_VERSION = 1
WIRE_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class MlpArchitecture:
    input_dim: int = DEFAULT_INPUT_DIM
    hidden_dims: Tuple[int, ...] = DEFAULT_HIDDEN_DIMS
    output_dim: int = NUM_LABELS

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        dims = (self.input_dim,) + self.hidden_dims + (self.output_dim,)
        if any(d < 1 for d in dims):
            raise ParameterError(f"Every layer needs at least one unit, got {dims}")

    @property
    def layer_shapes(self) -> List[Tuple[int, int]]:
        dims = (self.input_dim,) + self.hidden_dims + (self.output_dim,)
        return list(zip(dims[:-1], dims[1:]))

    def describe(self) -> str:
        dims = (self.input_dim,) + self.hidden_dims + (self.output_dim,)
        return "->".join(str(d) for d in dims)


def _frozen_vector(values, kind: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{kind} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ParameterVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_vector(self.values, "ParameterVector"))

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParameterVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class GradientVector:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_vector(self.values, "GradientVector"))

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradientVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class LabeledBatch:
    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if inputs.ndim != 2:
            raise DimensionError(f"Inputs must be a matrix, got shape {inputs.shape}")
        if inputs.shape[0] != labels.shape[0]:
            raise DimensionError(
                f"{inputs.shape[0]} input rows but {labels.shape[0]} labels"
            )
        if labels.size and labels.min() < 0:
            raise DimensionError("Labels must be non-negative")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def input_dim(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, indices: Sequence[int]) -> "LabeledBatch":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledBatch(self.inputs[idx], self.labels[idx])

    def label_counts(self, num_labels: int = NUM_LABELS) -> np.ndarray:
        return np.bincount(self.labels, minlength=num_labels)


def param_count(arch: MlpArchitecture) -> int:
    return sum(fan_in * fan_out + fan_out for fan_in, fan_out in arch.layer_shapes)


def serialized_size_bytes(arch: MlpArchitecture) -> int:
    return param_count(arch) * BYTES_PER_PARAM


def serialized_size_for_count(count: int) -> int:
    return count * BYTES_PER_PARAM


def _quantize(values: np.ndarray) -> np.ndarray:
    return values.astype(np.float32).astype(np.float64)


def _unpack(values: np.ndarray, arch: MlpArchitecture) -> List[Tuple[np.ndarray, np.ndarray]]:
    if values.size != param_count(arch):
        raise DimensionError(
            f"Parameter vector has {values.size} entries, "
            f"architecture {arch.describe()} needs {param_count(arch)}"
        )
    layers = []
    offset = 0
    for fan_in, fan_out in arch.layer_shapes:
        weights = values[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        biases = values[offset:offset + fan_out]
        offset += fan_out
        layers.append((weights, biases))
    return layers


def init_parameters(arch: MlpArchitecture, seed: int) -> ParameterVector:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in arch.layer_shapes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return ParameterVector(_quantize(np.concatenate(chunks)))


def _check_batch(arch: MlpArchitecture, batch: LabeledBatch) -> None:
    if len(batch) == 0:
        raise EmptyDataError("Batch is empty")
    if batch.input_dim != arch.input_dim:
        raise DimensionError(
            f"Batch has {batch.input_dim} features, architecture expects {arch.input_dim}"
        )
    if batch.labels.max() >= arch.output_dim:
        raise DimensionError(
            f"Label {batch.labels.max()} outside output layer of size {arch.output_dim}"
        )


def _forward_pass(layers, inputs: np.ndarray):
    activations = [inputs]
    h = inputs
    for i, (weights, biases) in enumerate(layers):
        z = h @ weights + biases
        if i < len(layers) - 1:
            h = np.maximum(z, 0.0)
            activations.append(h)
        else:
            h = z
    logits = h
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return activations, log_probs


def forward(
    params: ParameterVector, arch: MlpArchitecture, batch: LabeledBatch
) -> Tuple[np.ndarray, float]:
    """Softmax probabilities and mean cross-entropy of `batch`."""
    _check_batch(arch, batch)
    layers = _unpack(params.values, arch)
    _, log_probs = _forward_pass(layers, np.asarray(batch.inputs, dtype=np.float64))
    n = len(batch)
    loss = -float(log_probs[np.arange(n), batch.labels].mean())
    return np.exp(log_probs), loss


def predict(params: ParameterVector, arch: MlpArchitecture, inputs: np.ndarray) -> np.ndarray:
    """Top-1 labels; ties go to the lowest label id."""
    layers = _unpack(params.values, arch)
    _, log_probs = _forward_pass(layers, np.asarray(inputs, dtype=np.float64))
    return np.argmax(log_probs, axis=1)


def loss_and_gradient(
    params: ParameterVector, arch: MlpArchitecture, batch: LabeledBatch
) -> Tuple[float, GradientVector]:
    """Mean cross-entropy and its full-batch gradient, in canonical layout."""
    _check_batch(arch, batch)
    layers = _unpack(params.values, arch)
    activations, log_probs = _forward_pass(layers, np.asarray(batch.inputs, dtype=np.float64))

    n = len(batch)
    loss = -float(log_probs[np.arange(n), batch.labels].mean())
    delta = np.exp(log_probs)
    delta[np.arange(n), batch.labels] -= 1.0
    delta /= n

    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        h_in = activations[i]
        grads[i] = (h_in.T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ layers[i][0].T) * (h_in > 0)

    flat = np.concatenate([np.concatenate([gw.reshape(-1), gb]) for gw, gb in grads])
    return loss, GradientVector(flat)


def gradient(params: ParameterVector, arch: MlpArchitecture, batch: LabeledBatch) -> GradientVector:
    return loss_and_gradient(params, arch, batch)[1]


def _check_lengths(a, b) -> None:
    if len(a) != len(b):
        raise DimensionError(f"Vector lengths differ: {len(a)} vs {len(b)}")


def apply_step(params: ParameterVector, grad: GradientVector, rate: float) -> ParameterVector:
    _check_lengths(params, grad)
    if rate < 0:
        raise ParameterError(f"Learning rate must be non-negative, got {rate}")
    return ParameterVector(_quantize(params.values - rate * grad.values))


def l2_distance(a: ParameterVector, b: ParameterVector) -> float:
    _check_lengths(a, b)
    return float(np.linalg.norm(a.values - b.values))


def average_parameters(vectors: Sequence[ParameterVector]) -> ParameterVector:
    if not vectors:
        raise EmptyDataError("Nothing to average")
    for v in vectors[1:]:
        _check_lengths(vectors[0], v)
    return ParameterVector(_quantize(np.mean([v.values for v in vectors], axis=0)))


def to_bytes(params: ParameterVector) -> bytes:
    header = WIRE_HEADER.pack(WIRE_MAGIC, WIRE_VERSION, len(params), 0)
    return header + params.values.astype("<f4").tobytes()


def from_bytes(blob: bytes, arch: Optional[MlpArchitecture] = None) -> ParameterVector:
    if len(blob) < WIRE_HEADER.size:
        raise SerializationError(f"Blob of {len(blob)} bytes is shorter than the header")
    magic, version, count, _ = WIRE_HEADER.unpack_from(blob)
    if magic != WIRE_MAGIC:
        raise SerializationError(f"Bad magic {magic!r}")
    if version != WIRE_VERSION:
        raise SerializationError(f"Unsupported version {version}")
    payload = blob[WIRE_HEADER.size:]
    if len(payload) != count * BYTES_PER_PARAM:
        raise SerializationError(
            f"Header declares {count} parameters, payload holds {len(payload) // BYTES_PER_PARAM}"
        )
    if arch is not None and count != param_count(arch):
        raise DimensionError(
            f"Blob holds {count} parameters, architecture {arch.describe()} needs {param_count(arch)}"
        )
    return ParameterVector(np.frombuffer(payload, dtype="<f4").astype(np.float64))

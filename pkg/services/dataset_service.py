import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import NUM_LABELS
from models.errors import CapacityError, IdxFormatError, ParameterError
from models.label_space import LabelDistribution
from models.mlp import LabeledBatch

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class DataPool:
    samples: LabeledBatch
    index_by_label: Tuple[np.ndarray, ...]
    num_labels: int = NUM_LABELS
    image_shape: Tuple[int, int] = (1, 1)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def input_dim(self) -> int:
        return self.samples.input_dim


@dataclass(frozen=True)
class Partition:
    bootstrap_indices: np.ndarray
    device_indices: List[np.ndarray]
    remainder_indices: np.ndarray


@dataclass(frozen=True)
class GoalTestSet:
    batch: LabeledBatch
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.batch)


def make_pool(
    inputs: np.ndarray,
    labels: np.ndarray,
    num_labels: int = NUM_LABELS,
    image_shape: Optional[Tuple[int, int]] = None,
) -> DataPool:
    batch = LabeledBatch(inputs, labels)
    if len(batch) and batch.labels.max() >= num_labels:
        raise ParameterError(f"Label {batch.labels.max()} outside [0, {num_labels})")
    index_by_label = tuple(
        np.flatnonzero(batch.labels == label) for label in range(num_labels)
    )
    shape = image_shape or (1, batch.input_dim)
    return DataPool(batch, index_by_label, num_labels, shape)


def subset_pool(pool: DataPool, indices: Sequence[int]) -> DataPool:
    batch = pool.samples.subset(indices)
    return make_pool(batch.inputs, batch.labels, pool.num_labels, pool.image_shape)


def largest_remainder_counts(dist: LabelDistribution, size: int) -> np.ndarray:
    """Per-label counts summing exactly to `size`; ties favour lower label ids."""
    exact = dist.probs * size
    counts = np.floor(exact).astype(np.int64)
    shortfall = int(size - counts.sum())
    if shortfall > 0:
        remainders = exact - counts
        order = sorted(range(len(remainders)), key=lambda label: (-remainders[label], label))
        for label in order[:shortfall]:
            counts[label] += 1
    return counts


# ---------------------------------------------------------------------------
# IDX files
# ---------------------------------------------------------------------------

def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _parse_idx(raw: bytes, expected_magic: int, kind: str) -> Tuple[Tuple[int, ...], int]:
    """Validate an IDX header and return (dims, payload offset)."""
    if len(raw) < 4:
        raise IdxFormatError(f"{kind} file truncated inside the magic number", len(raw))
    (magic,) = struct.unpack_from(">I", raw, 0)
    if magic != expected_magic:
        raise IdxFormatError(
            f"Bad {kind} magic 0x{magic:08x}, expected 0x{expected_magic:08x}", 0
        )
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise IdxFormatError(f"{kind} file truncated inside the header", len(raw))
    dims = struct.unpack_from(f">{ndim}I", raw, 4)
    payload = int(np.prod(dims))
    if len(raw) < header + payload:
        raise IdxFormatError(
            f"{kind} payload truncated: expected {payload} bytes, found {len(raw) - header}",
            len(raw),
        )
    return dims, header


def load_idx(images_path, labels_path, num_labels: int = NUM_LABELS) -> DataPool:
    """Read an IDX image/label pair; pixels are scaled into [0, 1]."""
    image_raw = _read_bytes(images_path)
    label_raw = _read_bytes(labels_path)

    (count, rows, cols), image_offset = _parse_idx(image_raw, IMAGES_MAGIC, "images")
    (label_count,), label_offset = _parse_idx(label_raw, LABELS_MAGIC, "labels")
    if label_count != count:
        raise IdxFormatError(
            f"Labels file holds {label_count} items but images file holds {count}", 4
        )

    pixels = np.frombuffer(image_raw, dtype=np.uint8, count=count * rows * cols, offset=image_offset)
    labels = np.frombuffer(label_raw, dtype=np.uint8, count=count, offset=label_offset)
    if count and labels.max() >= num_labels:
        bad = int(np.argmax(labels >= num_labels))
        raise IdxFormatError(
            f"Label {labels[bad]} outside [0, {num_labels})", label_offset + bad
        )

    inputs = pixels.reshape(count, rows * cols).astype(np.float32) / np.float32(255.0)
    logger.info("Loaded %d samples (%dx%d) from %s", count, rows, cols, images_path)
    return make_pool(inputs, labels.astype(np.int64), num_labels, (rows, cols))


def write_idx(pool: DataPool, images_path, labels_path) -> None:
    rows, cols = pool.image_shape
    count = len(pool)
    pixels = np.rint(np.clip(pool.samples.inputs, 0.0, 1.0) * 255.0).astype(np.uint8)
    image_bytes = struct.pack(">IIII", IMAGES_MAGIC, count, rows, cols) + pixels.tobytes()
    label_bytes = struct.pack(">II", LABELS_MAGIC, count) + pool.samples.labels.astype(np.uint8).tobytes()
    Path(images_path).write_bytes(image_bytes)
    Path(labels_path).write_bytes(label_bytes)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def synth_blobs(
    num_labels: int,
    per_label: int,
    input_dim: int,
    spread: float,
    seed: int,
) -> DataPool:
    """Gaussian blobs around one random center per label, clamped to [0, 1]."""
    if min(num_labels, per_label, input_dim) < 1:
        raise ParameterError("Blob counts and dimensions must be at least 1")
    if spread < 0:
        raise ParameterError(f"spread must be non-negative, got {spread}")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.15, 0.85, size=(num_labels, input_dim))
    labels = np.repeat(np.arange(num_labels), per_label)
    noise = rng.standard_normal(size=(labels.size, input_dim))
    inputs = np.clip(centers[labels] + spread * noise, 0.0, 1.0).astype(np.float32)
    return make_pool(inputs, labels, num_labels, (1, input_dim))


def synth_train_test(
    num_labels: int,
    per_label: int,
    test_per_label: int,
    input_dim: int,
    spread: float,
    seed: int,
) -> Tuple[DataPool, DataPool]:
    """Train and test pools drawn around the same blob centers, with no shared samples."""
    pool = synth_blobs(num_labels, per_label + test_per_label, input_dim, spread, seed)
    train_idx = np.concatenate([idx[:per_label] for idx in pool.index_by_label])
    test_idx = np.concatenate([idx[per_label:] for idx in pool.index_by_label])
    return subset_pool(pool, train_idx), subset_pool(pool, test_idx)


# ---------------------------------------------------------------------------
# Partitioning
# ---------------------------------------------------------------------------

class _LabelDrawer:
    """Hands out shuffled, never-repeated indices per label."""

    def __init__(self, pool: DataPool, rng: np.random.Generator):
        self._queues = [rng.permutation(idx) for idx in pool.index_by_label]
        self._cursor = [0] * pool.num_labels

    def take(self, label: int, count: int) -> np.ndarray:
        start = self._cursor[label]
        available = len(self._queues[label]) - start
        if count > available:
            raise CapacityError(label, count, available)
        self._cursor[label] = start + count
        return self._queues[label][start:start + count]

    def draw(self, counts: np.ndarray) -> np.ndarray:
        chosen = [self.take(label, int(n)) for label, n in enumerate(counts) if n > 0]
        if not chosen:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(chosen))

    def remainder(self) -> np.ndarray:
        rest = [queue[cursor:] for queue, cursor in zip(self._queues, self._cursor)]
        return np.sort(np.concatenate(rest)) if rest else np.zeros(0, dtype=np.int64)


def partition(
    pool: DataPool,
    bootstrap_fraction: float,
    device_specs: Sequence[Tuple[LabelDistribution, int]],
    seed: int,
) -> Partition:
    """Carve a label-uniform bootstrap set and label-skewed device sets out of `pool`."""
    if not 0 <= bootstrap_fraction < 1:
        raise ParameterError(f"bootstrap fraction must lie in [0, 1), got {bootstrap_fraction}")
    drawer = _LabelDrawer(pool, np.random.default_rng(seed))

    bootstrap_size = int(round(bootstrap_fraction * len(pool)))
    uniform = LabelDistribution.uniform(range(pool.num_labels), pool.num_labels)
    bootstrap = drawer.draw(largest_remainder_counts(uniform, bootstrap_size))

    devices = []
    for owner, (dist, size) in enumerate(device_specs):
        if dist.num_labels != pool.num_labels:
            raise ParameterError(
                f"Device {owner} distribution has {dist.num_labels} labels, pool has {pool.num_labels}"
            )
        try:
            devices.append(drawer.draw(largest_remainder_counts(dist, size)))
        except CapacityError as err:
            err.owner = owner
            raise

    logger.debug(
        "Partitioned %d samples: %d bootstrap, %d devices", len(pool), bootstrap.size, len(devices)
    )
    return Partition(bootstrap, devices, drawer.remainder())


def build_goal_test_set(
    test_pool: DataPool,
    goal: LabelDistribution,
    size: int,
    seed: int,
) -> GoalTestSet:
    """Held-out samples whose label counts follow the goal distribution."""
    if size <= 0:
        raise ParameterError(f"Goal test set size must be positive, got {size}")
    drawer = _LabelDrawer(test_pool, np.random.default_rng(seed))
    indices = drawer.draw(largest_remainder_counts(goal, size))
    return GoalTestSet(test_pool.samples.subset(indices), indices)

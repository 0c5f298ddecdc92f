"""IDX reading/writing, synthetic pools, partitioning and goal test sets.

Groups:
  - IDX format
  - largest-remainder counts
  - partitions
  - goal test sets
"""
import gzip
import struct

import numpy as np
import pytest

from models.errors import CapacityError, IdxFormatError, ParameterError
from models.label_space import LabelDistribution
from models.mlp import MlpArchitecture, apply_step, init_parameters, loss_and_gradient, predict
from services.dataset_service import (
    IMAGES_MAGIC,
    LABELS_MAGIC,
    build_goal_test_set,
    largest_remainder_counts,
    load_idx,
    make_pool,
    partition,
    synth_blobs,
    write_idx,
)


@pytest.fixture
def idx_pool():
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, size=(12, 6)).astype(np.float32) / np.float32(255.0)
    return make_pool(pixels, np.arange(12) % 10, image_shape=(2, 3))


# ---------------------------------------------------------------------------
# IDX
# ---------------------------------------------------------------------------

def test_idx_round_trip(tmp_path, idx_pool):
    images, labels = tmp_path / "imgs", tmp_path / "lbls"
    write_idx(idx_pool, images, labels)
    loaded = load_idx(images, labels)
    assert loaded.image_shape == (2, 3)
    assert np.array_equal(loaded.samples.labels, idx_pool.samples.labels)
    assert np.array_equal(loaded.samples.inputs, idx_pool.samples.inputs)
    assert loaded.samples.inputs.min() >= 0.0 and loaded.samples.inputs.max() <= 1.0


def test_gzip_idx_is_read_transparently(tmp_path, idx_pool):
    images, labels = tmp_path / "imgs", tmp_path / "lbls"
    write_idx(idx_pool, images, labels)
    for path in (images, labels):
        with gzip.open(str(path) + ".gz", "wb") as fh:
            fh.write(path.read_bytes())
    loaded = load_idx(str(images) + ".gz", str(labels) + ".gz")
    assert len(loaded) == 12


def test_idx_bad_magic_reports_offset_zero(tmp_path, idx_pool):
    images, labels = tmp_path / "imgs", tmp_path / "lbls"
    write_idx(idx_pool, images, labels)
    raw = bytearray(images.read_bytes())
    raw[:4] = struct.pack(">I", 0x00000802)
    images.write_bytes(bytes(raw))
    with pytest.raises(IdxFormatError) as info:
        load_idx(images, labels)
    assert info.value.offset == 0


def test_idx_truncated_payload(tmp_path, idx_pool):
    images, labels = tmp_path / "imgs", tmp_path / "lbls"
    write_idx(idx_pool, images, labels)
    images.write_bytes(images.read_bytes()[:-5])
    with pytest.raises(IdxFormatError) as info:
        load_idx(images, labels)
    assert info.value.offset == 16 + 12 * 6 - 5


def test_idx_count_mismatch(tmp_path):
    images, labels = tmp_path / "imgs", tmp_path / "lbls"
    images.write_bytes(struct.pack(">IIII", IMAGES_MAGIC, 2, 1, 1) + bytes([0, 255]))
    labels.write_bytes(struct.pack(">II", LABELS_MAGIC, 3) + bytes([0, 1, 2]))
    with pytest.raises(IdxFormatError) as info:
        load_idx(images, labels)
    assert info.value.offset == 4


def test_idx_label_outside_space(tmp_path):
    images, labels = tmp_path / "imgs", tmp_path / "lbls"
    images.write_bytes(struct.pack(">IIII", IMAGES_MAGIC, 2, 1, 1) + bytes([0, 255]))
    labels.write_bytes(struct.pack(">II", LABELS_MAGIC, 2) + bytes([0, 12]))
    with pytest.raises(IdxFormatError) as info:
        load_idx(images, labels)
    assert info.value.offset == 9


# ---------------------------------------------------------------------------
# Largest remainder
# ---------------------------------------------------------------------------

def test_largest_remainder_favours_lower_labels_on_ties():
    counts = largest_remainder_counts(LabelDistribution.uniform([3, 4, 5]), 80)
    assert counts.sum() == 80
    assert counts[3:6].tolist() == [27, 27, 26]


def test_largest_remainder_exact_split():
    counts = largest_remainder_counts(LabelDistribution.uniform([0, 1]), 80)
    assert counts[:2].tolist() == [40, 40]
    assert counts[2:].sum() == 0


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def test_synth_blobs_are_seeded_and_bounded():
    a = synth_blobs(10, 20, 5, 0.2, seed=4)
    b = synth_blobs(10, 20, 5, 0.2, seed=4)
    assert np.array_equal(a.samples.inputs, b.samples.inputs)
    assert a.samples.inputs.min() >= 0.0 and a.samples.inputs.max() <= 1.0
    assert a.samples.label_counts().tolist() == [20] * 10


def test_blob_classifier_trained_for_200_epochs_fits_its_data():
    pool = synth_blobs(10, 100, 16, 0.12, seed=8)
    batch = pool.samples
    arch = MlpArchitecture(16, (32,), 10)
    params = init_parameters(arch, 8)
    for _ in range(200):
        _, grad = loss_and_gradient(params, arch, batch)
        params = apply_step(params, grad, 0.5)
    accuracy = np.mean(predict(params, arch, batch.inputs) == batch.labels)
    assert accuracy > 0.95


def test_synth_train_test_sizes(small_pools):
    train, test = small_pools
    assert train.samples.label_counts().tolist() == [200] * 10
    assert test.samples.label_counts().tolist() == [40] * 10


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

def test_partition_is_disjoint_and_follows_distributions(small_pools):
    train, _ = small_pools
    specs = [(LabelDistribution.uniform([0, 1]), 80), (LabelDistribution.uniform([3, 4, 5]), 80)]
    split = partition(train, 0.1, specs, seed=2)

    assert split.bootstrap_indices.size == 200
    assert train.samples.labels[split.bootstrap_indices].tolist().count(7) == 20

    first = train.samples.labels[split.device_indices[0]]
    second = train.samples.labels[split.device_indices[1]]
    assert np.bincount(first, minlength=10)[:2].tolist() == [40, 40]
    assert np.bincount(second, minlength=10)[3:6].tolist() == [27, 27, 26]

    everything = np.concatenate([split.bootstrap_indices, *split.device_indices, split.remainder_indices])
    assert np.unique(everything).size == everything.size == len(train)


def test_partition_is_seeded(small_pools):
    train, _ = small_pools
    specs = [(LabelDistribution.uniform([0, 1]), 10)]
    a = partition(train, 0.1, specs, seed=9)
    b = partition(train, 0.1, specs, seed=9)
    assert np.array_equal(a.device_indices[0], b.device_indices[0])


def test_partition_capacity_error_names_label_and_owner(small_pools):
    train, _ = small_pools
    specs = [(LabelDistribution.uniform([2]), 150), (LabelDistribution.uniform([2]), 100)]
    with pytest.raises(CapacityError) as info:
        partition(train, 0.1, specs, seed=0)
    err = info.value
    assert err.label == 2
    assert err.owner == 1
    assert err.available == 200 - 20 - 150


def test_partition_rejects_bad_fraction(small_pools):
    train, _ = small_pools
    with pytest.raises(ParameterError):
        partition(train, 1.0, [], seed=0)


# ---------------------------------------------------------------------------
# Goal test sets
# ---------------------------------------------------------------------------

def test_goal_test_set_follows_goal(small_pools):
    _, test = small_pools
    goal = LabelDistribution.uniform([0, 1, 2, 3, 4])
    test_set = build_goal_test_set(test, goal, 50, seed=1)
    assert len(test_set) == 50
    assert test_set.batch.label_counts().tolist() == [10] * 5 + [0] * 5


def test_goal_test_set_rejects_zero_size(small_pools):
    _, test = small_pools
    with pytest.raises(ParameterError):
        build_goal_test_set(test, LabelDistribution.uniform([0]), 0, seed=1)


def test_goal_test_set_capacity(small_pools):
    _, test = small_pools
    with pytest.raises(CapacityError):
        build_goal_test_set(test, LabelDistribution.uniform([0]), 41, seed=1)

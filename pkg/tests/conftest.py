"""Shared fixtures: tiny architectures, synthetic pools and small scenario documents."""
import copy
import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest

from models.device import Hyperparameters, make_device
from models.label_space import LabelDistribution
from models.mlp import LabeledBatch, MlpArchitecture, init_parameters
from services.dataset_service import synth_train_test

ROOT = _ROOT
SCENARIOS_DIR = os.path.join(_ROOT, "scenarios")

SMALL_CONTROLLED = {
    "schema_version": 1,
    "name": "small-controlled",
    "kind": "controlled",
    "seed": 3,
    "strategy": "opportunistic-momentum",
    "dataset": {
        "kind": "synthetic",
        "num_labels": 10,
        "per_label": 300,
        "test_per_label": 60,
        "input_dim": 8,
        "spread": 0.1,
    },
    "model": {"hidden_dims": [8]},
    "bootstrap": {"fraction": 0.1, "epochs": 20, "rate": 0.5, "patience": 3, "holdout": 0.1},
    "hyper": {"eta": 0.1, "lambda": 1.0, "kappa": 2.0, "phi": 1.0, "tau": 0.2, "rho": 3},
    "controlled": {
        "local_size": 20,
        "neighbor_size": 20,
        "test_size": 50,
        "phases": [
            {"encounters": 6, "fixed_labels": [2, 3]},
            {"encounters": 6, "fixed_labels": [3, 4, 5]},
            {"encounters": 6, "fixed_labels": [4, 5, 6]},
        ],
    },
    "tune": {"grid": {"eta": [0.05, 0.1], "lambda": [1.0], "kappa": [2.0], "phi": [1.0]}, "encounters": 6},
    "sweep": {"max_offset": 2, "repeats": 2, "client_size": 40, "pretrain_epochs": 3, "max_rounds": 4, "test_size": 50},
}

SMALL_MOBILITY = {
    "schema_version": 1,
    "name": "small-mobility",
    "kind": "mobility",
    "seed": 5,
    "strategy": "greedy-sim",
    "dataset": dict(SMALL_CONTROLLED["dataset"]),
    "model": {"hidden_dims": [8]},
    "bootstrap": {"fraction": 0.1, "epochs": 10},
    "hyper": {"eta": 0.1, "rho": 2},
    "compute": {"profile": "mnist-rpi4", "t_train": 0.5},
    "mobility": {
        "arena_side": 300.0,
        "comm_range": 40.0,
        "flight_cap": 150.0,
        "pause_cap": 60.0,
        "devices_per_region": 1,
        "episodes": 1,
        "episode_ticks": 600,
        "eval_interval_s": 120.0,
        "local_size": 20,
        "test_size": 40,
    },
}


@pytest.fixture
def controlled_doc():
    return copy.deepcopy(SMALL_CONTROLLED)


@pytest.fixture
def mobility_doc():
    return copy.deepcopy(SMALL_MOBILITY)


@pytest.fixture
def tiny_arch():
    return MlpArchitecture(input_dim=4, hidden_dims=(6,), output_dim=10)


def random_batch(rng, n, input_dim, labels):
    inputs = rng.uniform(0.0, 1.0, size=(n, input_dim))
    return LabeledBatch(inputs, rng.choice(list(labels), size=n))


@pytest.fixture
def make_learner(tiny_arch):
    """Factory for a device holding `labels` data and pursuing `goal_labels`."""

    def factory(strategy="opportunistic-momentum", labels=(0, 1), goal_labels=(0, 1, 2, 3, 4),
                seed=0, device_id=0, **hyper):
        rng = np.random.default_rng(seed)
        params = init_parameters(tiny_arch, seed)
        return make_device(
            device_id,
            tiny_arch,
            params,
            random_batch(rng, 24, tiny_arch.input_dim, labels),
            LabelDistribution.uniform(labels),
            LabelDistribution.uniform(goal_labels),
            strategy,
            Hyperparameters(**hyper),
        )

    return factory


@pytest.fixture(scope="session")
def small_pools():
    return synth_train_test(10, 200, 40, 6, 0.1, seed=11)

"""Label distributions, similarity and aggregation weights.

Groups:
  - construction and validation
  - similarity axioms over random pairs
  - weight monotonicity
  - label sets
"""
import math

import numpy as np
import pytest

from models.errors import DimensionError, ParameterError
from models.label_space import (
    LabelDistribution,
    LabelSet,
    label_set_of,
    restrict_to,
    similarity,
    weight,
    weight_from_similarity,
)


def _random_pairs(count, seed=0, num_labels=10):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        p = rng.dirichlet(np.full(num_labels, 0.5))
        q = rng.dirichlet(np.full(num_labels, 0.5))
        yield LabelDistribution.from_counts(p), LabelDistribution.from_counts(q)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def test_uniform_over_labels():
    dist = LabelDistribution.uniform([0, 1, 2, 3, 4])
    assert dist.num_labels == 10
    assert np.allclose(dist.probs[:5], 0.2)
    assert np.all(dist.probs[5:] == 0)


def test_rejects_bad_probabilities():
    with pytest.raises(ParameterError):
        LabelDistribution([0.5, 0.6])
    with pytest.raises(ParameterError):
        LabelDistribution([-0.1, 1.1])
    with pytest.raises(ParameterError):
        LabelDistribution.from_counts([0, 0, 0])


def test_uniform_rejects_label_outside_space():
    with pytest.raises(DimensionError):
        LabelDistribution.uniform([10])


def test_probs_are_read_only():
    dist = LabelDistribution.uniform([1, 2])
    with pytest.raises(ValueError):
        dist.probs[0] = 1.0


def test_pairs_round_trip():
    dist = LabelDistribution.from_pairs([[2, 1], [3, 3]])
    assert dist.to_pairs() == [[2, 0.25], [3, 0.75]]
    assert LabelDistribution.from_pairs(dist.to_pairs()) == dist


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------

def test_similarity_axioms_on_random_pairs():
    for p, q in _random_pairs(1000):
        s = similarity(p, q)
        assert 0.0 <= s <= 1.0
        assert s == similarity(q, p), "similarity must be symmetric"
        assert similarity(p, p) == pytest.approx(1.0, abs=1e-12)


def test_similarity_of_disjoint_supports_is_zero():
    assert similarity(LabelDistribution.uniform([0, 1]), LabelDistribution.uniform([2, 3])) == 0.0


def test_similarity_known_value():
    goal = LabelDistribution.uniform([0, 1, 2, 3, 4])
    neighbor = LabelDistribution.uniform([2, 3])
    assert similarity(goal, neighbor) == pytest.approx(0.4)


def test_similarity_rejects_different_label_spaces():
    with pytest.raises(DimensionError):
        similarity(LabelDistribution.uniform([0], 3), LabelDistribution.uniform([0], 4))


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

def test_weight_is_one_at_full_similarity():
    dist = LabelDistribution.uniform([4, 5, 6])
    assert weight(dist, dist, lam=3.0) == pytest.approx(1.0, abs=1e-12)


def test_weight_is_monotone_in_similarity():
    sims = np.linspace(0.0, 1.0, 41)
    weights = [weight_from_similarity(s, 1.5) for s in sims]
    assert all(a < b for a, b in zip(weights, weights[1:]))
    assert weights[0] == pytest.approx(math.exp(-1.5))


def test_weight_follows_similarity_order_on_random_pairs():
    goal = LabelDistribution.uniform([0, 1, 2, 3, 4])
    for p, q in _random_pairs(200, seed=1):
        sp, sq = similarity(goal, p), similarity(goal, q)
        wp, wq = weight(p, goal, 1.0), weight(q, goal, 1.0)
        if sp > sq:
            assert wp >= wq
        elif sp < sq:
            assert wp <= wq


def test_weight_rejects_non_positive_lambda():
    with pytest.raises(ParameterError):
        weight_from_similarity(0.5, 0.0)


# ---------------------------------------------------------------------------
# Label sets
# ---------------------------------------------------------------------------

def test_label_set_is_sorted_support():
    dist = LabelDistribution.from_pairs([[5, 1], [3, 1], [4, 2]])
    assert label_set_of(dist).labels == (3, 4, 5)
    assert str(label_set_of(dist)) == "{3,4,5}"


def test_label_set_rejects_duplicates():
    with pytest.raises(ParameterError):
        LabelSet((1, 1))


def test_restrict_to_is_uniform_on_the_set():
    dist = restrict_to(LabelSet((7, 2)))
    assert dist == LabelDistribution.uniform([2, 7])


def test_issubset():
    assert LabelSet((3, 4)).issubset(LabelSet((3, 4, 5)))
    assert not LabelSet((2, 3)).issubset(LabelSet((3, 4, 5)))

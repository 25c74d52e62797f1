"""Unit tests for the reciprocity transforms and the shared configuration."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidicom.metrics import (
    DEFAULT_COMMUNITY_FRACTION,
    DEFAULT_SYMMETRY_THRESHOLD,
    ConnectivityMatrix,
    DetectionConfig,
    bidirectionality_threshold,
    pair_strength_matrix,
    symmetry_measure,
)

PROPERTY_SETTINGS = settings(max_examples=80, deadline=None)


def random_network(seed: int, n: int) -> ConnectivityMatrix:
    rng = np.random.default_rng(seed)
    w = rng.uniform(size=(n, n))
    np.fill_diagonal(w, 0.0)
    return ConnectivityMatrix(w)


def two_node_network(w01: float, w10: float) -> ConnectivityMatrix:
    return ConnectivityMatrix(np.array([[0.0, w01], [w10, 0.0]]))


class TestBidirectionalityThreshold:
    def test_default_complement(self):
        assert abs(bidirectionality_threshold(0.6954) - 0.3046) <= 1e-12

    def test_identity_bound(self):
        assert bidirectionality_threshold(1.0) == 0.0

    def test_midpoint(self):
        assert bidirectionality_threshold(0.5) == 0.5

    @pytest.mark.parametrize("bad", [-0.1, 1.1, 2.0])
    def test_out_of_range_rejected(self, bad):
        with pytest.raises(ValueError):
            bidirectionality_threshold(bad)


class TestPairStrength:
    def test_identical_weights_give_zero(self):
        P = pair_strength_matrix(two_node_network(0.5, 0.5), 0.3046)
        assert P.z[0, 1] == 0.0

    def test_direct_substitution(self):
        # |0.6 - 0.2| / (0.6 + 0.2)
        P = pair_strength_matrix(two_node_network(0.6, 0.2), 0.3046)
        assert P.z[0, 1] == pytest.approx(0.5, abs=1e-15)

    def test_one_way_pair_is_extreme(self):
        P = pair_strength_matrix(two_node_network(0.7, 0.0), 0.3046)
        assert P.z[0, 1] == 1.0

    def test_silent_pair_convention(self):
        # a pair with no connections at all carries no reciprocity evidence
        P = pair_strength_matrix(two_node_network(0.0, 0.0), 0.3046)
        assert P.z[0, 1] == 1.0

    def test_diagonal_never_counts(self):
        P = pair_strength_matrix(random_network(0, 8), 1.0)
        assert not P.bidirectional.diagonal().any()
        assert np.all(P.bidir_degree == 7)

    def test_threshold_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            pair_strength_matrix(random_network(0, 4), 1.5)

    def test_bidir_degree_matches_brute_force(self):
        W = random_network(7, 20)
        P = pair_strength_matrix(W, 0.3046)
        for i in range(20):
            count = sum(
                1 for j in range(20) if j != i and P.z[i, j] <= 0.3046
            )
            assert P.bidir_degree[i] == count


class TestSymmetryMeasure:
    def test_fully_symmetric_subset(self):
        w = np.full((5, 5), 0.4)
        np.fill_diagonal(w, 0.0)
        assert symmetry_measure(ConnectivityMatrix(w), range(5)) == pytest.approx(1.0)

    def test_strictly_one_directional_subset(self):
        w = np.triu(np.full((5, 5), 0.8), k=1)  # only j -> i with j > i
        assert symmetry_measure(ConnectivityMatrix(w), range(5)) == pytest.approx(0.0)

    def test_uniform_pair_strength_quarter(self):
        # w, 0.6w gives Z = 0.25 for every pair, so s = 0.75
        w = np.triu(np.full((6, 6), 0.5), k=1) + np.tril(np.full((6, 6), 0.3), k=-1)
        s = symmetry_measure(ConnectivityMatrix(w), range(6))
        assert s == pytest.approx(0.75, abs=1e-12)

    def test_restriction_to_subset(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 0.9  # symmetric pair
        w[2, 3] = 0.9            # one-way pair
        W = ConnectivityMatrix(w)
        assert symmetry_measure(W, [0, 1]) == pytest.approx(1.0)
        assert symmetry_measure(W, [2, 3]) == pytest.approx(0.0)

    def test_single_node_rejected(self):
        with pytest.raises(ValueError):
            symmetry_measure(random_network(0, 5), [2])

    def test_duplicate_members_collapse(self):
        with pytest.raises(ValueError):
            symmetry_measure(random_network(0, 5), [2, 2])

    def test_out_of_range_member_rejected(self):
        with pytest.raises(ValueError):
            symmetry_measure(random_network(0, 5), [0, 7])


class TestConnectivityMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            ConnectivityMatrix(np.zeros((3, 4)))

    def test_rejects_out_of_range_weight(self):
        w = np.zeros((3, 3))
        w[1, 2] = 1.5
        with pytest.raises(ValueError, match="row 1, column 2"):
            ConnectivityMatrix(w)

    def test_rejects_negative_weight(self):
        w = np.zeros((3, 3))
        w[2, 0] = -0.2
        with pytest.raises(ValueError, match="row 2, column 0"):
            ConnectivityMatrix(w)

    def test_rejects_nonzero_diagonal(self):
        w = np.zeros((3, 3))
        w[1, 1] = 0.3
        with pytest.raises(ValueError, match="diagonal at row 1"):
            ConnectivityMatrix(w)

    def test_rejects_non_finite(self):
        w = np.zeros((3, 3))
        w[0, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            ConnectivityMatrix(w)

    def test_weights_frozen_after_validation(self):
        W = random_network(1, 4)
        with pytest.raises(ValueError):
            W.w[0, 1] = 0.5

    def test_from_array_accepts_lists(self):
        W = ConnectivityMatrix.from_array([[0, 0.5], [0.25, 0]])
        assert W.n == 2


class TestDetectionConfig:
    def test_pair_threshold_derived(self):
        cfg = DetectionConfig()
        assert cfg.symmetry_threshold == DEFAULT_SYMMETRY_THRESHOLD
        assert abs(cfg.pair_threshold - 0.3046) <= 1e-12
        assert cfg.community_fraction == DEFAULT_COMMUNITY_FRACTION

    def test_consistent_explicit_pair_threshold_accepted(self):
        cfg = DetectionConfig(symmetry_threshold=0.6954, pair_threshold=0.3046)
        assert cfg.pair_threshold == 0.3046

    def test_inconsistent_pair_threshold_rejected(self):
        with pytest.raises(ValueError, match="inconsistent"):
            DetectionConfig(symmetry_threshold=0.6954, pair_threshold=0.31)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"symmetry_threshold": -0.1},
            {"symmetry_threshold": 1.2},
            {"community_fraction": 0.0},
            {"community_fraction": 1.3},
            {"pool_min_pairs": -1},
            {"min_community_size": 2},
            {"merge_overlap": -0.5},
            {"merge_overlap": 1.5},
        ],
    )
    def test_invalid_fields_rejected(self, kwargs):
        with pytest.raises(ValueError):
            DetectionConfig(**kwargs)


@PROPERTY_SETTINGS
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 16))
def test_symmetry_equals_one_minus_mean_pair_strength(seed, n):
    W = random_network(seed, n)
    P = pair_strength_matrix(W, 0.3046)
    iu = np.triu_indices(n, k=1)
    assert symmetry_measure(W, range(n)) == pytest.approx(
        1.0 - float(P.z[iu].mean()), abs=1e-12
    )


@PROPERTY_SETTINGS
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 16))
def test_pair_strength_ignores_direction(seed, n):
    W = random_network(seed, n)
    Wt = ConnectivityMatrix(W.w.T)
    a = pair_strength_matrix(W, 0.3046)
    b = pair_strength_matrix(Wt, 0.3046)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.bidir_degree, b.bidir_degree)


@PROPERTY_SETTINGS
@given(
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(0.05, 1.0, allow_nan=False),
)
def test_pair_strength_scale_invariant(seed, scale):
    # scaling both weights of a pair by a common factor keeps its strength
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0.1, 1.0, size=2)
    z_full = pair_strength_matrix(two_node_network(a, b), 0.3046).z[0, 1]
    z_scaled = pair_strength_matrix(
        two_node_network(a * scale, b * scale), 0.3046
    ).z[0, 1]
    assert z_scaled == pytest.approx(z_full, abs=1e-12)


@PROPERTY_SETTINGS
@given(seed=st.integers(0, 2**32 - 1))
def test_bidir_degree_brute_force_random(seed):
    W = random_network(seed, 12)
    threshold = np.random.default_rng(seed + 1).uniform(0.0, 1.0)
    P = pair_strength_matrix(W, threshold)
    for i in range(12):
        expected = sum(1 for j in range(12) if j != i and P.z[i, j] <= threshold)
        assert P.bidir_degree[i] == expected

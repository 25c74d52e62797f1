"""Connectivity representation and pairwise reciprocity statistics.

The detector never looks at raw weights directly.  Every decision is made on
the relative strength of a connection pair (0 = perfectly reciprocal, 1 =
perfectly one-way) and on counts of pairs falling below a reciprocity cutoff.
This module owns those transforms plus the configuration record shared by all
pipeline stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

# Default cutoff on subset symmetry below which a node set is not considered
# genuinely reciprocal.  The pair-level cutoff is its complement.
DEFAULT_SYMMETRY_THRESHOLD = 0.6954
DEFAULT_COMMUNITY_FRACTION = 0.75


def bidirectionality_threshold(symmetry_threshold: float) -> float:
    """Pair-level cutoff implied by a symmetry cutoff.

    A pair whose relative strength does not exceed this value counts as
    bidirectional.  Defined as ``1 - symmetry_threshold``.
    """
    if not 0.0 <= symmetry_threshold <= 1.0:
        raise ValueError(f"symmetry threshold must lie in [0, 1], got {symmetry_threshold}")
    return 1.0 - symmetry_threshold


@dataclass(frozen=True)
class ConnectivityMatrix:
    """Square all-to-all weight matrix of a directed network.

    ``w[i][j]`` is the strength of the connection from node ``j`` to node
    ``i``.  Weights live in [0, 1], the diagonal is zero (no self
    connections), and the array is frozen after validation so instances can
    be shared between threads.
    """

    w: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.w, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("weight matrix contains non-finite entries")
        if a.min() < 0.0 or a.max() > 1.0:
            i, j = np.unravel_index(np.argmax((a < 0.0) | (a > 1.0)), a.shape)
            raise ValueError(f"weight at row {i}, column {j} outside [0, 1]: {a[i, j]}")
        d = np.flatnonzero(np.diagonal(a))
        if d.size:
            raise ValueError(f"nonzero diagonal at row {d[0]}")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "w", a)

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @classmethod
    def from_array(cls, a) -> "ConnectivityMatrix":
        return cls(np.asarray(a, dtype=np.float64))


def _relative_strengths(w: np.ndarray) -> np.ndarray:
    # |w_ij - w_ji| / (w_ij + w_ji), with the 0/0 pair pinned to 1 (a pair of
    # absent connections carries no reciprocity evidence).
    tot = w + w.T
    diff = np.abs(w - w.T)
    z = np.divide(diff, tot, out=np.ones_like(tot), where=tot > 0.0)
    np.fill_diagonal(z, 1.0)
    return z


@dataclass(frozen=True)
class PairStrengthMatrix:
    """Per-pair relative strengths plus per-node bidirectional-pair counts.

    ``z`` is symmetric with the (meaningless) diagonal stored as 1.
    ``bidir_degree[i]`` counts pairs with ``z <= pair_threshold`` over the
    whole network.
    """

    z: np.ndarray
    pair_threshold: float
    bidir_degree: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @cached_property
    def bidirectional(self) -> np.ndarray:
        """Boolean pair adjacency: True where the pair counts as bidirectional."""
        m = self.z <= self.pair_threshold
        np.fill_diagonal(m, False)
        m.flags.writeable = False
        return m


def pair_strength_matrix(W: ConnectivityMatrix, pair_threshold: float) -> PairStrengthMatrix:
    """Compute all pairwise relative strengths of a network.

    Parameters
    ----------
    W : ConnectivityMatrix
    pair_threshold : float
        Cutoff under which a pair is counted as bidirectional.
    """
    if not 0.0 <= pair_threshold <= 1.0:
        raise ValueError(f"pair threshold must lie in [0, 1], got {pair_threshold}")
    z = _relative_strengths(W.w)
    z.flags.writeable = False
    mask = z <= pair_threshold
    np.fill_diagonal(mask, False)
    deg = mask.sum(axis=1).astype(np.int64)
    return PairStrengthMatrix(z=z, pair_threshold=pair_threshold, bidir_degree=deg)


def symmetry_measure(W: ConnectivityMatrix, members: Iterable[int]) -> float:
    """Symmetry of the sub-network spanned by ``members``.

    One minus the mean relative pair strength over all unordered member
    pairs: 1 for a fully reciprocal subset, 0 for a fully one-way one.
    Requires at least two distinct members.
    """
    idx = np.unique(np.asarray(list(members), dtype=np.int64))
    m = idx.size
    if m < 2:
        raise ValueError("symmetry needs at least two distinct nodes")
    if idx[0] < 0 or idx[-1] >= W.n:
        raise ValueError(f"node id {idx[0] if idx[0] < 0 else idx[-1]} out of range")
    sub = W.w[np.ix_(idx, idx)]
    z = _relative_strengths(sub)
    iu = np.triu_indices(m, k=1)
    return 1.0 - float(z[iu].mean())


@dataclass(frozen=True)
class DetectionConfig:
    """Thresholds and seeding for one detection run.

    Attributes
    ----------
    symmetry_threshold : float
        Minimum subset symmetry for an accepted community.
    pair_threshold : float
        Pair-level bidirectionality cutoff.  Derived as
        ``1 - symmetry_threshold`` when not given; if given it must agree
        with the derived value to within 1e-12.
    community_fraction : float
        Fraction of the other members each member must form bidirectional
        pairs with.
    pool_min_pairs : int
        Minimum bidirectional-pair count for a node to enter and stay in the
        candidate pool.
    min_community_size : int
        Sets smaller than this are discarded as noise.
    merge_overlap : float
        Two detected communities are merge candidates when the larger of
        their mutual overlap fractions exceeds this.
    seed : int
        Master seed for the one random stream the detector consumes (the
        membership-growth visiting order).
    """

    symmetry_threshold: float = DEFAULT_SYMMETRY_THRESHOLD
    pair_threshold: float | None = None
    community_fraction: float = DEFAULT_COMMUNITY_FRACTION
    pool_min_pairs: int = 1
    min_community_size: int = 30
    merge_overlap: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.symmetry_threshold <= 1.0:
            raise ValueError(f"symmetry threshold must lie in [0, 1], got {self.symmetry_threshold}")
        derived = bidirectionality_threshold(self.symmetry_threshold)
        if self.pair_threshold is None:
            object.__setattr__(self, "pair_threshold", derived)
        elif abs(self.pair_threshold - derived) > 1e-12:
            raise ValueError(
                f"pair threshold {self.pair_threshold} inconsistent with "
                f"symmetry threshold {self.symmetry_threshold} (expected {derived})"
            )
        if not 0.0 < self.community_fraction <= 1.0:
            raise ValueError(f"community fraction must lie in (0, 1], got {self.community_fraction}")
        if self.pool_min_pairs < 0:
            raise ValueError(f"pool pair minimum must be non-negative, got {self.pool_min_pairs}")
        if self.min_community_size < 3:
            raise ValueError(f"minimum community size must be at least 3, got {self.min_community_size}")
        if not 0.0 <= self.merge_overlap <= 1.0:
            raise ValueError(f"merge overlap must lie in [0, 1], got {self.merge_overlap}")

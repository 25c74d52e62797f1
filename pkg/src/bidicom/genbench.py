"""Ground-truthed benchmark networks with planted bidirectional communities.

A benchmark network starts as pure uniform noise: every ordered pair of
distinct nodes gets an independent weight in [0, 1].  Planted communities
then overwrite their internal pairs with weight couples engineered to hit a
target symmetry: each pair's relative strength is drawn from a Gaussian
around ``1 - symmetry`` (reflected into [0, 1]) and converted back into two
weights that reproduce it exactly.  Consecutive communities may share nodes;
pairs inside a shared block keep the values the earlier community gave them,
and the later community compensates by shifting the mean of its remaining
pairs so its own symmetry target is preserved.

Everything is driven by one seeded generator in a fixed draw order
(background weights, node relabelling, then per community: one batch of
pair strengths, then one uniform and one coin per new pair), so a spec with
a given seed always produces the same network.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import norm

from .metrics import (
    DEFAULT_COMMUNITY_FRACTION,
    DEFAULT_SYMMETRY_THRESHOLD,
    ConnectivityMatrix,
    bidirectionality_threshold,
)


class InfeasibleSpecError(ValueError):
    """The requested structure cannot be built (node budget, overlap chain,
    or an overlap-compensated pair-strength mean outside [0, 1))."""


def pair_bidir_probability(symmetry: float, sigma: float, pair_threshold: float) -> float:
    """Probability that a planted pair comes out bidirectional.

    Pair strengths are drawn from Normal(1 - symmetry, sigma) and reflected
    at zero, so the mass landing in [0, pair_threshold] is the direct region
    plus the mirrored negative tail.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mean = 1.0 - symmetry
    return float(
        norm.cdf((pair_threshold - mean) / sigma) - norm.cdf((-pair_threshold - mean) / sigma)
    )


@dataclass(frozen=True)
class CommunitySpec:
    """Recipe for one planted community.

    ``overlap_prev`` is the fraction of this community's nodes shared with
    the community immediately before it in the network spec; the first
    community must use 0.
    """

    size: int
    symmetry: float
    sigma: float
    overlap_prev: float = 0.0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"community size must be at least 2, got {self.size}")
        if not DEFAULT_SYMMETRY_THRESHOLD <= self.symmetry <= 1.0:
            raise ValueError(
                f"community symmetry must lie in [{DEFAULT_SYMMETRY_THRESHOLD}, 1], "
                f"got {self.symmetry}"
            )
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.overlap_prev < 1.0:
            raise ValueError(f"overlap fraction must lie in [0, 1), got {self.overlap_prev}")
        p = pair_bidir_probability(
            self.symmetry, self.sigma, bidirectionality_threshold(DEFAULT_SYMMETRY_THRESHOLD)
        )
        if p <= DEFAULT_COMMUNITY_FRACTION:
            raise ValueError(
                f"bidirectional-pair probability {p:.4f} does not exceed the community "
                f"fraction {DEFAULT_COMMUNITY_FRACTION}; the planted set would not be a community"
            )
        if self.overlap_count >= self.size:
            raise ValueError("overlap must leave at least one node exclusive to the community")

    @property
    def overlap_count(self) -> int:
        """Shared-node count with the previous community, round half up."""
        return int(np.floor(self.overlap_prev * self.size + 0.5))

    @property
    def pair_count(self) -> int:
        return self.size * (self.size - 1) // 2


@dataclass(frozen=True)
class NetworkSpec:
    """Full recipe: network size, ordered planted communities, master seed."""

    n: int
    communities: tuple[CommunitySpec, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "communities", tuple(self.communities))
        if self.n < 2:
            raise ValueError(f"network must have at least two nodes, got {self.n}")
        specs = self.communities
        if specs and specs[0].overlap_prev != 0.0:
            raise InfeasibleSpecError("the first community has nothing to overlap with")
        total = 0
        for k, spec in enumerate(specs):
            shared = spec.overlap_count
            if k > 0 and shared > specs[k - 1].size - specs[k - 1].overlap_count:
                # only consecutive communities may share nodes, so the shared
                # block cannot reach into the previous community's own overlap
                raise InfeasibleSpecError(
                    f"community {k + 1} needs {shared} shared nodes but community {k} "
                    f"has only {specs[k - 1].size - specs[k - 1].overlap_count} exclusive ones"
                )
            total += spec.size - shared
        if total > self.n:
            raise InfeasibleSpecError(
                f"communities need {total} distinct nodes but the network has {self.n}"
            )


@dataclass(frozen=True)
class GroundTruth:
    """Planted membership, index-aligned with the spec's community list."""

    communities: tuple[tuple[int, ...], ...]

    def sets(self) -> list[frozenset[int]]:
        return [frozenset(c) for c in self.communities]


def _reflect_into_unit(z: np.ndarray) -> np.ndarray:
    # reflection at 0 and 1; iterate because a far-out sample can bounce twice
    z = np.abs(z)
    while True:
        high = z > 1.0
        if not high.any():
            return z
        z[high] = 2.0 - z[high]
        z = np.abs(z)


def generate_community_pairs(
    spec: CommunitySpec, fixed: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw pair strengths for the community's not-yet-fixed pairs.

    ``fixed`` holds the strengths already imposed on pairs shared with the
    previous community.  The remaining pairs are drawn around a compensated
    mean so the community's overall expected strength still averages to
    ``1 - symmetry``; a compensated mean outside [0, 1) cannot be sampled
    and makes the spec infeasible.
    """
    fixed = np.asarray(fixed, dtype=np.float64)
    m_all = spec.pair_count
    m_new = m_all - fixed.size
    if fixed.size > m_all:
        raise ValueError(f"{fixed.size} fixed pairs exceed the community's {m_all} pairs")
    if m_new == 0:
        return np.empty(0)
    mean = (m_all * (1.0 - spec.symmetry) - float(fixed.sum())) / m_new
    if not 0.0 <= mean < 1.0:
        raise InfeasibleSpecError(
            f"overlap with the previous community forces a pair-strength mean of "
            f"{mean:.4f}, outside [0, 1)"
        )
    return _reflect_into_unit(rng.normal(mean, spec.sigma, size=m_new))


def reconstruct_weights(z: float, rng: np.random.Generator) -> tuple[float, float]:
    """Turn one pair strength into a weight couple that reproduces it exactly.

    The first weight is uniform in (0, 1); a fair coin decides whether the
    second one is the stronger or the weaker solution, falling back to the
    weaker one when the stronger overflows 1 (or z = 1, where it diverges).
    """
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"pair strength must lie in [0, 1], got {z}")
    w1 = float(rng.uniform())
    while w1 == 0.0:  # zero would collapse the pair to the 0/0 convention
        w1 = float(rng.uniform())
    w2 = -1.0
    if rng.random() < 0.5 and z < 1.0:
        w2 = w1 * (1.0 + z) / (1.0 - z)
    if not 0.0 <= w2 <= 1.0:
        w2 = w1 * (1.0 - z) / (1.0 + z)
    return w1, w2


def generate_network(spec: NetworkSpec) -> tuple[ConnectivityMatrix, GroundTruth]:
    """Build the full weight matrix and the planted membership lists.

    Community layout is assembled on contiguous slot ranges (each community
    inherits its shared block from the tail of the previous one) and then
    relabelled by a random node permutation, so planted members are scattered
    over the id space.  Deterministic given ``spec.seed``.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    W = rng.uniform(size=(n, n))
    np.fill_diagonal(W, 0.0)
    node_of_slot = rng.permutation(n)

    zmat = np.full((n, n), np.nan)
    slot_lists: list[list[int]] = []
    cursor = 0
    for k, cspec in enumerate(spec.communities):
        shared = cspec.overlap_count if k > 0 else 0
        inherited = slot_lists[-1][len(slot_lists[-1]) - shared:] if shared else []
        fresh = list(range(cursor, cursor + cspec.size - shared))
        cursor += cspec.size - shared
        slots = inherited + fresh
        slot_lists.append(slots)

        inherited_set = set(inherited)
        fixed_vals, new_pairs = [], []
        for a, b in combinations(sorted(slots), 2):
            if a in inherited_set and b in inherited_set:
                fixed_vals.append(zmat[a, b])
            else:
                new_pairs.append((a, b))
        zs = generate_community_pairs(cspec, np.asarray(fixed_vals), rng)
        for (a, b), z in zip(new_pairs, zs):
            w1, w2 = reconstruct_weights(float(z), rng)
            W[a, b], W[b, a] = w1, w2
            zmat[a, b] = z

    out = np.empty_like(W)
    out[np.ix_(node_of_slot, node_of_slot)] = W
    truth = GroundTruth(
        communities=tuple(
            tuple(sorted(int(node_of_slot[s]) for s in slots)) for slots in slot_lists
        )
    )
    return ConnectivityMatrix.from_array(out), truth

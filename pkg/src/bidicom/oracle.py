"""Exhaustive reference implementations for testing at toy scale.

These trade all efficiency for obviousness: membership bounds are checked in
exact rational arithmetic and candidate sets are enumerated by brute force,
so the detector's shortcuts can be validated against an implementation with
no shortcuts at all.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .metrics import PairStrengthMatrix

ENUMERATION_CAP = 20  # the subset scan is exponential


def verify_community(members, P: PairStrengthMatrix, community_fraction: float) -> bool:
    """Check the community property by definition, with no rounding anywhere.

    True iff every member forms bidirectional pairs with at least
    ``community_fraction`` of the other members.
    """
    ids = np.unique(np.asarray(list(members), dtype=np.int64))
    if ids.size == 0:
        raise ValueError("a community needs at least one member")
    if ids[0] < 0 or ids[-1] >= P.n:
        raise ValueError(f"member ids must lie in [0, {P.n}), got {ids[0]} .. {ids[-1]}")
    bound = Fraction(community_fraction) * (int(ids.size) - 1)
    within = P.bidirectional[np.ix_(ids, ids)].sum(axis=1)
    return all(Fraction(int(d)) >= bound for d in within)


def enumerate_communities(
    P: PairStrengthMatrix, community_fraction: float, min_size: int
) -> list[tuple[int, ...]]:
    """Every maximal qualifying node set, by scanning all subsets.

    Returns the sets of size ≥ ``min_size`` that satisfy
    :func:`verify_community` and are not strict subsets of another returned
    set, sorted by member tuple.  Refuses networks beyond
    ``ENUMERATION_CAP`` nodes.
    """
    n = P.n
    if n > ENUMERATION_CAP:
        raise ValueError(f"subset enumeration is capped at {ENUMERATION_CAP} nodes, got {n}")
    if min_size < 1:
        raise ValueError(f"min_size must be positive, got {min_size}")

    adjacency = [0] * n
    for i in range(n):
        row = 0
        for j in np.flatnonzero(P.bidirectional[i]):
            row |= 1 << int(j)
        adjacency[i] = row

    # exact minimum pair counts per subset size
    need = [0] * (n + 1)
    for k in range(1, n + 1):
        f = Fraction(community_fraction) * (k - 1)
        need[k] = -((-f.numerator) // f.denominator)

    qualifying = []
    for mask in range(1, 1 << n):
        k = mask.bit_count()
        if k < min_size:
            continue
        m = mask
        ok = True
        while m:
            low = m & -m
            if (adjacency[low.bit_length() - 1] & mask).bit_count() < need[k]:
                ok = False
                break
            m ^= low
        if ok:
            qualifying.append(mask)

    qualifying.sort(key=lambda m: -m.bit_count())
    maximal: list[int] = []
    for mask in qualifying:
        if not any(mask & big == mask for big in maximal):
            maximal.append(mask)

    out = [tuple(int(i) for i in range(n) if mask >> i & 1) for mask in maximal]
    return sorted(out)

"""Bidirectional community detection on dense directed weighted networks.

The pipeline runs in six stages: build a pool of plausible members, carve a
candidate blob out of the popularity ranking, refine it into a blob whose
members all satisfy the community definition, run a friendship stage (core
selection, randomized growth, false-friends expulsion, good-friends
inclusion), gate the result on global symmetry and on a minimum size, and
finally merge redundant detections.  Communities may overlap: the inclusion
scan considers nodes already assigned elsewhere.

Node identity is an integer index into the connectivity matrix.  All
randomness flows from ``DetectionConfig.seed`` through a single generator
consumed only by the growth-stage visiting order, one permutation per blob
in discovery order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations, combinations_with_replacement, product

import numpy as np

from .metrics import (
    ConnectivityMatrix,
    DetectionConfig,
    PairStrengthMatrix,
    pair_strength_matrix,
    symmetry_measure,
)


@lru_cache(maxsize=None)
def _ceil_times(fraction: float, count: int) -> int:
    # ceil(fraction * count) on exact rationals of the stored double, so
    # membership bounds never wobble at representability boundaries.
    f = Fraction(fraction) * count
    return -((-f.numerator) // f.denominator)


def _min_links_within(fraction: float, size: int) -> int:
    """Bidirectional links a member needs inside a set of ``size`` nodes."""
    return _ceil_times(fraction, size - 1)


def _min_links_joining(fraction: float, size: int) -> int:
    """Links into a set of ``size`` nodes a candidate needs to join it."""
    return _ceil_times(fraction, size)


def max_community_size(n_pairs: int, community_fraction: float) -> int:
    """Largest community a node with ``n_pairs`` bidirectional pairs could join.

    The largest integer size ``c`` satisfying
    ``n_pairs >= community_fraction * (c - 1)``, i.e.
    ``floor(n_pairs / community_fraction + 1)`` evaluated exactly.
    """
    if n_pairs < 0:
        raise ValueError(f"pair count must be non-negative, got {n_pairs}")
    if not 0.0 < community_fraction <= 1.0:
        raise ValueError(f"community fraction must lie in (0, 1], got {community_fraction}")
    f = Fraction(n_pairs) / Fraction(community_fraction)
    return f.numerator // f.denominator + 1


# ---------------------------------------------------------------------------
# pipeline value types


@dataclass(frozen=True)
class Pool:
    """Survivors of the pool filter with their within-pool pair counts."""

    members: np.ndarray  # node ids, ascending
    degrees: np.ndarray  # within-pool bidirectional counts, aligned with members

    @cached_property
    def waves(self) -> list[tuple[int, np.ndarray]]:
        """Members grouped by equal degree, most popular group first."""
        out = []
        for d in np.unique(self.degrees)[::-1]:
            out.append((int(d), self.members[self.degrees == d]))
        return out

    def degree_lookup(self, n: int) -> np.ndarray:
        """Degree per node id (-1 for nodes outside the pool)."""
        lut = np.full(n, -1, dtype=np.int64)
        lut[self.members] = self.degrees
        return lut


@dataclass(frozen=True)
class CandidateBlob:
    members: np.ndarray  # node ids, ascending
    size: int
    max_size: int


@dataclass(frozen=True)
class Blob:
    members: np.ndarray        # node ids, ascending
    within_degree: np.ndarray  # bidirectional counts inside the blob, aligned


@dataclass
class Community:
    members: tuple[int, ...]   # ascending
    symmetry: float
    provenance: dict = field(default_factory=dict)


@dataclass
class DetectionTrace:
    """Intermediate products of one detection run, for inspection and tests."""

    blobs: list[tuple[int, ...]] = field(default_factory=list)
    raw_communities: list[Community] = field(default_factory=list)


# ---------------------------------------------------------------------------
# step 1: pool


def build_pool(P: PairStrengthMatrix, cfg: DetectionConfig) -> Pool | None:
    """Filter the network down to nodes that could plausibly join a community.

    A node enters the pool when it forms at least ``cfg.pool_min_pairs``
    bidirectional pairs in the whole network, and stays while it keeps that
    many inside the pool; violators are dropped one round at a time until the
    count stabilizes.  Returns None when fewer than ``cfg.min_community_size``
    nodes survive, since no community could be built from the remainder.
    """
    mask = P.bidirectional
    alive = P.bidir_degree >= cfg.pool_min_pairs
    while True:
        if alive.sum() < cfg.min_community_size:
            return None
        idx = np.flatnonzero(alive)
        deg = mask[np.ix_(idx, idx)].sum(axis=1)
        bad = deg < cfg.pool_min_pairs
        if not bad.any():
            return Pool(members=idx, degrees=deg.astype(np.int64))
        alive[idx[bad]] = False


# ---------------------------------------------------------------------------
# step 2: candidate blob and its validation


def find_candidate_blob(pool: Pool, community_fraction: float) -> CandidateBlob:
    """Carve the largest degree-ranking prefix that could still be one community.

    Starting from the most popular node, whole waves of equally ranked nodes
    are recruited in descending order.  Each member's pair count bounds the
    community size it could belong to; recruitment stops once the set reaches
    the smallest of those bounds.  Overshooting the bound discards the last
    wave, hitting it exactly keeps it.
    """
    if pool.members.size == 0:
        raise ValueError("cannot seed a blob from an empty pool")
    order = np.lexsort((pool.members, -pool.degrees))
    ids = pool.members[order]
    degs = pool.degrees[order]

    seed_deg = int(degs[0])
    size = 1
    cap = max_community_size(seed_deg, community_fraction)
    if size >= cap:
        return CandidateBlob(members=ids[:1].copy(), size=1, max_size=cap)

    # wave boundaries over the rest of the ranking
    cut = 1
    while cut < ids.size:
        wave_deg = int(degs[cut])
        nxt = cut
        while nxt < ids.size and degs[nxt] == wave_deg:
            nxt += 1
        new_size = size + (nxt - cut)
        new_cap = min(cap, max_community_size(wave_deg, community_fraction))
        if new_size > new_cap:
            break  # last wave overshoots: keep the set found before it
        size, cap, cut = new_size, new_cap, nxt
        if size == cap:
            break
    members = np.sort(ids[:cut])
    return CandidateBlob(members=members, size=size, max_size=cap)


def validate_blob(cand: CandidateBlob, P: PairStrengthMatrix, cfg: DetectionConfig) -> Blob | None:
    """Refine a candidate blob until every member meets the community definition.

    Members short of ``community_fraction`` of the others are withdrawn, the
    least-connected node first (ties to the lowest id), recounting after each
    withdrawal.  Removing one node at a time lets a dense kernel survive
    inside a candidate dominated by weakly attached nodes.  Returns None when
    the refinement bottoms out at a single node, meaning there is no blob.
    """
    ids = cand.members
    m = ids.size
    if m <= 1:
        return None
    sub = P.bidirectional[np.ix_(ids, ids)]
    wdeg = sub.sum(axis=1).astype(np.float64)
    gone = np.zeros(m, dtype=bool)
    while m > 1:
        need = _min_links_within(cfg.community_fraction, m)
        live = np.where(gone, np.inf, wdeg)
        k = int(np.argmin(live))  # first minimum = lowest node id
        if live[k] >= need:
            keep = ~gone
            return Blob(members=ids[keep], within_degree=wdeg[keep].astype(np.int64))
        gone[k] = True
        wdeg -= sub[k]
        m -= 1
    return None


# ---------------------------------------------------------------------------
# step 3: friendship (core, growth, expulsion, inclusion)


def select_core(blob: Blob, pool: Pool, P: PairStrengthMatrix) -> tuple[int, int, int] | None:
    """Pick the three most popular pairwise-bidirectional blob nodes.

    Candidate triples are scanned in descending order of their sorted degree
    triple, ties resolved toward lower node ids; the first fully
    bidirectional one wins.  Returns None when the blob has no such triple
    (or fewer than three nodes).
    """
    ids = blob.members
    if ids.size < 3:
        return None
    lut = pool.degree_lookup(P.n)
    degs = lut[ids]
    mask = P.bidirectional

    values = np.unique(degs)[::-1]
    groups = [ids[degs == d] for d in values]

    def ok(a, b, c):
        return mask[a, b] and mask[a, c] and mask[b, c]

    for gi, gj, gk in combinations_with_replacement(range(len(groups)), 3):
        if gi == gj == gk:
            if groups[gi].size < 3:
                continue
            # combinations of an ascending list already come out in sorted order
            for t in combinations(groups[gi].tolist(), 3):
                if ok(*t):
                    return t
            continue
        if gi == gj:
            if groups[gi].size < 2:
                continue
            raw = product(combinations(groups[gi].tolist(), 2), groups[gk].tolist())
            triples = [tuple(sorted((a, b, c))) for (a, b), c in raw]
        elif gj == gk:
            if groups[gj].size < 2:
                continue
            raw = product(groups[gi].tolist(), combinations(groups[gj].tolist(), 2))
            triples = [tuple(sorted((a, b, c))) for a, (b, c) in raw]
        else:
            raw = product(groups[gi].tolist(), groups[gj].tolist(), groups[gk].tolist())
            triples = [tuple(sorted(t)) for t in raw]
        for t in sorted(triples):
            if ok(*t):
                return t
    return None


def grow_candidate_community(
    core: tuple[int, int, int],
    blob: Blob,
    P: PairStrengthMatrix,
    cfg: DetectionConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Grow the core by visiting the remaining blob nodes in random order.

    A visited node joins when its bidirectional links into the current
    candidate reach the joining bound for the current size; nodes rejected
    here may still be recruited by the later inclusion scan.
    """
    mask = P.bidirectional
    members = sorted(int(x) for x in core)
    in_set = np.zeros(P.n, dtype=bool)
    in_set[members] = True
    links = mask[:, members].sum(axis=1)
    size = len(members)

    rest = np.setdiff1d(blob.members, np.asarray(members))
    for j in rest[rng.permutation(rest.size)]:
        if links[j] >= _min_links_joining(cfg.community_fraction, size):
            in_set[j] = True
            links += mask[:, j]
            size += 1
    return np.flatnonzero(in_set)


def expel_false_friends(cand: np.ndarray, P: PairStrengthMatrix, cfg: DetectionConfig) -> np.ndarray:
    """Drop members short of the within-set bound, all at once per pass, to a fixpoint."""
    ids = np.unique(np.asarray(cand, dtype=np.int64))
    mask = P.bidirectional
    while ids.size:
        need = _min_links_within(cfg.community_fraction, ids.size)
        wdeg = mask[np.ix_(ids, ids)].sum(axis=1)
        keep = wdeg >= need
        if keep.all():
            break
        ids = ids[keep]
    return ids


def include_good_friends(
    cand: np.ndarray,
    blob_rest: np.ndarray,
    pool: Pool,
    P: PairStrengthMatrix,
    cfg: DetectionConfig,
) -> np.ndarray:
    """Recruit qualifying outsiders: blob leftovers first, then the whole pool.

    Both scans run in descending pool-degree order (ties to the lowest id).
    The pool scan deliberately includes nodes already assigned to other
    communities, which is what allows detected communities to overlap.
    Passes repeat until one adds nobody.
    """
    mask = P.bidirectional
    lut = pool.degree_lookup(P.n)

    def ordered(a: np.ndarray) -> list[int]:
        a = np.asarray(a, dtype=np.int64)
        return a[np.lexsort((a, -lut[a]))].tolist()

    rest = ordered(blob_rest) if len(blob_rest) else []
    others = ordered(np.setdiff1d(pool.members, np.asarray(blob_rest, dtype=np.int64)))
    scan = rest + others

    in_set = np.zeros(P.n, dtype=bool)
    in_set[np.asarray(cand, dtype=np.int64)] = True
    members = np.flatnonzero(in_set)
    links = mask[:, members].sum(axis=1)
    size = members.size

    changed = True
    while changed:
        changed = False
        for j in scan:
            if in_set[j]:
                continue
            if links[j] >= _min_links_joining(cfg.community_fraction, size):
                in_set[j] = True
                links += mask[:, j]
                size += 1
                changed = True
    return np.flatnonzero(in_set)


# ---------------------------------------------------------------------------
# steps 4-6: global control, noise filter, merging


def global_control(cand: np.ndarray, W: ConnectivityMatrix, cfg: DetectionConfig) -> bool:
    """Accept a candidate only when its overall symmetry clears the threshold."""
    return symmetry_measure(W, cand) >= cfg.symmetry_threshold


def noise_filter(communities: list[Community], cfg: DetectionConfig) -> list[Community]:
    """Drop detected sets too small to distinguish from background noise."""
    return [c for c in communities if len(c.members) >= cfg.min_community_size]


def _is_valid_community(ids: np.ndarray, mask: np.ndarray, fraction: float) -> bool:
    need = _min_links_within(fraction, ids.size)
    return bool((mask[np.ix_(ids, ids)].sum(axis=1) >= need).all())


def _overlap(a: frozenset, b: frozenset) -> float:
    inter = len(a & b)
    return max(inter / len(b), inter / len(a))


def merge_redundant(
    communities: list[Community], W: ConnectivityMatrix, cfg: DetectionConfig
) -> list[Community]:
    """Collapse duplicate detections and merge strongly overlapping ones.

    Exact duplicates are collapsed first.  Remaining pairs whose larger
    mutual overlap fraction exceeds ``cfg.merge_overlap`` are evaluated in
    descending overlap order: the union replaces the pair only when it is
    more symmetric than both parts and itself satisfies the community
    definition (otherwise the union would not be a community at all).
    Overlaps are recomputed after every accepted merge, until stable.
    """
    mask = pair_strength_matrix(W, cfg.pair_threshold).bidirectional

    # collapse exact duplicates, keeping first-discovery provenance
    seen: dict[frozenset, Community] = {}
    for c in communities:
        seen.setdefault(frozenset(c.members), c)
    current = list(seen.values())

    rejected: set[frozenset] = set()
    while True:
        pairs = []
        for i, j in combinations(range(len(current)), 2):
            a, b = frozenset(current[i].members), frozenset(current[j].members)
            ov = _overlap(a, b)
            if ov > cfg.merge_overlap and frozenset((a, b)) not in rejected:
                pairs.append((-ov, current[i].members, current[j].members, i, j))
        if not pairs:
            return sorted(current, key=lambda c: c.members)
        pairs.sort()
        _, _, _, i, j = pairs[0]
        a, b = current[i], current[j]
        union = np.union1d(
            np.asarray(a.members, dtype=np.int64), np.asarray(b.members, dtype=np.int64)
        )
        s_union = symmetry_measure(W, union)
        if (
            s_union > a.symmetry
            and s_union > b.symmetry
            and _is_valid_community(union, mask, cfg.community_fraction)
        ):
            merged = Community(
                members=tuple(int(x) for x in union),
                symmetry=s_union,
                provenance={"merged_from": [a.provenance, b.provenance]},
            )
            current = [c for k, c in enumerate(current) if k not in (i, j)]
            # the union may coincide with an existing detection
            if not any(frozenset(c.members) == frozenset(merged.members) for c in current):
                current.append(merged)
        else:
            rejected.add(frozenset((frozenset(a.members), frozenset(b.members))))


# ---------------------------------------------------------------------------
# full pipeline


def detect_communities(
    W: ConnectivityMatrix, cfg: DetectionConfig, *, merge: bool = True
) -> list[Community]:
    """Run the full detection pipeline on a network.

    Returns accepted communities sorted by member tuple.  ``merge=False``
    skips the final merging stage (useful when studying the raw detections).
    """
    communities, _ = detect_communities_trace(W, cfg, merge=merge)
    return communities


def detect_communities_trace(
    W: ConnectivityMatrix, cfg: DetectionConfig, *, merge: bool = True
) -> tuple[list[Community], DetectionTrace]:
    """Same as :func:`detect_communities`, also returning intermediate products."""
    if W.n < 2:
        raise ValueError(f"network must have at least two nodes, got {W.n}")
    P = pair_strength_matrix(W, cfg.pair_threshold)
    trace = DetectionTrace()
    pool = build_pool(P, cfg)
    if pool is None:
        return [], trace

    mask = P.bidirectional
    rng = np.random.default_rng(cfg.seed)
    n = W.n
    in_pool = np.zeros(n, dtype=bool)
    in_pool[pool.members] = True

    # seeding eligibility shrinks as blobs are consumed and communities found;
    # degrees among the still-eligible nodes are maintained incrementally
    active = in_pool.copy()
    act_deg = np.zeros(n, dtype=np.int64)
    act_deg[pool.members] = pool.degrees

    accepted: list[Community] = []
    blob_index = 0
    while active.any():
        members = np.flatnonzero(active)
        apool = Pool(members=members, degrees=act_deg[members])
        cand = find_candidate_blob(apool, cfg.community_fraction)
        blob = validate_blob(cand, P, cfg)
        if blob is None or blob.members.size < cfg.min_community_size:
            # the densest structure left is noise-scale: the search is over
            break
        trace.blobs.append(tuple(int(x) for x in blob.members))

        consumed = set(blob.members.tolist())
        core = select_core(blob, apool, P)
        if core is not None:
            grown = grow_candidate_community(core, blob, P, cfg, rng)
            kept = expel_false_friends(grown, P, cfg)
            if kept.size:
                rest = np.setdiff1d(blob.members, kept)
                full = include_good_friends(kept, rest, pool, P, cfg)
                # inclusion can invalidate earlier members, so re-check before
                # anything is emitted
                final = expel_false_friends(full, P, cfg)
                if final.size >= 2:
                    sym = symmetry_measure(W, final)
                    if sym >= cfg.symmetry_threshold:
                        fset = frozenset(int(x) for x in final)
                        # a candidate nested inside an earlier detection is that
                        # community found again through the inclusion scan, not
                        # a new one; a strict superset completes the earlier
                        # partial detection and takes its place
                        if not any(fset <= frozenset(a.members) for a in accepted):
                            accepted = [
                                a for a in accepted if not fset > frozenset(a.members)
                            ]
                            accepted.append(
                                Community(
                                    members=tuple(int(x) for x in final),
                                    symmetry=sym,
                                    provenance={"blob": blob_index},
                                )
                            )
                            consumed.update(int(x) for x in final if in_pool[x])
        blob_index += 1

        gone = np.fromiter((i for i in consumed if active[i]), dtype=np.int64)
        active[gone] = False
        act_deg -= mask[:, gone].sum(axis=1)

    trace.raw_communities = list(accepted)
    emitted = noise_filter(accepted, cfg)
    if merge:
        emitted = merge_redundant(emitted, W, cfg)
    return sorted(emitted, key=lambda c: c.members), trace

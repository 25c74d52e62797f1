"""Scoring of detected communities against planted ground truth.

A real community counts as identified when some detected set contains at
least a fraction ``theta_recog`` of its members.  A detected set covering
two or more real communities that way is recorded as unresolved (typically
two heavily overlapping communities found as one big set); the remaining
detections compete for one-to-one matches, and whatever ends up neither
matched nor unresolved is a false community.

All containment comparisons are exact rational arithmetic, so threshold
boundaries behave identically on every platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .genbench import GroundTruth

DEFAULT_RECOGNITION_FRACTION = 0.75


def _set_rank_hash(members: frozenset[int]) -> bytes:
    # stable 8-byte tie-break rank for a node set, independent of platform
    # hash randomization and of the order members were produced in
    payload = b",".join(str(m).encode() for m in sorted(members))
    return hashlib.blake2b(payload, digest_size=8).digest()


@dataclass(frozen=True)
class RealCommunityMatch:
    """Outcome for one planted community in one run."""

    real_size: int
    matched: bool
    detected_index: int | None = None
    good_fraction: float | None = None   # |D∩R| / |R|
    false_fraction: float | None = None  # |D∖R| / |R|
    unresolved: bool = False


@dataclass(frozen=True)
class MatchReport:
    """Per-run evaluation: one entry per planted community plus global counts."""

    matches: tuple[RealCommunityMatch, ...]
    unresolved_detected: tuple[int, ...]
    false_communities: int
    runtime_per_node: float | None = None

    def identified(self, index: int) -> bool:
        """Whether planted community ``index`` was found, resolved or not."""
        m = self.matches[index]
        return m.matched or m.unresolved


def match_communities(
    detected: list,
    truth: GroundTruth,
    theta_recog: float = DEFAULT_RECOGNITION_FRACTION,
) -> MatchReport:
    """Classify detected node sets against the planted communities.

    ``detected`` may hold any iterables of node ids (Community objects work
    through their ``members``).  Real communities claim their matches in
    descending size order; among the detected sets qualifying for a real
    community the one with the largest contained fraction wins, ties going
    to the smaller detected set and then to a stable content hash.
    """
    if not 0.0 < theta_recog <= 1.0:
        raise ValueError(f"recognition fraction must lie in (0, 1], got {theta_recog}")
    dsets = [frozenset(int(i) for i in getattr(d, "members", d)) for d in detected]
    rsets = [frozenset(c) for c in truth.communities]
    bar = Fraction(theta_recog)

    qualifies = [[len(d & r) >= bar * len(r) for r in rsets] for d in dsets]
    unresolved_detected = tuple(i for i, q in enumerate(qualifies) if sum(q) >= 2)
    unresolved_set = set(unresolved_detected)

    # one-to-one assignment: biggest real communities choose first
    order = sorted(range(len(rsets)), key=lambda k: (-len(rsets[k]), k))
    assigned: dict[int, int] = {}
    claimed: set[int] = set()
    for k in order:
        r = rsets[k]
        best = None
        for i, d in enumerate(dsets):
            if i in claimed or i in unresolved_set or not qualifies[i][k]:
                continue
            rank = (-Fraction(len(d & r), len(r)), len(d), _set_rank_hash(d))
            if best is None or rank < best[0]:
                best = (rank, i)
        if best is not None:
            assigned[k] = best[1]
            claimed.add(best[1])

    matches = []
    for k, r in enumerate(rsets):
        i = assigned.get(k)
        if i is None:
            covered = any(qualifies[i][k] for i in unresolved_detected)
            matches.append(
                RealCommunityMatch(real_size=len(r), matched=False, unresolved=covered)
            )
        else:
            d = dsets[i]
            matches.append(
                RealCommunityMatch(
                    real_size=len(r),
                    matched=True,
                    detected_index=i,
                    good_fraction=len(d & r) / len(r),
                    false_fraction=len(d - r) / len(r),
                )
            )

    false_count = sum(
        1 for i in range(len(dsets)) if i not in claimed and i not in unresolved_set
    )
    return MatchReport(
        matches=tuple(matches),
        unresolved_detected=unresolved_detected,
        false_communities=false_count,
    )


@dataclass(frozen=True)
class CommunityAggregate:
    """Detection statistics for one planted community across repeated runs."""

    real_size: int
    resolved_count: int
    unresolved_count: int
    good_pct_mean: float  # over resolved runs; nan when never resolved
    false_pct_mean: float


@dataclass(frozen=True)
class AggregateReport:
    per_community: tuple[CommunityAggregate, ...]
    false_communities_mean: float
    time_per_node_mean: float = field(default=float("nan"))
    time_per_node_stderr: float = field(default=float("nan"))


def aggregate(reports: list[MatchReport]) -> AggregateReport:
    """Fold per-run reports into the summary used by benchmark output.

    Neuron percentages average over the runs where the community was
    resolved; the resolved/unresolved split is reported separately.  Runtime
    statistics use the runs that carried timing, with the standard error of
    the mean (0 for a single run).
    """
    if not reports:
        raise ValueError("cannot aggregate zero reports")
    width = len(reports[0].matches)
    if any(len(r.matches) != width for r in reports):
        raise ValueError("reports disagree on the number of planted communities")

    per = []
    for k in range(width):
        outcomes = [r.matches[k] for r in reports]
        goods = [m.good_fraction for m in outcomes if m.matched]
        falses = [m.false_fraction for m in outcomes if m.matched]
        per.append(
            CommunityAggregate(
                real_size=outcomes[0].real_size,
                resolved_count=len(goods),
                unresolved_count=sum(1 for m in outcomes if m.unresolved and not m.matched),
                good_pct_mean=100.0 * float(np.mean(goods)) if goods else float("nan"),
                false_pct_mean=100.0 * float(np.mean(falses)) if falses else float("nan"),
            )
        )

    times = [r.runtime_per_node for r in reports if r.runtime_per_node is not None]
    if times:
        t_mean = float(np.mean(times))
        t_err = float(np.std(times, ddof=1) / np.sqrt(len(times))) if len(times) > 1 else 0.0
    else:
        t_mean = t_err = float("nan")
    return AggregateReport(
        per_community=tuple(per),
        false_communities_mean=float(np.mean([r.false_communities for r in reports])),
        time_per_node_mean=t_mean,
        time_per_node_stderr=t_err,
    )

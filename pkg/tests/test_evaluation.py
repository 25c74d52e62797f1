"""Unit tests for matching detections to ground truth and aggregating runs."""

from __future__ import annotations

import math

import pytest

from bidicom.detect import Community
from bidicom.evaluation import (
    MatchReport,
    RealCommunityMatch,
    aggregate,
    match_communities,
)
from bidicom.genbench import GroundTruth


def truth_of(*sets):
    return GroundTruth(communities=tuple(tuple(sorted(s)) for s in sets))


class TestMatching:
    def test_exact_match(self):
        report = match_communities([set(range(40))], truth_of(range(40)))
        m = report.matches[0]
        assert m.matched
        assert m.detected_index == 0
        assert m.good_fraction == 1.0
        assert m.false_fraction == 0.0
        assert report.false_communities == 0
        assert report.identified(0)

    def test_community_objects_accepted(self):
        det = Community(members=tuple(range(40)), symmetry=0.9)
        report = match_communities([det], truth_of(range(40)))
        assert report.matches[0].matched

    def test_recognition_boundary_is_inclusive(self):
        # 150 of 200 members is exactly three quarters
        report = match_communities([set(range(150))], truth_of(range(200)))
        m = report.matches[0]
        assert m.matched
        assert m.good_fraction == pytest.approx(0.75)
        assert m.false_fraction == 0.0

    def test_below_recognition_boundary(self):
        report = match_communities([set(range(149))], truth_of(range(200)))
        assert not report.matches[0].matched
        assert not report.identified(0)
        # the unrecognized detection counts as a false community
        assert report.false_communities == 1

    def test_foreign_members_counted_against_detection(self):
        detected = set(range(6)) | {100, 101}
        report = match_communities([detected], truth_of(range(8)))
        m = report.matches[0]
        assert m.matched
        assert m.good_fraction == pytest.approx(6 / 8)
        assert m.false_fraction == pytest.approx(2 / 8)

    def test_unresolved_detection_covers_both_communities(self):
        r1, r2 = set(range(10)), set(range(8, 18))
        report = match_communities([r1 | r2], truth_of(r1, r2))
        assert report.unresolved_detected == (0,)
        for k in (0, 1):
            assert not report.matches[k].matched
            assert report.matches[k].unresolved
            assert report.identified(k)
        assert report.false_communities == 0

    def test_unresolved_detection_does_not_compete(self):
        # the big covering set is set aside; the exact copy of r1 matches it
        r1, r2 = set(range(10)), set(range(8, 18))
        report = match_communities([r1 | r2, r1], truth_of(r1, r2))
        assert report.unresolved_detected == (0,)
        assert report.matches[0].matched
        assert report.matches[0].detected_index == 1
        assert report.matches[1].unresolved
        assert not report.matches[1].matched

    def test_best_fraction_wins_the_real_community(self):
        full = set(range(10))
        partial = set(range(8))
        report = match_communities([partial, full], truth_of(range(10)))
        assert report.matches[0].detected_index == 1
        assert report.false_communities == 1  # the loser qualifies nowhere else

    def test_equal_fraction_prefers_smaller_detection(self):
        lean = set(range(10))
        padded = set(range(10)) | {50, 51, 52}
        report = match_communities([padded, lean], truth_of(range(10)))
        assert report.matches[0].detected_index == 1

    def test_input_order_does_not_change_outcome(self):
        a = set(range(9))           # 9 of 10
        b = set(range(1, 10))       # a different 9 of 10
        r = truth_of(range(10))
        first = match_communities([a, b], r)
        second = match_communities([b, a], r)
        ka = first.matches[0]
        kb = second.matches[0]
        assert ka.matched and kb.matched
        # same winning set regardless of presentation order
        winner_first = [a, b][ka.detected_index]
        winner_second = [b, a][kb.detected_index]
        assert winner_first == winner_second

    def test_bigger_real_community_claims_first(self):
        big = set(range(20))
        small = set(range(30, 38))
        det_big = set(range(20))
        det_small = set(range(30, 38))
        report = match_communities([det_small, det_big], truth_of(small, big))
        assert report.matches[0].detected_index == 0
        assert report.matches[1].detected_index == 1
        assert report.false_communities == 0

    def test_missed_community_with_no_detections(self):
        report = match_communities([], truth_of(range(10)))
        assert not report.matches[0].matched
        assert not report.matches[0].unresolved
        assert report.false_communities == 0

    @pytest.mark.parametrize("bad", [0.0, -0.5, 1.1])
    def test_invalid_recognition_fraction(self, bad):
        with pytest.raises(ValueError):
            match_communities([], truth_of(range(4)), theta_recog=bad)

    def test_full_recognition_requires_containment(self):
        report = match_communities([set(range(9))], truth_of(range(10)), theta_recog=1.0)
        assert not report.matches[0].matched
        report = match_communities([set(range(10))], truth_of(range(10)), theta_recog=1.0)
        assert report.matches[0].matched


def report_with(matches, false=0, time=None):
    return MatchReport(
        matches=tuple(matches),
        unresolved_detected=(),
        false_communities=false,
        runtime_per_node=time,
    )


def hit(size=10, good=1.0, false=0.0):
    return RealCommunityMatch(
        real_size=size, matched=True, detected_index=0,
        good_fraction=good, false_fraction=false,
    )


def miss(size=10, unresolved=False):
    return RealCommunityMatch(real_size=size, matched=False, unresolved=unresolved)


class TestAggregate:
    def test_resolved_and_unresolved_counted_separately(self):
        agg = aggregate([
            report_with([hit(good=0.9, false=0.1)]),
            report_with([miss(unresolved=True)]),
            report_with([miss()]),
        ])
        c = agg.per_community[0]
        assert c.resolved_count == 1
        assert c.unresolved_count == 1
        assert c.good_pct_mean == pytest.approx(90.0)
        assert c.false_pct_mean == pytest.approx(10.0)

    def test_percentages_average_over_resolved_runs_only(self):
        agg = aggregate([
            report_with([hit(good=1.0)]),
            report_with([hit(good=0.8)]),
            report_with([miss()]),
        ])
        assert agg.per_community[0].good_pct_mean == pytest.approx(90.0)

    def test_never_resolved_community_has_no_percentage(self):
        agg = aggregate([report_with([miss()]), report_with([miss()])])
        assert math.isnan(agg.per_community[0].good_pct_mean)
        assert math.isnan(agg.per_community[0].false_pct_mean)

    def test_false_community_mean(self):
        agg = aggregate([
            report_with([hit()], false=2),
            report_with([hit()], false=0),
        ])
        assert agg.false_communities_mean == pytest.approx(1.0)

    def test_runtime_mean_and_standard_error(self):
        agg = aggregate([
            report_with([hit()], time=1.0),
            report_with([hit()], time=3.0),
        ])
        assert agg.time_per_node_mean == pytest.approx(2.0)
        # sample std of {1, 3} is sqrt(2); stderr divides by sqrt(2)
        assert agg.time_per_node_stderr == pytest.approx(1.0)

    def test_single_timed_run_has_zero_stderr(self):
        agg = aggregate([report_with([hit()], time=0.5)])
        assert agg.time_per_node_mean == pytest.approx(0.5)
        assert agg.time_per_node_stderr == 0.0

    def test_untimed_runs_leave_nan(self):
        agg = aggregate([report_with([hit()])])
        assert math.isnan(agg.time_per_node_mean)
        assert math.isnan(agg.time_per_node_stderr)

    def test_mixed_timing_uses_timed_runs(self):
        agg = aggregate([
            report_with([hit()], time=2.0),
            report_with([hit()]),
        ])
        assert agg.time_per_node_mean == pytest.approx(2.0)
        assert agg.time_per_node_stderr == 0.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])

    def test_width_mismatch_rejected(self):
        with pytest.raises(ValueError, match="disagree"):
            aggregate([report_with([hit()]), report_with([hit(), hit()])])

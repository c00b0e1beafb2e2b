import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from playernet.errors import TemporalError
from playernet.graph import build_static_graph
from playernet.temporal import (
    Granularity, ParticipationVector, activity_series, build_snapshots, count_peaks, granularity_report,
    participation_vector, rsd, slope,
)
import oracles
from oracles import WEEK, record


def test_single_match_vector():
    s = build_snapshots([record("m", 0, [("a", 600, True)], ["b"])])
    assert s.players[0]["a"] == ParticipationVector(1, 0.0, 600.0, 1.0)


def test_two_match_vector():
    v = participation_vector([(0, 600, True), (3600, 300, False)])
    assert v == ParticipationVector(2, 3600.0, 450.0, 0.5)


def test_gap_is_mean_of_consecutive_gaps():
    times = [0, 10, 40, 100]
    v = participation_vector([(t, 1, True) for t in reversed(times)])
    assert v.avg_inter_match_gap == pytest.approx(np.mean(np.diff(times)))


def test_48_weeks_gives_48_snapshots():
    recs = [record(f"m{w}", w * WEEK + 7, ["a"], ["b"]) for w in range(48)]
    assert build_snapshots(recs, "week").k == 48
    assert build_snapshots(recs, "month").k == 12


def test_granularity_parse():
    assert Granularity.parse("month").seconds == 28 * 24 * 3600
    with pytest.raises(ValueError):
        Granularity.parse("year")


def test_empty_corpus_has_no_snapshots():
    assert build_snapshots([]).k == 0


def test_activity_series_fills_idle_bins():
    recs = [record(f"m{i}", i, ["a"], ["b"]) for i in range(3)] + [record("late", 2 * WEEK, ["a"], ["c"])]
    s = build_snapshots(recs)
    assert activity_series(s, "a") == [3, 0, 1]
    assert activity_series(s, "c") == [1]
    with pytest.raises(TemporalError):
        activity_series(s, "nobody")


def test_constant_activity():
    recs = [record(f"m{w}{i}", w * WEEK + i, ["a"], ["b"]) for w in range(5) for i in range(2)]
    assert activity_series(build_snapshots(recs), "a") == [2] * 5


@pytest.mark.parametrize("series, expected", [([3, 3, 3], 0), ([0, 5, 0, 5, 0], 3), ([7], 0), ([0, 0, 0], 0)])
def test_count_peaks(series, expected):
    assert count_peaks(series, 0.5) == expected


def test_slope_examples():
    assert slope([1, 2, 3, 4]) == pytest.approx(1.0)
    assert slope([5, 5, 5]) == 0.0
    # closed form: Sxy = 4, Sxx = 5
    assert slope([0, 2, 1, 3]) == pytest.approx(0.8)
    with pytest.raises(TemporalError):
        slope([1])


def test_rsd_examples():
    assert rsd([4, 4, 4]) == 0.0
    assert rsd([1, 3]) == pytest.approx(50.0)
    with pytest.raises(TemporalError):
        rsd([0, 0])


series_st = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=30)


@given(series_st, st.integers(-20, 20))
def test_peaks_scale_invariant(xs, exponent):
    # powers of two scale without rounding, so strict comparisons cannot flip
    x = np.asarray(xs)
    assert count_peaks(x, 0.5) == count_peaks(x * 2.0 ** exponent, 0.5)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=30))
def test_slope_reversal(xs):
    assert slope(xs[::-1]) == pytest.approx(-slope(xs), abs=1e-6 * (1 + max(map(abs, xs))))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(list(Granularity)))
def test_snapshot_totals(seed, gran):
    recs = oracles.random_corpus(np.random.default_rng(seed))
    s = build_snapshots(recs, gran)
    totals = {}
    for r in recs:
        for p in r.team_a + r.team_b:
            totals[p.player_id] = totals.get(p.player_id, 0) + 1
    for p, n in totals.items():
        assert sum(snap[p].matches_count for snap in s.players if p in snap) == n
    pair_sum = {}
    for snap in s.pairs:
        for pair, w in snap.items():
            pair_sum[pair] = pair_sum.get(pair, 0) + w
    assert pair_sum == build_static_graph(recs).edges


def test_constant_corpus_report_is_all_zero():
    recs = [record(f"m{w}", w * WEEK, ["a", "b"], ["c"]) for w in range(8)]
    rows = granularity_report(recs, granularities=[Granularity.week])
    med = {r.metric: r.median for r in rows}
    assert med == {"peaks": 0.0, "slope": 0.0, "rsd": 0.0}


def test_single_player_report_is_degenerate():
    recs = [record(f"m{w}{i}", w * WEEK + i * 3600, [("a", 100 * (w + 1), True)], duration=1000)
            for w in range(4) for i in range(w + 1)]
    rows = granularity_report(recs, granularities=[Granularity.week])
    assert {r.metric: r.median for r in rows}["slope"] == pytest.approx(1.0)
    for r in rows:
        assert r.min == r.q25 == r.median == r.q75 == r.max


def test_report_layout():
    recs = [record(f"m{w}", w * WEEK, ["a"], ["b"]) for w in range(3)]
    rows = granularity_report(recs)
    assert [(r.granularity, r.metric) for r in rows] == [
        (g, m) for g in ("day", "week", "month") for m in ("peaks", "slope", "rsd")]
    with pytest.raises(TemporalError):
        granularity_report([])


def test_day_rsd_exceeds_month_rsd(default_corpus):
    med = {(r.granularity, r.metric): r.median for r in granularity_report(default_corpus.records)}
    assert med[("day", "rsd")] >= med[("month", "rsd")]

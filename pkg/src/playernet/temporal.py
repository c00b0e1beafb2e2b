"""Snapshot discretization, participation features and stability diagnostics."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import TemporalError
from .graph import Pair, teammate_pairs
from .ingest import MatchRecord, corpus_anchor
from .stats import descriptive

DAY = 24 * 3600


class Granularity(enum.Enum):
    day = DAY
    week = 7 * DAY
    month = 28 * DAY  # four weeks, not a calendar month

    @property
    def seconds(self) -> int:
        return self.value

    @classmethod
    def parse(cls, name: "str | Granularity") -> "Granularity":
        if isinstance(name, cls):
            return name
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown granularity {name!r}; expected day, week or month") from None


class ParticipationVector(NamedTuple):
    matches_count: int
    avg_inter_match_gap: float
    avg_match_seconds: float
    completion_rate: float


ZERO_VECTOR = ParticipationVector(0, 0.0, 0.0, 0.0)
FEATURES = ParticipationVector._fields


def participation_vector(matches: Sequence[tuple[int, int, bool]]) -> ParticipationVector:
    """Features from ``(start_time, seconds_played, completed)`` triples."""
    n = len(matches)
    if n == 0:
        return ZERO_VECTOR
    times = sorted(m[0] for m in matches)
    # mean of consecutive gaps telescopes to span / (n - 1)
    gap = (times[-1] - times[0]) / (n - 1) if n > 1 else 0.0
    seconds = sum(m[1] for m in matches) / n
    completed = sum(1 for m in matches if m[2]) / n
    return ParticipationVector(n, float(gap), float(seconds), float(completed))


@dataclass(frozen=True)
class SnapshotSeries:
    """A corpus cut into fixed-width bins starting at ``anchor``.

    ``players[t]`` maps each player active in bin ``t`` to its features and
    ``pairs[t]`` maps each teammate pair to its co-play count in that bin.
    """

    granularity: Granularity
    anchor: int
    players: tuple[dict[str, ParticipationVector], ...]
    pairs: tuple[dict[Pair, int], ...]

    @property
    def k(self) -> int:
        return len(self.players)

    def all_players(self) -> list[str]:
        seen: set[str] = set()
        for snap in self.players:
            seen.update(snap)
        return sorted(seen)

    def active_snapshots(self, player: str) -> list[int]:
        return [t for t, snap in enumerate(self.players) if player in snap]

    def vector(self, player: str, t: int) -> ParticipationVector:
        if t < 0:
            return ZERO_VECTOR
        return self.players[t].get(player, ZERO_VECTOR)

    def first_last_active(self) -> dict[str, tuple[int, int]]:
        span: dict[str, tuple[int, int]] = {}
        for t, snap in enumerate(self.players):
            for p in snap:
                first = span[p][0] if p in span else t
                span[p] = (first, t)
        return span


def build_snapshots(records: Iterable[MatchRecord], granularity: "Granularity | str" = Granularity.week,
                    anchor: int | None = None) -> SnapshotSeries:
    """Assign matches to bins by start time and aggregate per-bin features.

    The bins run from the corpus's earliest start time (or ``anchor``) to its
    latest; the last bin may be partial.
    """
    gran = Granularity.parse(granularity)
    records = list(records)
    if anchor is None:
        anchor = corpus_anchor(records)
    if anchor is None:
        return SnapshotSeries(gran, 0, (), ())
    width = gran.seconds
    if any(r.start_time < anchor for r in records):
        raise TemporalError("match starts before the snapshot anchor")
    k = max((r.start_time - anchor) // width for r in records) + 1

    raw: list[dict[str, list]] = [defaultdict(list) for _ in range(k)]
    pairs: list[dict[Pair, int]] = [defaultdict(int) for _ in range(k)]
    for rec in records:
        t = (rec.start_time - anchor) // width
        bucket = raw[t]
        for p in rec.participations:
            bucket[p.player_id].append((rec.start_time, p.seconds_played, p.completed))
        counts = pairs[t]
        for pair in teammate_pairs(rec):
            counts[pair] += 1

    players = tuple({pid: participation_vector(ms) for pid, ms in sorted(snap.items())} for snap in raw)
    return SnapshotSeries(gran, anchor, players, tuple(dict(c) for c in pairs))


def feature_matrix(series: SnapshotSeries, player: str) -> np.ndarray:
    """(span, 4) features from first to last active bin; idle bins are zero rows."""
    active = series.active_snapshots(player)
    if not active:
        raise TemporalError(f"player {player!r} is absent from every snapshot")
    return np.array([series.vector(player, t) for t in range(active[0], active[-1] + 1)], dtype=float)


def activity_series(series: SnapshotSeries, player: str) -> list[int]:
    """Matches per bin between the player's first and last active bin."""
    return [int(c) for c in feature_matrix(series, player)[:, 0]]


def count_peaks(values: Sequence[float], rel_threshold: float = 0.5) -> int:
    """Interior turning points reached by a jump larger than ``rel_threshold * max``."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise TemporalError("count_peaks needs a non-empty series")
    top = x.max()
    if x.size < 3 or top == 0:
        return 0
    rise = np.diff(x)
    turning = rise[:-1] * rise[1:] < 0
    big = np.abs(rise[:-1]) > rel_threshold * top
    return int(np.count_nonzero(turning & big))


def slope(values: Sequence[float]) -> float:
    y = np.asarray(values, dtype=float)
    if y.size < 2:
        raise TemporalError("slope is undefined for fewer than two points")
    x = np.arange(y.size, dtype=float)
    dx = x - x.mean()
    return float(np.dot(dx, y - y.mean()) / np.dot(dx, dx))


def rsd(values: Sequence[float]) -> float:
    """Relative standard deviation in percent (population sd over mean)."""
    y = np.asarray(values, dtype=float)
    mean = y.mean() if y.size else 0.0
    if mean == 0:
        raise TemporalError("RSD is undefined for a zero-mean series")
    return float(100.0 * y.std() / mean)


def mean_feature_rsd(features: np.ndarray) -> float | None:
    """RSD averaged over the feature columns that have a non-zero mean."""
    vals = [rsd(col) for col in features.T if col.mean() != 0]
    return float(np.mean(vals)) if vals else None


@dataclass(frozen=True)
class GranularityRow:
    granularity: str
    metric: str
    min: float
    q25: float
    median: float
    q75: float
    max: float

    def as_row(self) -> list:
        return [self.granularity, self.metric, self.min, self.q25, self.median, self.q75, self.max]


GRANULARITY_COLUMNS = ("granularity", "metric", "min", "q25", "median", "q75", "max")


def player_stability(series: SnapshotSeries, rel_threshold: float = 0.5) -> dict[str, dict[str, float]]:
    """Per-player peak count, activity slope and mean feature RSD."""
    out = {}
    for player in series.all_players():
        feats = feature_matrix(series, player)
        activity = feats[:, 0]
        entry = {"peaks": float(count_peaks(activity, rel_threshold))}
        if activity.size >= 2:
            entry["slope"] = slope(activity)
        spread = mean_feature_rsd(feats)
        if spread is not None:
            entry["rsd"] = spread
        out[player] = entry
    return out


def granularity_report(records: Sequence[MatchRecord], rel_threshold: float = 0.5,
                       granularities: Iterable[Granularity] = tuple(Granularity)) -> list[GranularityRow]:
    """Distribution of per-player peaks, slopes and RSD at each bin width.

    Players whose active span is a single bin have no slope at that width and
    are left out of the slope row only.
    """
    if not records:
        raise TemporalError("granularity report needs at least one match")
    anchor = corpus_anchor(records)
    rows = []
    for gran in granularities:
        stability = player_stability(build_snapshots(records, gran, anchor), rel_threshold)
        for metric in ("peaks", "slope", "rsd"):
            sample = [v[metric] for v in stability.values() if metric in v]
            if not sample:
                rows.append(GranularityRow(gran.name, metric, *([float("nan")] * 5)))
                continue
            d = descriptive(sample)
            rows.append(GranularityRow(gran.name, metric, d.min, d.q25, d.median, d.q75, d.max))
    return rows

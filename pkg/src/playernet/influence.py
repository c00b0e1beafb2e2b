"""Edge and node influence over consecutive snapshots, and retention transfer.

Influence on an edge is measured when exactly one endpoint changed its
participation behaviour between two consecutive snapshots: the change in
cosine similarity of the pair is credited to the endpoint that stayed put,
and its negation to the one that moved. Positive scores therefore mark
players whose neighbours drift towards them; negative scores mark players
who drift towards their neighbours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import InfluenceError
from .temporal import FEATURES, SnapshotSeries

DEFAULT_EPSILON = 0.1
DEFAULT_W0 = 10.0


@dataclass(frozen=True)
class FeatureScale:
    """Per-feature divisors (corpus 95th percentile); scaled values cap at 1."""

    p95: np.ndarray

    @classmethod
    def from_series(cls, series: SnapshotSeries, percentile: float = 95.0) -> "FeatureScale":
        rows = [v for snap in series.players for v in snap.values()]
        if not rows:
            return cls(np.ones(len(FEATURES)))
        return cls(np.percentile(np.asarray(rows, dtype=float), percentile, axis=0))

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.where(self.p95 > 0, x / np.where(self.p95 > 0, self.p95, 1.0), (x > 0).astype(float))
        return np.minimum(scaled, 1.0)


def _as_scaled(x, scale: FeatureScale | None) -> np.ndarray:
    return scale.apply(x) if scale is not None else np.asarray(x, dtype=float)


def behavior_changed(x_prev, x_curr, epsilon: float = DEFAULT_EPSILON, scale: FeatureScale | None = None) -> bool:
    """Whether a player's scaled features moved by more than ``epsilon`` (L2).

    Starting or stopping play (one of the two vectors is all zeros) always
    counts as a change. Without ``scale`` the inputs are taken as already
    scaled.
    """
    a = _as_scaled(x_prev, scale)
    b = _as_scaled(x_curr, scale)
    a_absent = not a.any()
    b_absent = not b.any()
    if a_absent != b_absent:
        return True
    return bool(np.linalg.norm(b - a) > epsilon)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def edge_influence(xi_prev, xi_curr, xj_prev, xj_curr, epsilon: float = DEFAULT_EPSILON,
                   scale: FeatureScale | None = None) -> tuple[float, str | None]:
    """Signed influence on one edge for one step.

    Returns ``(value, credited)`` where ``credited`` is ``"i"`` or ``"j"`` (the
    endpoint that did not change) and ``value`` is oriented towards it. When
    neither or both endpoints changed the result is ``(0.0, None)``.
    """
    vi0, vi1, vj0, vj1 = (_as_scaled(v, scale) for v in (xi_prev, xi_curr, xj_prev, xj_curr))
    ci = behavior_changed(vi0, vi1, epsilon)
    cj = behavior_changed(vj0, vj1, epsilon)
    if ci == cj:
        return 0.0, None
    value = cosine(vi1, vj1) - cosine(vi0, vj0)
    return value, ("j" if ci else "i")


def influence_adjust(value: float, weight: float, w0: float = DEFAULT_W0) -> float:
    """Damp ``value`` by ``min(1, ln(1+w)/ln(1+w0))`` for ``w`` shared matches."""
    if weight < 0:
        raise InfluenceError("co-play weight must be non-negative")
    return value * min(1.0, math.log1p(weight) / math.log1p(w0))


@dataclass(frozen=True)
class LedgerEntry:
    edge: tuple[str, str]
    snapshot: int
    credited_player: str | None
    value: float


@dataclass(frozen=True)
class EdgeInfluenceLedger:
    """Per-edge, per-snapshot influence for every pair that co-played at ``t >= 1``.

    ``value_a`` is oriented towards ``edge_a`` (the lexicographically smaller
    id); the other endpoint's value is its exact negation. Pairs absent from
    a snapshot carry an implicit zero.
    """

    players: list[str]
    edge_a: np.ndarray
    edge_b: np.ndarray
    snapshot: np.ndarray
    value_a: np.ndarray
    credited: np.ndarray  # player index, -1 for no credit
    epsilon: float
    w0: float

    def __len__(self) -> int:
        return int(self.value_a.shape[0])

    def value_for(self, row: int, player: str) -> float:
        a = self.players[self.edge_a[row]]
        b = self.players[self.edge_b[row]]
        if player == a:
            return float(self.value_a[row])
        if player == b:
            return float(-self.value_a[row])
        raise KeyError(player)

    def entries(self) -> Iterator[LedgerEntry]:
        for r in range(len(self)):
            a = self.players[self.edge_a[r]]
            b = self.players[self.edge_b[r]]
            c = int(self.credited[r])
            if c < 0:
                yield LedgerEntry((a, b), int(self.snapshot[r]), None, 0.0)
            else:
                v = float(self.value_a[r]) if c == self.edge_a[r] else float(-self.value_a[r])
                yield LedgerEntry((a, b), int(self.snapshot[r]), self.players[c], v)


def scaled_tensor(series: SnapshotSeries, scale: FeatureScale, players: Sequence[str]) -> np.ndarray:
    """(k, n_players, 4) scaled features; inactive cells are zero."""
    index = {p: i for i, p in enumerate(players)}
    x = np.zeros((series.k, len(players), len(FEATURES)))
    for t, snap in enumerate(series.players):
        if not snap:
            continue
        idx = np.fromiter((index[p] for p in snap), dtype=np.int64, count=len(snap))
        x[t, idx] = np.asarray(list(snap.values()), dtype=float)
    flat = x.reshape(-1, len(FEATURES))
    active = flat.any(axis=1)
    flat[active] = scale.apply(flat[active])
    return x


def _row_cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = na * nb
    dot = np.einsum("ij,ij->i", a, b)
    out = np.zeros(a.shape[0])
    ok = denom > 0
    out[ok] = dot[ok] / denom[ok]
    return out


def _row_changed(prev: np.ndarray, curr: np.ndarray, epsilon: float) -> np.ndarray:
    p_absent = ~prev.any(axis=1)
    c_absent = ~curr.any(axis=1)
    moved = np.linalg.norm(curr - prev, axis=1) > epsilon
    return np.where(p_absent != c_absent, True, moved)


def compute_ledger(series: SnapshotSeries, epsilon: float = DEFAULT_EPSILON, w0: float = DEFAULT_W0,
                   scale: FeatureScale | None = None) -> EdgeInfluenceLedger:
    if series.k < 2:
        raise InfluenceError(f"influence needs at least two snapshots, got {series.k}")
    if scale is None:
        scale = FeatureScale.from_series(series)
    players = series.all_players()
    index = {p: i for i, p in enumerate(players)}
    x = scaled_tensor(series, scale, players)

    ea, eb, ts, ws = [], [], [], []
    for t in range(1, series.k):
        for (a, b), w in series.pairs[t].items():
            ea.append(index[a])
            eb.append(index[b])
            ts.append(t)
            ws.append(w)
    ea = np.asarray(ea, dtype=np.int64)
    eb = np.asarray(eb, dtype=np.int64)
    ts = np.asarray(ts, dtype=np.int64)
    ws = np.asarray(ws, dtype=float)
    order = np.lexsort((ts, eb, ea))
    ea, eb, ts, ws = ea[order], eb[order], ts[order], ws[order]

    xa0, xa1 = x[ts - 1, ea], x[ts, ea]
    xb0, xb1 = x[ts - 1, eb], x[ts, eb]
    ca = _row_changed(xa0, xa1, epsilon)
    cb = _row_changed(xb0, xb1, epsilon)
    one = ca != cb
    delta = _row_cosine(xa1, xb1) - _row_cosine(xa0, xb0)
    mult = np.minimum(1.0, np.log1p(ws) / math.log1p(w0))
    credit_a = one & ~ca
    credit_b = one & ca
    value_a = np.where(credit_a, delta, np.where(credit_b, -delta, 0.0)) * mult
    value_a = np.where(one, value_a, 0.0)
    credited = np.where(credit_a, ea, np.where(credit_b, eb, -1))
    return EdgeInfluenceLedger(players, ea, eb, ts, value_a, credited, epsilon, w0)


@dataclass(frozen=True)
class NodeInfluence:
    influence: float
    edge_sd: float
    temporal_degree: int


def temporal_degrees(series: SnapshotSeries) -> dict[str, int]:
    """Neighbour count summed over snapshots from the second one on."""
    deg: dict[str, int] = {p: 0 for p in series.all_players()}
    for t in range(1, series.k):
        for a, b in series.pairs[t]:
            deg[a] += 1
            deg[b] += 1
    return deg


def node_influence(ledger: EdgeInfluenceLedger, series: SnapshotSeries) -> dict[str, NodeInfluence]:
    """Average signed influence a player exerts over its per-snapshot edges.

    The denominator is the temporal degree (see :func:`temporal_degrees`);
    the first snapshot has no predecessor and carries no influence, so it is
    left out of both numerator and denominator.
    """
    n = len(ledger.players)
    rows = np.concatenate([ledger.edge_a, ledger.edge_b])
    vals = np.concatenate([ledger.value_a, -ledger.value_a])
    sums = np.bincount(rows, weights=vals, minlength=n)
    sq = np.bincount(rows, weights=vals * vals, minlength=n)
    counts = np.bincount(rows, minlength=n)
    degrees = temporal_degrees(series)
    out = {}
    for i, p in enumerate(ledger.players):
        d = degrees.get(p, 0)
        c = int(counts[i])
        score = float(sums[i] / d) if d else 0.0
        if c:
            mean = sums[i] / c
            sd = float(math.sqrt(max(sq[i] / c - mean * mean, 0.0)))
        else:
            sd = 0.0
        out[p] = NodeInfluence(score, sd, d)
    return out


def select_influential(scores: Mapping[str, float], quantile: float = 0.99) -> set[str]:
    """Players whose score reaches the ``quantile`` threshold (ties included)."""
    if not scores:
        raise InfluenceError("no influence scores to select from")
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must lie in (0, 1)")
    players = list(scores)
    values = np.fromiter((scores[p] for p in players), dtype=float, count=len(players))
    threshold = np.quantile(values, quantile)
    return {p for p, v in zip(players, values) if v >= threshold}


@dataclass(frozen=True)
class RetentionTransfer:
    value: float
    neighbors: int


def _first_contacts(series: SnapshotSeries) -> dict[tuple[str, str], int]:
    first: dict[tuple[str, str], int] = {}
    for t, pairs in enumerate(series.pairs):
        for pair in pairs:
            if pair not in first:
                first[pair] = t
    return first


def retention_transfer_all(series: SnapshotSeries) -> dict[str, RetentionTransfer]:
    """Retention transfer for every player that has at least one neighbour.

    After the first snapshot in which a pair co-played, each side's remaining
    gameplay runs to its last active snapshot (inclusive); the score is the
    mean absolute difference over neighbours, in snapshots.
    """
    last = {p: span[1] for p, span in series.first_last_active().items()}
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for (a, b), t in sorted(_first_contacts(series).items()):
        diff = abs((last[a] - t + 1) - (last[b] - t + 1))
        for p in (a, b):
            totals[p] = totals.get(p, 0.0) + diff
            counts[p] = counts.get(p, 0) + 1
    return {p: RetentionTransfer(totals[p] / counts[p], counts[p]) for p in sorted(totals)}


def retention_transfer(series: SnapshotSeries, player: str) -> float:
    last = series.first_last_active()
    if player not in last:
        raise InfluenceError(f"player {player!r} never appears in the series")
    diffs = []
    for (a, b), t in _first_contacts(series).items():
        if player not in (a, b):
            continue
        other = b if a == player else a
        diffs.append(abs((last[player][1] - t + 1) - (last[other][1] - t + 1)))
    if not diffs:
        raise InfluenceError(f"retention transfer is undefined for {player!r}: no neighbours")
    return float(np.mean(diffs))

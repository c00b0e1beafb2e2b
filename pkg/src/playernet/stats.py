"""Rank-based group comparison and distribution summaries."""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import StatsError

A_GREATER = "a_greater"
A_LESS = "a_less"
EXACT_LIMIT = 400


@dataclass(frozen=True)
class Descriptive:
    min: float
    q25: float
    median: float
    q75: float
    max: float
    mean: float
    sd: float


def descriptive(sample: Sequence[float]) -> Descriptive:
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise StatsError("descriptive statistics of an empty sample")
    q = np.percentile(x, [0, 25, 50, 75, 100])
    return Descriptive(*(float(v) for v in q), float(x.mean()), float(x.std()))


@dataclass(frozen=True)
class GroupComparison:
    metric: str
    label_a: str
    label_b: str
    u: float
    p_value: float
    alternative: str
    n_a: int
    n_b: int
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    method: str

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return asdict(self)


def rankdata(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties given their average rank."""
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(values.size)
    start = 0
    n = values.size
    while start < n:
        stop = start + 1
        while stop < n and sorted_vals[stop] == sorted_vals[start]:
            stop += 1
        ranks[order[start:stop]] = (start + stop + 1) / 2.0
        start = stop
    return ranks


@lru_cache(maxsize=None)
def u_distribution(n_a: int, n_b: int) -> tuple[int, ...]:
    """Number of rank arrangements giving each U value 0..n_a*n_b (no ties).

    Built with the usual recursion on whether the largest observation comes
    from sample a (adding n_b to U) or from sample b.
    """
    if n_a == 0 or n_b == 0:
        return (1,)
    size = n_a * n_b + 1
    with_a = u_distribution(n_a - 1, n_b)
    with_b = u_distribution(n_a, n_b - 1)
    counts = [0] * size
    for u, c in enumerate(with_a):
        counts[u + n_b] += c
    for u, c in enumerate(with_b):
        counts[u] += c
    return tuple(counts)


def _exact_p(u: float, n_a: int, n_b: int, alternative: str) -> float:
    counts = u_distribution(n_a, n_b)
    total = math.comb(n_a + n_b, n_a)
    k = int(round(u))
    if alternative == A_LESS:
        hits = sum(counts[: k + 1])
    else:
        hits = sum(counts[k:])
    return hits / total


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a: Sequence[float], b: Sequence[float], alternative: str = A_GREATER,
                   metric: str = "", labels: tuple[str, str] = ("a", "b"), method: str = "auto") -> GroupComparison:
    """One-sided Mann-Whitney U test; ``U`` is reported for sample ``a``.

    ``a_greater`` tests whether ``a`` tends to exceed ``b``. With
    ``method="auto"`` the p-value is exact when ``n_a * n_b <= 400`` and there
    are no ties, otherwise it uses the normal approximation with tie and
    continuity corrections. ``"exact"`` and ``"normal"`` force one path; exact
    p-values require tie-free samples.
    """
    if alternative not in (A_GREATER, A_LESS):
        raise StatsError(f"unknown alternative {alternative!r}")
    if method not in ("auto", "exact", "normal"):
        raise StatsError(f"unknown method {method!r}")
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size == 0 or y.size == 0:
        raise StatsError(f"empty sample in Mann-Whitney test ({labels[0] if x.size == 0 else labels[1]})")
    n_a, n_b = x.size, y.size
    ranks = rankdata(np.concatenate([x, y]))
    u = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    has_ties = np.unique(ranks).size < ranks.size

    if method == "exact" and has_ties:
        raise StatsError("exact p-values need tie-free samples")
    use_exact = method == "exact" or (method == "auto" and n_a * n_b <= EXACT_LIMIT and not has_ties)
    if use_exact:
        p = _exact_p(u, n_a, n_b, alternative)
        method = "exact"
    else:
        n = n_a + n_b
        _, tie_counts = np.unique(ranks, return_counts=True)
        tie_term = float(((tie_counts ** 3) - tie_counts).sum()) / (n * (n - 1))
        var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
        mu = n_a * n_b / 2.0
        if var <= 0:
            p = 1.0
        else:
            sd = math.sqrt(var)
            if alternative == A_GREATER:
                p = _norm_sf((u - mu - 0.5) / sd)
            else:
                p = _norm_sf((mu - u - 0.5) / sd)
        method = "normal-approximation"
    # p must stay strictly positive even when the tail underflows
    p = min(1.0, max(p, sys.float_info.min))

    return GroupComparison(
        metric=metric, label_a=labels[0], label_b=labels[1], u=u, p_value=p,
        alternative=alternative, n_a=n_a, n_b=n_b,
        mean_a=float(x.mean()), sd_a=float(x.std()), mean_b=float(y.mean()), sd_b=float(y.std()),
        method=method,
    )


# (metric, alternative for influential-vs-central)
COMPARISON_BATTERY = (
    ("influence", A_GREATER),
    ("degree", A_LESS),
    ("closeness", A_LESS),
    ("betweenness", A_LESS),
    ("eigenvector", A_LESS),
    ("pagerank", A_LESS),
    ("avg_weighted_degree", A_GREATER),
    ("edge_influence_sd", A_LESS),
    ("retention_transfer", A_LESS),
)


@dataclass
class ComparisonReport:
    comparisons: list[GroupComparison]
    overlap: set[str]
    n_influential: int
    n_central: int

    @property
    def disjoint(self) -> bool:
        return not self.overlap


def compare_groups(central: set[str], influential: set[str],
                   metrics: Mapping[str, Mapping[str, float]]) -> ComparisonReport:
    """Run the influential-vs-central battery over every available metric.

    Sample ``a`` is always the influential group. Players without a value for
    a metric (e.g. no neighbours for retention transfer) are left out of that
    test; a metric with an emptied group is skipped.
    """
    if not central:
        raise StatsError("central group is empty")
    if not influential:
        raise StatsError("influential group is empty")
    comparisons = []
    for metric, alternative in COMPARISON_BATTERY:
        table = metrics.get(metric)
        if table is None:
            continue
        a = [table[p] for p in sorted(influential) if p in table]
        b = [table[p] for p in sorted(central) if p in table]
        if not a or not b:
            continue
        comparisons.append(mann_whitney_u(a, b, alternative, metric=metric, labels=("influential", "central")))
    return ComparisonReport(comparisons, central & influential, len(influential), len(central))

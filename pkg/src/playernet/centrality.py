"""Structural centrality on the unweighted co-play topology.

Edge weights are ignored here on purpose; they only matter for influence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import CentralityError, ConvergenceError
from .graph import PlayerGraph

MEASURES = ("degree", "closeness", "betweenness", "eigenvector", "pagerank")


def degree_centrality(g: PlayerGraph) -> dict[str, float]:
    csr = g.csr
    return dict(zip(csr.nodes, csr.degree().astype(float).tolist()))


def _closeness_from(reach: np.ndarray, dsum: np.ndarray) -> np.ndarray:
    n = reach.shape[0]
    out = np.zeros(n)
    if n < 2:
        return out
    mask = dsum > 0
    r = reach[mask].astype(float)
    out[mask] = (r / (n - 1)) * (r / dsum[mask])
    return out


def closeness_centrality(g: PlayerGraph) -> dict[str, float]:
    """Closeness with component scaling: (R/(n-1)) * (R/D) over reachable nodes."""
    csr = g.csr
    _, reach, dsum = _kernels.brandes_closeness(csr.indptr, csr.indices)
    return dict(zip(csr.nodes, _closeness_from(reach, dsum).tolist()))


def betweenness_centrality(g: PlayerGraph) -> dict[str, float]:
    csr = g.csr
    bc, _, _ = _kernels.brandes_closeness(csr.indptr, csr.indices)
    return dict(zip(csr.nodes, bc.tolist()))


def _eigenvector_array(g: PlayerGraph, tol: float, max_iter: int) -> np.ndarray:
    csr = g.csr
    n = csr.n
    if n == 0:
        raise CentralityError("eigenvector centrality of an empty graph")
    adj = csr.adjacency()
    n_comp, labels = connected_components(adj, directed=False)
    # Power iteration on A + I: same eigenvectors as A, but bipartite
    # components no longer oscillate between two sign patterns.
    x = np.ones(n)
    x /= np.sqrt(np.bincount(labels, minlength=n_comp))[labels]
    residual = np.inf
    for it in range(1, max_iter + 1):
        y = adj @ x + x
        norms = np.sqrt(np.bincount(labels, weights=y * y, minlength=n_comp))
        y /= norms[labels]
        residual = float(np.max(np.abs(y - x)))
        x = y
        if residual < tol:
            break
    else:
        raise ConvergenceError("eigenvector power iteration did not converge", max_iter, residual)

    # Components are weighted by their spectral radius so that a dense
    # component outranks an isolated pair; isolated nodes end at exactly 0.
    ax = adj @ x
    radius = np.bincount(labels, weights=x * ax, minlength=n_comp)
    scores = x * radius[labels]
    top = scores.max()
    return scores / top if top > 0 else scores


def eigenvector_centrality(g: PlayerGraph, tol: float = 1e-8, max_iter: int = 1000) -> dict[str, float]:
    """Per-component dominant eigenvector of the adjacency, max-normalized to 1.

    Each component's unit-norm Perron vector is scaled by that component's
    spectral radius before the global normalization. Raises
    :class:`ConvergenceError` when ``max_iter`` is exhausted.
    """
    return dict(zip(g.csr.nodes, _eigenvector_array(g, tol, max_iter).tolist()))


def _pagerank_array(g: PlayerGraph, damping: float, tol: float, max_iter: int) -> np.ndarray:
    csr = g.csr
    n = csr.n
    if n == 0:
        return np.zeros(0)
    deg = csr.degree().astype(float)
    dangling = deg == 0
    inv_deg = np.zeros(n)
    inv_deg[~dangling] = 1.0 / deg[~dangling]
    adj = csr.adjacency()
    x = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        spread = adj @ (x * inv_deg)
        y = damping * (spread + x[dangling].sum() / n) + (1.0 - damping) / n
        residual = float(np.abs(y - x).sum())
        x = y
        if residual < tol:
            break
    else:
        raise ConvergenceError("pagerank did not converge", max_iter, residual)
    return x / x.sum()


def pagerank(g: PlayerGraph, damping: float = 0.85, tol: float = 1e-9, max_iter: int = 200) -> dict[str, float]:
    return dict(zip(g.csr.nodes, _pagerank_array(g, damping, tol, max_iter).tolist()))


@dataclass
class CentralityScores:
    players: list[str]
    degree: np.ndarray
    closeness: np.ndarray
    betweenness: np.ndarray
    eigenvector: np.ndarray
    pagerank: np.ndarray

    def measure(self, name: str) -> np.ndarray:
        if name not in MEASURES:
            raise KeyError(name)
        return getattr(self, name)

    def as_dict(self, name: str) -> dict[str, float]:
        return dict(zip(self.players, self.measure(name).tolist()))

    def rows(self):
        for i, p in enumerate(self.players):
            yield p, *(float(self.measure(m)[i]) for m in MEASURES)


def compute_centralities(g: PlayerGraph, eig_tol: float = 1e-8, eig_max_iter: int = 1000) -> CentralityScores:
    """All five measures; the Brandes pass is shared by closeness and betweenness."""
    csr = g.csr
    bc, reach, dsum = _kernels.brandes_closeness(csr.indptr, csr.indices)
    return CentralityScores(
        players=list(csr.nodes),
        degree=csr.degree().astype(float),
        closeness=_closeness_from(reach, dsum),
        betweenness=bc,
        eigenvector=_eigenvector_array(g, eig_tol, eig_max_iter) if csr.n else np.zeros(0),
        pagerank=_pagerank_array(g, 0.85, 1e-9, 200),
    )


@dataclass
class CentralSelection:
    players: set[str]
    thresholds: dict[str, float]
    quantile: float


def select_central_players(scores: CentralityScores, quantile: float = 0.90) -> CentralSelection:
    """Players at or above the ``quantile`` threshold of every measure."""
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must lie in (0, 1)")
    if not scores.players:
        return CentralSelection(set(), {m: float("nan") for m in MEASURES}, quantile)
    mask = np.ones(len(scores.players), dtype=bool)
    thresholds = {}
    for name in MEASURES:
        values = scores.measure(name)
        thr = float(np.quantile(values, quantile))
        thresholds[name] = thr
        mask &= values >= thr
    selected = {p for p, keep in zip(scores.players, mask) if keep}
    return CentralSelection(selected, thresholds, quantile)

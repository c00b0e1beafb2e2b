"""Static co-play network and its descriptive statistics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .ingest import MatchRecord

Pair = tuple[str, str]


def pair_key(a: str, b: str) -> Pair:
    return (a, b) if a < b else (b, a)


def teammate_pairs(record: MatchRecord) -> Iterable[Pair]:
    """Unordered teammate pairs of one match; opponents never pair up."""
    for team in (record.team_a, record.team_b):
        ids = sorted(p.player_id for p in team)
        yield from combinations(ids, 2)


@dataclass(frozen=True)
class CSRGraph:
    """Index-based view of a :class:`PlayerGraph` used by numeric kernels."""

    nodes: list[str]
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def adjacency(self, weighted: bool = False) -> csr_matrix:
        data = self.weights.astype(float) if weighted else np.ones(len(self.indices))
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))


@dataclass
class PlayerGraph:
    nodes: set[str] = field(default_factory=set)
    edges: dict[Pair, int] = field(default_factory=dict)

    def add_edge(self, a: str, b: str, weight: int = 1) -> None:
        if a == b:
            raise ValueError("self-loops are not allowed")
        self.nodes.update((a, b))
        key = pair_key(a, b)
        self.edges[key] = self.edges.get(key, 0) + weight

    def neighbors(self, player: str) -> set[str]:
        return {b if a == player else a for a, b in self.edges if player in (a, b)}

    @cached_property
    def csr(self) -> CSRGraph:
        # cached: the graph is treated as immutable once analysis starts
        nodes = sorted(self.nodes)
        index = {p: i for i, p in enumerate(nodes)}
        n = len(nodes)
        if not self.edges:
            return CSRGraph(nodes, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64),
                            np.zeros(0, dtype=np.int64))
        a = np.fromiter((index[u] for u, _ in self.edges), dtype=np.int64, count=len(self.edges))
        b = np.fromiter((index[v] for _, v in self.edges), dtype=np.int64, count=len(self.edges))
        w = np.fromiter(self.edges.values(), dtype=np.int64, count=len(self.edges))
        rows = np.concatenate([a, b])
        cols = np.concatenate([b, a])
        ws = np.concatenate([w, w])
        order = np.lexsort((cols, rows))
        rows, cols, ws = rows[order], cols[order], ws[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return CSRGraph(nodes, indptr, cols, ws)

    @classmethod
    def from_edges(cls, edges: dict[Pair, int] | Iterable[Pair], nodes: Iterable[str] = ()) -> "PlayerGraph":
        g = cls(nodes=set(nodes))
        if isinstance(edges, dict):
            for (a, b), w in edges.items():
                g.add_edge(a, b, w)
        else:
            for a, b in edges:
                g.add_edge(a, b)
        return g


def build_static_graph(records: Iterable[MatchRecord]) -> PlayerGraph:
    g = PlayerGraph()
    for rec in records:
        g.nodes.update(rec.players())
        for a, b in teammate_pairs(rec):
            g.edges[(a, b)] = g.edges.get((a, b), 0) + 1
    return g


@dataclass(frozen=True)
class GraphSummary:
    nodes: int
    edges: int
    average_degree: float
    average_weighted_degree: float
    connected_components: int
    lcc_fraction: float
    second_lcc_fraction: float
    average_clustering: float
    average_path_length: float
    diameter: int
    paths_estimated: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.to_dict().items())

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def clustering_coefficients(csr: CSRGraph) -> np.ndarray:
    """Local clustering coefficient per node; nodes with degree < 2 get 0."""
    adj = csr.adjacency()
    triangles = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel() / 2.0
    deg = csr.degree().astype(float)
    possible = deg * (deg - 1) / 2.0
    out = np.zeros(csr.n)
    mask = possible > 0
    out[mask] = triangles[mask] / possible[mask]
    return out


def graph_summary(g: PlayerGraph, exact_paths_limit: int = 20_000, seed: int = 0,
                  sample_sources: int = 1000) -> GraphSummary:
    """Descriptive statistics of the static network.

    Path length and diameter are taken over the largest connected component.
    When that component exceeds ``exact_paths_limit`` nodes, BFS runs only from
    a seeded uniform sample of ``sample_sources`` sources; the diameter is then
    a lower bound and ``paths_estimated`` is set.
    """
    from ._kernels import bfs_path_stats

    csr = g.csr
    n = csr.n
    m = len(g.edges)
    if n == 0:
        return GraphSummary(0, 0, 0.0, 0.0, 0, 0.0, 0.0, 0.0, 0.0, 0, False)

    n_comp, labels = connected_components(csr.adjacency(), directed=False)
    sizes = np.bincount(labels)
    order = np.argsort(-sizes, kind="stable")
    lcc_label = order[0]
    lcc_size = int(sizes[lcc_label])
    second = int(sizes[order[1]]) if n_comp > 1 else 0

    members = np.flatnonzero(labels == lcc_label)
    estimated = lcc_size > exact_paths_limit
    if estimated:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(members, size=min(sample_sources, lcc_size), replace=False))
    else:
        sources = members
    total, pairs, ecc_max = bfs_path_stats(csr.indptr, csr.indices, sources.astype(np.int64))
    avg_path = float(total) / pairs if pairs else 0.0

    return GraphSummary(
        nodes=n,
        edges=m,
        average_degree=2.0 * m / n,
        average_weighted_degree=2.0 * float(sum(g.edges.values())) / n,
        connected_components=int(n_comp),
        lcc_fraction=lcc_size / n,
        second_lcc_fraction=second / n,
        average_clustering=float(clustering_coefficients(csr).mean()),
        average_path_length=avg_path,
        diameter=int(ecc_max),
        paths_estimated=bool(estimated),
    )


def node_strengths(g: PlayerGraph) -> dict[str, tuple[int, int, float]]:
    """Per node: (degree, weighted degree, mean incident edge weight)."""
    csr = g.csr
    deg = csr.degree()
    rows = np.repeat(np.arange(csr.n), deg)
    strength = np.bincount(rows, weights=csr.weights, minlength=csr.n)
    out = {}
    for i, p in enumerate(csr.nodes):
        d = int(deg[i])
        s = int(strength[i])
        out[p] = (d, s, s / d if d else 0.0)
    return out

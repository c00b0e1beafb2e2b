"""Compiled breadth-first-search kernels.

Sources are split into a fixed number of chunks, independent of the thread
count, and per-chunk partial sums are reduced in chunk order. Floating-point
results are therefore identical for any ``numba`` thread setting.
"""

import numba as nb
import numpy as np

# the bundled TBB is often too old and only produces a warning
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

N_CHUNKS = 64


@nb.njit(cache=True)
def _bfs(indptr, indices, s, dist, sigma, order):
    """BFS from ``s``; fills dist/sigma and the visit order. Returns #visited."""
    dist[s] = 0
    sigma[s] = 1.0
    order[0] = s
    head = 0
    tail = 1
    while head < tail:
        v = order[head]
        head += 1
        dv = dist[v]
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if dist[w] < 0:
                dist[w] = dv + 1
                order[tail] = w
                tail += 1
            if dist[w] == dv + 1:
                sigma[w] += sigma[v]
    return tail


@nb.njit(parallel=True, cache=True)
def brandes_closeness(indptr, indices):
    """Unnormalized undirected betweenness plus per-source (reach, distance sum).

    Betweenness counts each unordered pair once.
    """
    n = indptr.shape[0] - 1
    n_chunks = min(N_CHUNKS, max(n, 1))
    partial = np.zeros((n_chunks, n))
    reach = np.zeros(n, dtype=np.int64)
    dsum = np.zeros(n, dtype=np.int64)
    for c in nb.prange(n_chunks):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        delta = np.zeros(n)
        order = np.empty(n, dtype=np.int64)
        acc = partial[c]
        for s in range(c, n, n_chunks):
            visited = _bfs(indptr, indices, s, dist, sigma, order)
            total = 0
            for idx in range(visited - 1, -1, -1):
                w = order[idx]
                dw = dist[w]
                total += dw
                coeff = (1.0 + delta[w]) / sigma[w]
                for k in range(indptr[w], indptr[w + 1]):
                    v = indices[k]
                    if dist[v] == dw - 1:
                        delta[v] += sigma[v] * coeff
                if w != s:
                    acc[w] += delta[w]
            reach[s] = visited - 1
            dsum[s] = total
            for idx in range(visited):
                w = order[idx]
                dist[w] = -1
                sigma[w] = 0.0
                delta[w] = 0.0
    bc = np.zeros(n)
    for c in range(n_chunks):
        bc += partial[c]
    return bc / 2.0, reach, dsum


@nb.njit(parallel=True, cache=True)
def bfs_path_stats(indptr, indices, sources):
    """Sum of distances, number of reachable ordered pairs and max eccentricity."""
    n = indptr.shape[0] - 1
    m = sources.shape[0]
    totals = np.zeros(m, dtype=np.int64)
    counts = np.zeros(m, dtype=np.int64)
    eccs = np.zeros(m, dtype=np.int64)
    n_chunks = min(N_CHUNKS, max(m, 1))
    for c in nb.prange(n_chunks):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        order = np.empty(n, dtype=np.int64)
        for i in range(c, m, n_chunks):
            s = sources[i]
            visited = _bfs(indptr, indices, s, dist, sigma, order)
            t = 0
            e = 0
            for idx in range(visited):
                w = order[idx]
                t += dist[w]
                if dist[w] > e:
                    e = dist[w]
                dist[w] = -1
                sigma[w] = 0.0
            totals[i] = t
            counts[i] = visited - 1
            eccs[i] = e
    return totals.sum(), counts.sum(), eccs.max() if m > 0 else 0


def set_threads(threads):
    if threads:
        nb.set_num_threads(max(1, min(int(threads), nb.config.NUMBA_NUM_THREADS)))

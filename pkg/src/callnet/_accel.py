"""Hot graph kernels: shortest-path betweenness and all-pairs BFS statistics.

Two interchangeable backends implement the same math:

* ``numba`` — scalar loops compiled with ``@njit`` (default when numba
  imports cleanly).
* ``numpy`` — level-synchronous vectorized sweeps, pure numpy.

Selection is controlled by the ``CALLNET_ACCEL`` environment variable
(``auto`` / ``numba`` / ``numpy``), read once at import. Both paths
accumulate per-source contributions in the same fixed order, so results are
bit-identical between a serial run and any future work split, and agree with
each other to floating-point round-off.

Conventions: unweighted hop distances, fractional credit across equal-length
shortest paths, each unordered node pair counted once (accumulated totals are
halved), no normalization.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_VAR = "CALLNET_ACCEL"


def _resolve_backend() -> str:
    mode = os.environ.get(_ENV_VAR, "auto").lower()
    if mode not in ("auto", "numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be auto, numba, or numpy (got {mode!r})")
    if mode == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if mode == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve_backend()


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND


def build_csr(
    n: int, us: np.ndarray, vs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Undirected CSR adjacency from edge endpoint arrays.

    Each of the ``m`` input edges occupies two slots (one per direction);
    ``edge_ids[p]`` maps slot ``p`` back to its input edge index so per-edge
    accumulators can pool both directions.
    """
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, us, 1)
    np.add.at(deg, vs, 1)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    edge_ids = np.empty(indptr[-1], dtype=np.int64)
    cursor = indptr[:-1].copy()
    for i in range(len(us)):
        u, v = us[i], vs[i]
        indices[cursor[u]] = v
        edge_ids[cursor[u]] = i
        cursor[u] += 1
        indices[cursor[v]] = u
        edge_ids[cursor[v]] = i
        cursor[v] += 1
    return indptr, indices, edge_ids


# ---------------------------------------------------------------------------
# numpy backend: level-synchronous vectorized sweeps
# ---------------------------------------------------------------------------


def _frontier_slots(indptr: np.ndarray, frontier: np.ndarray) -> np.ndarray:
    """CSR slot indices of all out-edges of the frontier, frontier order."""
    starts = indptr[frontier]
    counts = indptr[frontier + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    return np.arange(total, dtype=np.int64) - offsets + np.repeat(starts, counts)


def _betweenness_numpy(n, indptr, indices, edge_ids, n_edges):
    node_bc = np.zeros(n, dtype=np.float64)
    edge_bc = np.zeros(n_edges, dtype=np.float64)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n, dtype=np.float64)
        dist[s] = 0
        sigma[s] = 1.0
        levels = [np.array([s], dtype=np.int64)]
        while levels[-1].size:
            frontier = levels[-1]
            depth = len(levels) - 1
            slots = _frontier_slots(indptr, frontier)
            if slots.size == 0:
                break
            targets = indices[slots]
            sources = np.repeat(frontier, indptr[frontier + 1] - indptr[frontier])
            fresh = targets[dist[targets] < 0]
            new_nodes = np.unique(fresh)
            dist[new_nodes] = depth + 1
            forward = dist[targets] == depth + 1
            np.add.at(sigma, targets[forward], sigma[sources[forward]])
            levels.append(new_nodes)
        delta = np.zeros(n, dtype=np.float64)
        for depth in range(len(levels) - 1, 0, -1):
            ws = levels[depth]
            if ws.size == 0:
                continue
            slots = _frontier_slots(indptr, ws)
            vs = indices[slots]
            ws_rep = np.repeat(ws, indptr[ws + 1] - indptr[ws])
            back = dist[vs] == depth - 1
            vs_sel = vs[back]
            ws_sel = ws_rep[back]
            credit = sigma[vs_sel] / sigma[ws_sel] * (1.0 + delta[ws_sel])
            np.add.at(delta, vs_sel, credit)
            np.add.at(edge_bc, edge_ids[slots[back]], credit)
        node_bc += delta
        node_bc[s] -= delta[s]
    return node_bc * 0.5, edge_bc * 0.5


def _geodesic_stats_numpy(n, indptr, indices):
    dist_sum = np.zeros(n, dtype=np.int64)
    reach = np.zeros(n, dtype=np.int64)
    ecc = np.zeros(n, dtype=np.int64)
    for s in range(n):
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        frontier = np.array([s], dtype=np.int64)
        depth = 0
        while frontier.size:
            slots = _frontier_slots(indptr, frontier)
            if slots.size == 0:
                break
            targets = indices[slots]
            frontier = np.unique(targets[dist[targets] < 0])
            depth += 1
            dist[frontier] = depth
        seen = dist >= 0
        dist_sum[s] = int(dist[seen].sum())
        reach[s] = int(seen.sum()) - 1
        ecc[s] = int(dist[seen].max()) if seen.any() else 0
    return dist_sum, reach, ecc


# ---------------------------------------------------------------------------
# numba backend: scalar @njit loops over the same CSR arrays
# ---------------------------------------------------------------------------

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _betweenness_njit(n, indptr, indices, edge_ids, n_edges):  # pragma: no cover
        node_bc = np.zeros(n, dtype=np.float64)
        edge_bc = np.zeros(n_edges, dtype=np.float64)
        dist = np.empty(n, dtype=np.int64)
        sigma = np.empty(n, dtype=np.float64)
        delta = np.empty(n, dtype=np.float64)
        order = np.empty(n, dtype=np.int64)
        for s in range(n):
            for i in range(n):
                dist[i] = -1
                sigma[i] = 0.0
                delta[i] = 0.0
            dist[s] = 0
            sigma[s] = 1.0
            head = 0
            tail = 1
            order[0] = s
            while head < tail:
                v = order[head]
                head += 1
                dv = dist[v]
                for p in range(indptr[v], indptr[v + 1]):
                    w = indices[p]
                    if dist[w] < 0:
                        dist[w] = dv + 1
                        order[tail] = w
                        tail += 1
                    if dist[w] == dv + 1:
                        sigma[w] += sigma[v]
            for i in range(tail - 1, 0, -1):
                w = order[i]
                coeff = (1.0 + delta[w]) / sigma[w]
                dw = dist[w]
                for p in range(indptr[w], indptr[w + 1]):
                    v = indices[p]
                    if dist[v] == dw - 1:
                        credit = sigma[v] * coeff
                        delta[v] += credit
                        edge_bc[edge_ids[p]] += credit
                node_bc[w] += delta[w]
        return node_bc * 0.5, edge_bc * 0.5

    @njit(cache=True)
    def _geodesic_stats_njit(n, indptr, indices):  # pragma: no cover
        dist_sum = np.zeros(n, dtype=np.int64)
        reach = np.zeros(n, dtype=np.int64)
        ecc = np.zeros(n, dtype=np.int64)
        dist = np.empty(n, dtype=np.int64)
        order = np.empty(n, dtype=np.int64)
        for s in range(n):
            for i in range(n):
                dist[i] = -1
            dist[s] = 0
            head = 0
            tail = 1
            order[0] = s
            total = 0
            far = 0
            while head < tail:
                v = order[head]
                head += 1
                dv = dist[v]
                total += dv
                if dv > far:
                    far = dv
                for p in range(indptr[v], indptr[v + 1]):
                    w = indices[p]
                    if dist[w] < 0:
                        dist[w] = dv + 1
                        order[tail] = w
                        tail += 1
            dist_sum[s] = total
            reach[s] = tail - 1
            ecc[s] = far
        return dist_sum, reach, ecc


def betweenness_arrays(
    n: int,
    indptr: np.ndarray,
    indices: np.ndarray,
    edge_ids: np.ndarray,
    n_edges: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Node and edge shortest-path betweenness over a CSR adjacency."""
    if n == 0:
        return np.zeros(0), np.zeros(n_edges)
    if BACKEND == "numba":
        return _betweenness_njit(n, indptr, indices, edge_ids, n_edges)
    return _betweenness_numpy(n, indptr, indices, edge_ids, n_edges)


def geodesic_stats(
    n: int, indptr: np.ndarray, indices: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-node (sum of hop distances, reachable count, eccentricity)."""
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    if BACKEND == "numba":
        return _geodesic_stats_njit(n, indptr, indices)
    return _geodesic_stats_numpy(n, indptr, indices)


def warmup() -> None:
    """Trigger JIT compilation on a toy graph so timings exclude compile cost."""
    us = np.array([0, 1], dtype=np.int64)
    vs = np.array([1, 2], dtype=np.int64)
    indptr, indices, edge_ids = build_csr(3, us, vs)
    betweenness_arrays(3, indptr, indices, edge_ids, 2)
    geodesic_stats(3, indptr, indices)

"""Kernel dispatch: numba-jitted hot loops with a no-numba fallback path.

Set HEAVYTAIL_LAB_NO_NUMBA=1 to force the fallback path (pure numpy/scipy
plus interpreted loops for the inherently sequential simulations). All
randomness is pre-drawn outside the kernels, so both paths produce
byte-identical results; only speed differs. See benchmarks/bench_kernels.py.
"""

import os

import numpy as np

from . import _impl

_FLAG = os.environ.get("HEAVYTAIL_LAB_NO_NUMBA", "").strip()
NUMBA_REQUESTED = _FLAG not in ("1", "true", "yes")

if NUMBA_REQUESTED:
    try:
        from numba import njit

        _jit = njit(cache=True)
        NUMBA_ACTIVE = True
    except ImportError:  # pragma: no cover - numba is a hard dep, belt+braces
        _jit = None
        NUMBA_ACTIVE = False
else:
    _jit = None
    NUMBA_ACTIVE = False


def _maybe_jit(fn):
    return _jit(fn) if NUMBA_ACTIVE else fn


# sequential simulations: jitted or interpreted, same code
pair_half_edges_sequential = _maybe_jit(_impl.pair_half_edges_sequential)
tracker_curves = _maybe_jit(_impl.tracker_curves)
explore_walk_kernel = _maybe_jit(_impl.explore_walk_kernel)
birthday_tree = _maybe_jit(_impl.birthday_tree)
birthday_tree_codes = _maybe_jit(_impl.birthday_tree_codes)
annotate_arrays = _maybe_jit(_impl.annotate_arrays)
thin_original_edges = _maybe_jit(_impl.thin_original_edges)
component_pair_stats = _maybe_jit(_impl.component_pair_stats)

if NUMBA_ACTIVE:
    _union_find_labels = _jit(_impl.union_find_labels)
    _bfs_distances = _jit(_impl.bfs_distances)

    def union_find_labels(n, eu, ev):
        return _union_find_labels(np.int64(n), eu, ev)

    def bfs_distances(indptr, indices, source):
        return _bfs_distances(indptr, indices, np.int64(source))

else:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components as _scipy_cc
    from scipy.sparse.csgraph import breadth_first_order as _scipy_bfs_order

    def union_find_labels(n, eu, ev):
        data = np.ones(eu.shape[0], dtype=np.int8)
        adj = csr_matrix((data, (eu, ev)), shape=(n, n))
        _, labels = _scipy_cc(adj, directed=False)
        # rewrite labels as component-root indices to match the jitted path
        first = np.full(labels.max() + 1 if n else 0, -1, dtype=np.int64)
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            lab = labels[i]
            if first[lab] < 0:
                first[lab] = i
            out[i] = first[lab]
        return out

    def bfs_distances(indptr, indices, source):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int32)
        dist[source] = 0
        frontier = np.array([source], dtype=np.int64)
        d = 0
        while frontier.size:
            d += 1
            # gather all neighbours of the frontier in one vectorized pass
            starts = indptr[frontier]
            stops = indptr[frontier + 1]
            counts = stops - starts
            if counts.sum() == 0:
                break
            gather = np.concatenate(
                [indices[a:b] for a, b in zip(starts, stops)]
            )
            new = gather[dist[gather] < 0]
            if new.size == 0:
                break
            new = np.unique(new)
            dist[new] = d
            frontier = new
        return dist


def canonical_labels(labels):
    """Relabel component labels to 0..k-1 in order of first appearance."""
    uniq, inv = np.unique(labels, return_inverse=True)
    order = np.empty(uniq.shape[0], dtype=np.int64)
    seen = np.zeros(uniq.shape[0], dtype=bool)
    nxt = 0
    for x in inv:
        if not seen[x]:
            seen[x] = True
            order[x] = nxt
            nxt += 1
    return order[inv]


def warmup():
    """Compile the jitted kernels on tiny inputs (no-op on the fallback path)."""
    eu = np.array([0, 1], dtype=np.int64)
    ev = np.array([1, 2], dtype=np.int64)
    union_find_labels(3, eu, ev)
    indptr = np.array([0, 1, 3, 4], dtype=np.int64)
    indices = np.array([1, 0, 2, 1], dtype=np.int64)
    bfs_distances(indptr, indices, 0)
    component_pair_stats(indptr, indices, np.arange(3, dtype=np.int64), np.ones(3))
    pair_half_edges_sequential(4, 2, np.array([0.1, 0.5]), np.array([0.2, 0.9]))
    tracker_curves(
        np.array([1, 1], dtype=np.int64),
        np.array([0], dtype=np.int64),
        np.array([1], dtype=np.int64),
        np.array([1], dtype=np.int64),
    )
    d = np.array([1, 1], dtype=np.int64)
    offs = np.array([0, 1, 2], dtype=np.int64)
    mate = np.array([-2, -2], dtype=np.int64)
    explore_walk_kernel(d, offs, mate, np.array([0.3]), np.array([0.4]), 0, 0)
    p_cum = np.array([0.5, 1.0])
    parent = np.empty(2, dtype=np.int64)
    birthday_tree(p_cum, np.array([0.1, 0.7, 0.2]), parent)
    birthday_tree_codes(p_cum, np.linspace(0.01, 0.99, 400), np.empty(1, dtype=np.int64))
    annotate_arrays(
        np.array([0.5, 0.5]),
        1.0,
        np.array([0, 1], dtype=np.int64),
        np.array([0, 1], dtype=np.int64),
        np.array([-1, 0], dtype=np.int64),
        np.array([1], dtype=np.int64),
        np.array([0, 1, 1], dtype=np.int64),
    )
    thin_original_edges(np.array([0, 1], dtype=np.int64), np.array([2, 0], dtype=np.int64))

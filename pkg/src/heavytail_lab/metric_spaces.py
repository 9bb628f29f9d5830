"""Measured metric spaces, blob super-graphs, and sampled-distance statistics.

Gromov-weak closeness is operationalized through distance matrices of
i.i.d. measure samples: polynomial functionals are Monte Carlo averages of
bounded test functions of those matrices, and the two-space discrepancy is
an energy-distance statistic on sorted, vectorized matrices.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph_core import MultiGraph

__all__ = [
    "MeasuredMetricSpace",
    "SuperGraphSpec",
    "BlobFunctionals",
    "assemble_supergraph",
    "sample_junctions",
    "blob_functionals",
    "sample_distance_matrix",
    "estimate_polynomial",
    "rescale",
    "discrepancy",
    "discrepancy_permutation_test",
    "component_metric_space",
    "POLYNOMIAL_FAMILY",
]


class MeasuredMetricSpace:
    """Finite measured metric space with a scale multiplier on distances.

    Backed either by an explicit distance matrix or by a unit-edge graph
    whose distances come from breadth-first search on demand.
    """

    def __init__(self, n, mu, scale=1.0, matrix=None, adjacency=None):
        self.n = int(n)
        if mu is None:
            mu = np.full(self.n, 1.0 / self.n)
        self.mu = np.asarray(mu, dtype=np.float64)
        if self.mu.shape != (self.n,) or np.any(self.mu < 0):
            raise ValueError("mu must be non-negative with one entry per point")
        if abs(self.mu.sum() - 1.0) > 1e-9:
            raise ValueError("mu must sum to 1")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.scale = float(scale)
        self._matrix = matrix
        self._adj = adjacency
        if (matrix is None) == (adjacency is None):
            raise ValueError("exactly one backend required")

    @classmethod
    def from_matrix(cls, D, mu=None, scale=1.0, validate=True):
        D = np.asarray(D, dtype=np.float64)
        n = D.shape[0]
        if validate:
            if D.shape != (n, n) or np.any(np.abs(np.diag(D)) > 1e-12):
                raise ValueError("need a square matrix with zero diagonal")
            if np.any(np.abs(D - D.T) > 1e-9):
                raise ValueError("distance matrix must be symmetric")
            if n <= 64:  # triangle inequality check only at small sizes
                for k in range(n):
                    if np.any(D > D[:, [k]] + D[[k], :] + 1e-9):
                        raise ValueError("triangle inequality violated")
        return cls(n, mu, scale, matrix=D)

    @classmethod
    def from_graph(cls, g: MultiGraph, mu=None, scale=1.0):
        return cls(g.n, mu, scale, adjacency=g.adjacency())

    @classmethod
    def single_point(cls):
        return cls.from_matrix(np.zeros((1, 1)), np.ones(1))

    @property
    def is_graph_backed(self) -> bool:
        return self._adj is not None

    def distances_from(self, i: int) -> np.ndarray:
        """Scaled distances from point i; np.inf marks unreachable points."""
        if self._matrix is not None:
            return self.scale * self._matrix[i]
        indptr, indices = self._adj
        d = kernels.bfs_distances(indptr, indices, int(i)).astype(np.float64)
        d[d < 0] = np.inf
        return self.scale * d

    def distance(self, i: int, j: int) -> float:
        return float(self.distances_from(i)[j])

    def distance_matrix(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self._matrix is not None:
            return self.scale * self._matrix[np.ix_(idx, idx)]
        uniq, inv = np.unique(idx, return_inverse=True)
        rows = np.stack([self.distances_from(int(u))[uniq] for u in uniq])
        return rows[np.ix_(inv, inv)]

    def diameter(self) -> float:
        best = 0.0
        for i in range(self.n):
            d = self.distances_from(i)
            m = d[np.isfinite(d)].max() if np.any(np.isfinite(d)) else 0.0
            best = max(best, float(m))
        return best

    def mean_pairwise(self) -> float:
        """Exact E[d(X, X')] for X, X' ~ mu (quadratic in the point count)."""
        acc = 0.0
        for i in range(self.n):
            if self.mu[i] == 0.0:
                continue
            acc += self.mu[i] * float((self.mu * self.distances_from(i)).sum())
        return acc

    def is_connected(self) -> bool:
        return bool(np.all(np.isfinite(self.distances_from(0))))

    def sample_points(self, l: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.n, size=l, p=self.mu)

    def to_json_reference(self, graph_path: str | None = None) -> str:
        import json

        return json.dumps(
            {
                "n": self.n,
                "scale": self.scale,
                "mu": [float(x) for x in self.mu],
                "backend": "graph" if self.is_graph_backed else "matrix",
                "graph_file": graph_path,
            }
        )


def rescale(space: MeasuredMetricSpace, c: float) -> MeasuredMetricSpace:
    """aM convention: distances multiplied by c, measure unchanged."""
    if c <= 0:
        raise ValueError("rescale factor must be positive")
    return MeasuredMetricSpace(
        space.n, space.mu, space.scale * c,
        matrix=space._matrix, adjacency=space._adj,
    )


@dataclass
class SuperGraphSpec:
    """Blobs, blob weights, superstructure edges, and junction points.

    junctions maps (i, j) -> point index inside blob i, for every
    superstructure edge {i, j} in both orientations.
    """

    blobs: list
    p: np.ndarray
    superstructure: list
    junctions: dict


def sample_junctions(blobs, superstructure, rng: np.random.Generator) -> dict:
    out = {}
    for i, j in superstructure:
        out[(i, j)] = int(blobs[i].sample_points(1, rng)[0])
        out[(j, i)] = int(blobs[j].sample_points(1, rng)[0])
    return out


def assemble_supergraph(spec: SuperGraphSpec) -> MeasuredMetricSpace:
    """Glue blobs with unit-length junction edges.

    Realizes the path metric alternating unit superstructure edges with
    within-blob distances, and the measure p_i * mu_i on blob i. All-unit
    graph blobs merge into one big unit graph; general blobs go through a
    weighted auxiliary graph with intra-blob cliques and Dijkstra.
    """
    blobs = spec.blobs
    m = len(blobs)
    p = np.asarray(spec.p, dtype=np.float64)
    if p.shape != (m,):
        raise ValueError("need one weight per blob")
    for b, blob in enumerate(blobs):
        if not blob.is_connected():
            raise ValueError(f"blob {b} is disconnected")
    for i, j in spec.superstructure:
        for key in ((i, j), (j, i)):
            if key not in spec.junctions:
                raise ValueError(f"missing junction point for {key}")
            if not 0 <= spec.junctions[key] < blobs[key[0]].n:
                raise ValueError(f"junction point out of range for {key}")
    eu_b = np.array([i for i, _ in spec.superstructure], dtype=np.int64)
    ev_b = np.array([j for _, j in spec.superstructure], dtype=np.int64)
    lab = kernels.union_find_labels(m, eu_b, ev_b)
    if m and np.unique(lab).size != 1:
        raise ValueError("superstructure must connect all blobs")

    offsets = np.zeros(m + 1, dtype=np.int64)
    np.cumsum([b.n for b in blobs], out=offsets[1:])
    mu = np.concatenate([p[i] * blobs[i].mu for i in range(m)])

    unit_graphs = all(b.is_graph_backed and b.scale == 1.0 for b in blobs)
    if unit_graphs:
        eus, evs = [], []
        for i, b in enumerate(blobs):
            indptr, indices = b._adj
            for u in range(b.n):
                for k in range(indptr[u], indptr[u + 1]):
                    v = int(indices[k])
                    if v >= u:  # each undirected edge once; self-loops once
                        eus.append(offsets[i] + u)
                        evs.append(offsets[i] + v)
        for i, j in spec.superstructure:
            eus.append(offsets[i] + spec.junctions[(i, j)])
            evs.append(offsets[j] + spec.junctions[(j, i)])
        g = MultiGraph(
            int(offsets[-1]),
            np.array(eus, dtype=np.int64),
            np.array(evs, dtype=np.int64),
        )
        return MeasuredMetricSpace.from_graph(g, mu=mu)

    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    rows, cols, vals = [], [], []
    for i, b in enumerate(blobs):
        for u in range(b.n):
            du = b.distances_from(u)
            for v in range(u + 1, b.n):
                rows.append(offsets[i] + u)
                cols.append(offsets[i] + v)
                vals.append(float(du[v]))
    for i, j in spec.superstructure:
        rows.append(offsets[i] + spec.junctions[(i, j)])
        cols.append(offsets[j] + spec.junctions[(j, i)])
        vals.append(1.0)
    n_tot = int(offsets[-1])
    adj = csr_matrix(
        (vals + vals, (rows + cols, cols + rows)), shape=(n_tot, n_tot)
    )
    D = dijkstra(adj, directed=False)
    return MeasuredMetricSpace.from_matrix(D, mu=mu, validate=False)


@dataclass
class BlobFunctionals:
    u: np.ndarray
    B: float
    delta_max: float
    assumption_ratio: float


def blob_functionals(
    blobs,
    p,
    exact_cutoff: int = 500,
    mc_samples: int = 4000,
    rng: np.random.Generator | None = None,
) -> BlobFunctionals:
    """u_i = E[d_i(X, X')] per blob (exact below the cutoff, Monte Carlo
    above), B = sum p_i u_i, the maximum blob diameter, and the
    universality ratio sigma(p) * diameter / (B + 1)."""
    p = np.asarray(p, dtype=np.float64)
    if p.size != len(blobs):
        raise ValueError("need one weight per blob")
    if rng is None:
        rng = np.random.default_rng(0)
    u = np.empty(len(blobs))
    delta = 0.0
    for i, b in enumerate(blobs):
        if b.n <= exact_cutoff:
            u[i] = b.mean_pairwise()
        else:
            xs = b.sample_points(mc_samples, rng)
            ys = b.sample_points(mc_samples, rng)
            u[i] = float(
                np.mean([b.distance(int(x), int(y)) for x, y in zip(xs, ys)])
            )
        delta = max(delta, b.diameter())
    B = float((p * u).sum())
    sigma = float(np.sqrt((p**2).sum()))
    return BlobFunctionals(
        u=u, B=B, delta_max=delta, assumption_ratio=sigma * delta / (B + 1.0)
    )


def sample_distance_matrix(
    space: MeasuredMetricSpace, l: int, rng: np.random.Generator
) -> np.ndarray:
    """Pairwise distances of l i.i.d. mu-samples (with replacement)."""
    if l < 2:
        raise ValueError("need l >= 2")
    return space.distance_matrix(space.sample_points(l, rng))


def estimate_polynomial(
    space: MeasuredMetricSpace,
    phi,
    l: int,
    reps: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo estimate of int phi(D(x)) dmu^(x l); returns (mean, stderr)."""
    vals = np.array(
        [phi(sample_distance_matrix(space, l, rng)) for _ in range(reps)]
    )
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(reps))


POLYNOMIAL_FAMILY = {
    "d12": lambda D: float(D[0, 1]),
    "max": lambda D: float(D.max()),
    "mean_offdiag": lambda D: float(
        D.sum() / (D.shape[0] * (D.shape[0] - 1))
    ),
    "soft_min": lambda D: float(np.exp(-D).mean()),
}


def _sorted_vectors(space, l, reps, rng):
    out = np.empty((reps, l * l))
    for k in range(reps):
        out[k] = np.sort(sample_distance_matrix(space, l, rng).ravel())
    return out


def _mean_pair_norm(A, B, rng=None, pair_budget=None):
    if pair_budget is not None and A.shape[0] * B.shape[0] > pair_budget:
        ii = rng.integers(0, A.shape[0], size=pair_budget)
        jj = rng.integers(0, B.shape[0], size=pair_budget)
        return float(np.linalg.norm(A[ii] - B[jj], axis=1).mean())
    acc = 0.0
    chunk = max(1, int(2e6 // max(B.shape[0], 1)))
    for s in range(0, A.shape[0], chunk):
        block = A[s : s + chunk]
        acc += float(
            np.sqrt(
                ((block[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
            ).sum()
        )
    return acc / (A.shape[0] * B.shape[0])


def discrepancy(
    space1: MeasuredMetricSpace,
    space2: MeasuredMetricSpace,
    l: int,
    reps: int,
    rng: np.random.Generator,
    pair_budget: int | None = 200_000,
) -> float:
    """Energy-distance statistic between the empirical laws of sorted,
    vectorized l x l sampled distance matrices: zero in expectation iff the
    two laws agree; invariant under point relabelings."""
    A = _sorted_vectors(space1, l, reps, rng)
    B = _sorted_vectors(space2, l, reps, rng)
    ab = _mean_pair_norm(A, B, rng, pair_budget)
    aa = _mean_pair_norm(A, A, rng, pair_budget)
    bb = _mean_pair_norm(B, B, rng, pair_budget)
    return 2.0 * ab - aa - bb


def discrepancy_permutation_test(
    space1,
    space2,
    l: int,
    reps: int,
    rng: np.random.Generator,
    n_perm: int = 99,
    pair_budget: int | None = 200_000,
) -> tuple[float, float]:
    """(statistic, permutation null 95th percentile)."""
    A = _sorted_vectors(space1, l, reps, rng)
    B = _sorted_vectors(space2, l, reps, rng)

    def energy(X, Y):
        return (
            2.0 * _mean_pair_norm(X, Y, rng, pair_budget)
            - _mean_pair_norm(X, X, rng, pair_budget)
            - _mean_pair_norm(Y, Y, rng, pair_budget)
        )

    stat = energy(A, B)
    pool = np.concatenate([A, B])
    null = np.empty(n_perm)
    for k in range(n_perm):
        perm = rng.permutation(pool.shape[0])
        null[k] = energy(pool[perm[:reps]], pool[perm[reps:]])
    return float(stat), float(np.quantile(null, 0.95))


def component_metric_space(
    g: MultiGraph, vertices: np.ndarray, weights: np.ndarray | None = None
) -> MeasuredMetricSpace:
    """A graph component as a measured metric space.

    The measure is proportional to weights restricted to the component
    (counting measure by default; pass open-half-edge counts for the
    frontier measure).
    """
    vertices = np.asarray(vertices, dtype=np.int64)
    remap = {int(v): k for k, v in enumerate(vertices)}
    sel = np.isin(g.eu, vertices) & np.isin(g.ev, vertices)
    eu = np.array([remap[int(u)] for u in g.eu[sel]], dtype=np.int64)
    ev = np.array([remap[int(v)] for v in g.ev[sel]], dtype=np.int64)
    sub = MultiGraph(vertices.size, eu, ev)
    if weights is None:
        mu = np.full(vertices.size, 1.0 / vertices.size)
    else:
        w = np.asarray(weights, dtype=np.float64)[vertices]
        if w.sum() <= 0:
            raise ValueError("component carries zero weight")
        mu = w / w.sum()
    return MeasuredMetricSpace.from_graph(sub, mu=mu)


def distance_matrix_csv(matrices) -> str:
    buf = io.StringIO()
    for D in matrices:
        buf.write(",".join(f"{x:.17g}" for x in np.asarray(D).ravel()) + "\n")
    return buf.getvalue()

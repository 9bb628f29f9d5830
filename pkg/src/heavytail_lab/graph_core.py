"""Half-edge multigraphs: configuration-model sampling, percolation,
component/susceptibility statistics, and the breadth-first exploration walk.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .degrees import DegreeSequence

__all__ = [
    "MultiGraph",
    "ComponentStats",
    "SusceptibilityReport",
    "ExplorationWalk",
    "SimplicityError",
    "sample_matching",
    "sample_cm",
    "sample_simple",
    "percolate",
    "components_and_stats",
    "explore_walk",
    "components_report_json",
]


class SimplicityError(RuntimeError):
    """Raised when rejection sampling for a simple graph exhausts its budget."""

    def __init__(self, attempts: int):
        super().__init__(
            f"no simple graph after {attempts} pairings; simplicity "
            "probability may vanish for this degree sequence"
        )
        self.attempts = attempts


class MultiGraph:
    """Immutable multigraph on vertices 0..n-1 with self-loops allowed.

    A self-loop contributes 2 to its vertex degree and 1 to the edge count.
    """

    def __init__(self, n: int, eu: np.ndarray, ev: np.ndarray):
        self.n = int(n)
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        if self.eu.shape != self.ev.shape:
            raise ValueError("edge arrays must have equal length")
        if self.eu.size and (
            self.eu.min() < 0
            or self.ev.min() < 0
            or max(self.eu.max(), self.ev.max()) >= self.n
        ):
            raise ValueError("edge endpoint out of range")
        self._adj = None

    @property
    def edge_count(self) -> int:
        return int(self.eu.size)

    @property
    def degree(self) -> np.ndarray:
        return np.bincount(
            np.concatenate([self.eu, self.ev]), minlength=self.n
        ).astype(np.int64)

    def adjacency(self):
        """CSR adjacency (indptr, indices); self-loops appear twice."""
        if self._adj is None:
            ends = np.concatenate([self.eu, self.ev])
            starts = np.concatenate([self.ev, self.eu])
            order = np.argsort(starts, kind="stable")
            indices = ends[order]
            counts = np.bincount(starts, minlength=self.n)
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            self._adj = (indptr, indices.astype(np.int64))
        return self._adj

    def component_labels(self) -> np.ndarray:
        labels = kernels.union_find_labels(self.n, self.eu, self.ev)
        return kernels.canonical_labels(labels)

    def to_edge_text(self) -> str:
        """One edge per line, "u v", 1-based."""
        return "".join(f"{u + 1} {v + 1}\n" for u, v in zip(self.eu, self.ev))

    @classmethod
    def from_edge_text(cls, text: str, n: int | None = None) -> "MultiGraph":
        us, vs = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            a, b = line.split()
            us.append(int(a) - 1)
            vs.append(int(b) - 1)
        eu = np.array(us, dtype=np.int64)
        ev = np.array(vs, dtype=np.int64)
        if n is None:
            n = int(max(eu.max(initial=-1), ev.max(initial=-1)) + 1)
        return cls(n, eu, ev)


def _degree_array(d) -> np.ndarray:
    if isinstance(d, DegreeSequence):
        return d.d
    return np.asarray(d, dtype=np.int64)


def sample_matching(d, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform perfect matching on the half-edges of d.

    Half-edge ids are laid out vertex by vertex (vertex, local slot) in
    deterministic order; returns paired half-edge id arrays (ha, hb).
    """
    arr = _degree_array(d)
    total = int(arr.sum())
    if total % 2 != 0:
        raise ValueError("odd number of half-edges cannot be matched")
    perm = rng.permutation(total)
    return perm[0::2], perm[1::2]


def sample_cm(d, rng: np.random.Generator) -> MultiGraph:
    """Configuration model: vertex pairs induced by a uniform matching."""
    arr = _degree_array(d)
    ha, hb = sample_matching(arr, rng)
    owner = np.repeat(np.arange(arr.size, dtype=np.int64), arr)
    return MultiGraph(arr.size, owner[ha], owner[hb])


def _is_simple(g: MultiGraph) -> bool:
    if g.edge_count == 0:
        return True
    if np.any(g.eu == g.ev):
        return False
    lo = np.minimum(g.eu, g.ev)
    hi = np.maximum(g.eu, g.ev)
    keys = lo * g.n + hi
    return np.unique(keys).size == keys.size


def sample_simple(
    d, rng: np.random.Generator, max_attempts: int = 1000
) -> tuple[MultiGraph, int]:
    """Repeated pairing until simple; returns (graph, attempts) or raises
    SimplicityError carrying the attempt count."""
    for attempt in range(1, max_attempts + 1):
        g = sample_cm(d, rng)
        if _is_simple(g):
            return g, attempt
    raise SimplicityError(max_attempts)


def percolate(g: MultiGraph, p: float, rng: np.random.Generator) -> MultiGraph:
    """Keep each edge independently with probability p; vertex set unchanged."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    keep = rng.random(g.edge_count) < p
    return MultiGraph(g.n, g.eu[keep], g.ev[keep])


@dataclass
class ComponentStats:
    vertices: np.ndarray  # sorted vertex ids
    size: int
    edge_count: int
    surplus: int
    mass: float
    diameter: int


@dataclass
class SusceptibilityReport:
    s2: float
    s3: float
    spr: float
    Dstar: float
    max_diameter: int
    dstar_stderr: float = 0.0


def _double_sweep_diameter(indptr, indices, nodes, sweeps: int = 4) -> int:
    """Iterated double-BFS lower bound, exact on trees; used above the
    all-source cutoff."""
    src = int(nodes[0])
    best = 0
    for _ in range(sweeps):
        dist = kernels.bfs_distances(indptr, indices, src)
        sub = dist[nodes]
        far = int(sub.argmax())
        if sub[far] <= best:
            break
        best = int(sub[far])
        src = int(nodes[far])
    return best


def components_and_stats(
    g: MultiGraph,
    weights: np.ndarray | None = None,
    exact_cutoff: int = 2000,
    dstar_samples: int = 200,
    rng: np.random.Generator | None = None,
) -> tuple[list[ComponentStats], SusceptibilityReport]:
    """Components sorted by size (ties by smallest vertex id) plus the
    susceptibility functionals.

    s2, s3 are weight-based; spr mixes weight and size; Dstar sums
    w_i w_j d(i,j) over ordered same-component pairs, exactly (all-source
    BFS) on components up to exact_cutoff vertices and by uniform-source
    sampling with a reported stderr above it. Diameters are exact below
    the cutoff and iterated double-sweep estimates above it.
    """
    n = g.n
    if weights is None:
        weights = np.ones(n, dtype=np.float64)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise ValueError("weights length must equal the vertex count")
    labels = g.component_labels()
    n_comp = int(labels.max()) + 1 if n else 0
    sizes = np.bincount(labels, minlength=n_comp)
    edge_counts = np.bincount(labels[g.eu], minlength=n_comp)
    masses = np.bincount(labels, weights=weights, minlength=n_comp)
    first_vertex = np.full(n_comp, n, dtype=np.int64)
    for v in range(n - 1, -1, -1):
        first_vertex[labels[v]] = v
    order = sorted(range(n_comp), key=lambda c: (-sizes[c], first_vertex[c]))

    vert_order = np.argsort(labels, kind="stable")
    bounds = np.zeros(n_comp + 1, dtype=np.int64)
    np.cumsum(sizes, out=bounds[1:])

    indptr, indices = g.adjacency()
    if rng is None:
        rng = np.random.default_rng(0)

    stats: list[ComponentStats] = []
    dstar_total = 0.0
    dstar_var = 0.0
    max_diam = 0
    for c in order:
        nodes = np.sort(vert_order[bounds[c] : bounds[c + 1]])
        size = int(sizes[c])
        if size == 1:
            diam = 0
            pair_sum = 0.0
        elif size <= exact_cutoff:
            pair_sum, diam = kernels.component_pair_stats(
                indptr, indices, nodes, weights
            )
        else:
            k = min(dstar_samples, size)
            srcs = nodes[rng.choice(size, size=k, replace=False)]
            vals = np.empty(k, dtype=np.float64)
            ecc = 0
            for t, s in enumerate(srcs):
                dist = kernels.bfs_distances(indptr, indices, int(s))
                sub = dist[nodes].astype(np.float64)
                vals[t] = weights[s] * float((weights[nodes] * sub).sum())
                ecc = max(ecc, int(dist[nodes].max()))
            pair_sum = size * float(vals.mean())
            dstar_var += (size * float(vals.std(ddof=1)) / np.sqrt(k)) ** 2
            diam = max(ecc, _double_sweep_diameter(indptr, indices, nodes))
        dstar_total += pair_sum
        max_diam = max(max_diam, int(diam))
        stats.append(
            ComponentStats(
                vertices=nodes,
                size=size,
                edge_count=int(edge_counts[c]),
                surplus=int(edge_counts[c]) - size + 1,
                mass=float(masses[c]),
                diameter=int(diam),
            )
        )
    w_comp = np.array([s.mass for s in stats])
    size_comp = np.array([s.size for s in stats], dtype=np.float64)
    report = SusceptibilityReport(
        s2=float((w_comp**2).sum() / n) if n else 0.0,
        s3=float((w_comp**3).sum() / n) if n else 0.0,
        spr=float((w_comp * size_comp).sum() / n) if n else 0.0,
        Dstar=dstar_total / n if n else 0.0,
        max_diameter=max_diam,
        dstar_stderr=float(np.sqrt(dstar_var)) / n if n else 0.0,
    )
    return stats, report


def components_report_json(
    stats: list[ComponentStats], report: SusceptibilityReport
) -> str:
    return json.dumps(
        {
            "components": [
                {
                    "size": s.size,
                    "edge_count": s.edge_count,
                    "surplus": s.surplus,
                    "mass": s.mass,
                    "diameter": s.diameter,
                    "vertices": [int(v) for v in s.vertices],
                }
                for s in stats
            ],
            "susceptibility": {
                "s2": report.s2,
                "s3": report.s3,
                "spr": report.spr,
                "Dstar": report.Dstar,
                "Dstar_stderr": report.dstar_stderr,
                "max_diameter": report.max_diameter,
            },
        }
    )


@dataclass
class ExplorationWalk:
    """Outcome of the half-edge exploration over every component.

    steps concatenates each component's walk S(0..L_c); component c spans
    steps[comp_bounds[c] : comp_bounds[c+1]] so its edge count is the span
    length minus one. surplus_steps index into steps. discovery lists
    vertices in discovery order, component c owning
    discovery[vertex_bounds[c] : vertex_bounds[c+1]].
    """

    steps: np.ndarray
    comp_bounds: np.ndarray
    vertex_bounds: np.ndarray
    surplus_steps: np.ndarray
    discovery: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    comp_weights: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.comp_bounds) - 1

    def component_edge_count(self, c: int) -> int:
        return int(self.comp_bounds[c + 1] - self.comp_bounds[c] - 1)

    def component_vertices(self, c: int) -> np.ndarray:
        return self.discovery[self.vertex_bounds[c] : self.vertex_bounds[c + 1]]

    def component_surplus(self, c: int) -> int:
        lo, hi = self.comp_bounds[c], self.comp_bounds[c + 1]
        return int(
            ((self.surplus_steps >= lo) & (self.surplus_steps < hi)).sum()
        )

    def graph(self) -> MultiGraph:
        n = int(self.vertex_bounds[-1])
        return MultiGraph(n, self.eu, self.ev)


def explore_walk(
    g_or_d,
    weights: np.ndarray | None = None,
    start="size_biased",
    rng: np.random.Generator | None = None,
) -> ExplorationWalk:
    """Breadth-first exploration walk S(l) = S(l-1) + d_(l) J_l - 2.

    Given a degree sequence the pairing is drawn uniformly on the fly
    (equal in law to exploring a pre-sampled configuration model); given a
    MultiGraph the fixed pairing is replayed. start is "size_biased" or a
    fixed vertex id for the first component; later components start from a
    degree-biased undiscovered vertex.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if isinstance(g_or_d, MultiGraph):
        g = g_or_d
        n = g.n
        deg = g.degree
        offs = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=offs[1:])
        mate = np.empty(max(int(offs[-1]), 1), dtype=np.int64)
        cursor = offs[:-1].copy()
        for u, v in zip(g.eu, g.ev):
            hu = cursor[u]
            cursor[u] += 1
            hv = cursor[v]
            cursor[v] += 1
            mate[hu] = hv
            mate[hv] = hu
        on_the_fly = False
    else:
        arr = _degree_array(g_or_d)
        if int(arr.sum()) % 2 != 0:
            raise ValueError("odd half-edge total")
        n = arr.size
        deg = arr
        offs = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=offs[1:])
        mate = np.full(max(int(offs[-1]), 1), -2, dtype=np.int64)
        on_the_fly = True

    if isinstance(start, str):
        if start != "size_biased":
            raise ValueError("start must be 'size_biased' or a vertex id")
        start_mode, start_vertex = 0, 0
    else:
        start_vertex = int(start)
        if not 0 <= start_vertex < n:
            raise ValueError("fixed start vertex out of range")
        start_mode = 1

    l_total = int(offs[-1])
    if l_total == 0:
        steps = np.zeros(n, dtype=np.int64)
        cb = np.arange(n + 1, dtype=np.int64)
        disc = np.arange(n, dtype=np.int64)
        w = np.ones(n) if weights is None else np.asarray(weights, float)
        return ExplorationWalk(
            steps=steps,
            comp_bounds=cb,
            vertex_bounds=cb.copy(),
            surplus_steps=np.zeros(0, dtype=np.int64),
            discovery=disc,
            eu=np.zeros(0, dtype=np.int64),
            ev=np.zeros(0, dtype=np.int64),
            comp_weights=w.copy(),
        )

    u_part = rng.random(l_total // 2) if on_the_fly else np.zeros(1)
    u_start = rng.random(n + 1)
    (
        steps,
        comp_bounds,
        vertex_bounds,
        surplus_steps,
        discovery,
        eu,
        ev,
    ) = kernels.explore_walk_kernel(
        deg.astype(np.int64), offs, mate, u_part, u_start, start_mode, start_vertex
    )
    if weights is None:
        w = np.ones(n, dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
    cw = np.array(
        [
            w[discovery[vertex_bounds[c] : vertex_bounds[c + 1]]].sum()
            for c in range(len(comp_bounds) - 1)
        ]
    )
    return ExplorationWalk(
        steps=steps,
        comp_bounds=comp_bounds,
        vertex_bounds=vertex_bounds,
        surplus_steps=surplus_steps,
        discovery=discovery,
        eu=eu,
        ev=ev,
        comp_weights=cw,
    )

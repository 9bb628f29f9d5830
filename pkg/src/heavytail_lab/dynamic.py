"""Dynamic half-edge construction and its multiplicative-coalescent couplings.

The event-driven simulation replaces per-half-edge exponential clocks: with
s1 half-edges alive the next pairing happens after Exp(s1) time, the
initiator is uniform among the alive half-edges and the partner uniform
among the rest. The graph at t = infinity is a configuration model.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import kernels
from .degrees import DegreeSequence, exponents
from .graph_core import MultiGraph

__all__ = [
    "DynamicState",
    "BlobSystem",
    "CoupledGraphs",
    "critical_time",
    "subcritical_time",
    "run_dynamic",
    "snapshot",
    "run_modified",
    "modified_parameters",
    "simulate_mc",
    "partition_from_history",
    "thin_half_edges",
]


def _nu_n_eta(ds: DegreeSequence):
    d = ds.d.astype(np.float64)
    nu = float((d * (d - 1)).sum() / d.sum())
    if nu <= 1.0:
        raise ValueError(f"nu_n = {nu:.6f} <= 1: no critical window")
    if ds.tau is None:
        raise ValueError("degree sequence carries no tau")
    return nu, ds.n, exponents(ds.tau).eta


def critical_time(ds: DegreeSequence, lam: float) -> float:
    """t_c(lambda) = (1/2) log(nu/(nu-1)) + nu lambda / (2 (nu-1) n^eta)."""
    nu, n, eta = _nu_n_eta(ds)
    return 0.5 * np.log(nu / (nu - 1.0)) + nu * lam / (2.0 * (nu - 1.0) * n**eta)


def subcritical_time(ds: DegreeSequence, delta: float) -> float:
    """t_n = (1/2) log(nu/(nu-1)) - nu / (2 (nu-1) n^delta), 0 < delta < eta."""
    nu, n, eta = _nu_n_eta(ds)
    if not 0.0 < delta < eta:
        raise ValueError(f"delta must lie in (0, eta={eta:.4f})")
    return 0.5 * np.log(nu / (nu - 1.0)) - nu / (2.0 * (nu - 1.0) * n**delta)


@dataclass
class DynamicState:
    """Simulation record: timestamped edge log plus open-half-edge state.

    Half-edge ids are laid out vertex by vertex; he_a/he_b are the paired
    half-edges per event in time order, with ev_u/ev_v their host vertices.
    """

    d: np.ndarray
    time: float
    times: np.ndarray
    he_a: np.ndarray
    he_b: np.ndarray
    ev_u: np.ndarray
    ev_v: np.ndarray

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    @property
    def omega(self) -> np.ndarray:
        used = np.bincount(
            np.concatenate([self.ev_u, self.ev_v]), minlength=self.n
        )
        return self.d - used

    @property
    def alive(self) -> np.ndarray:
        total = int(self.d.sum())
        dead = np.zeros(total, dtype=bool)
        dead[self.he_a] = True
        dead[self.he_b] = True
        return np.nonzero(~dead)[0]

    @property
    def s1(self) -> float:
        return float(self.d.sum() - 2 * self.n_events)

    @property
    def s2(self) -> float:
        w = self.omega.astype(np.float64)
        return float((w * w).sum())

    @property
    def s_dw(self) -> float:
        return float((self.d * self.omega.astype(np.float64)).sum())

    def tracker_curves(self, grid: np.ndarray):
        """(s1, s2, s_{d,omega}) evaluated at the grid times."""
        grid = np.asarray(grid, dtype=np.float64)
        before = np.searchsorted(self.times, grid, side="right").astype(np.int64)
        return kernels.tracker_curves(
            self.d.astype(np.int64), self.ev_u, self.ev_v, before
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,u,v,original_flag\n")
        for t, u, v in zip(self.times, self.ev_u, self.ev_v):
            buf.write(f"{t:.17g},{u + 1},{v + 1},1\n")
        return buf.getvalue()


def run_dynamic(d, t_end: float, rng: np.random.Generator) -> DynamicState:
    """Run the construction until t_end (np.inf pairs everything)."""
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    arr = d.d if isinstance(d, DegreeSequence) else np.asarray(d, dtype=np.int64)
    total = int(arr.sum())
    max_events = total // 2
    s1_before = total - 2 * np.arange(max_events, dtype=np.float64)
    gaps = rng.exponential(1.0, size=max_events) / s1_before
    times = np.cumsum(gaps)
    if np.isinf(t_end):
        m = max_events
    else:
        m = int(np.searchsorted(times, t_end, side="right"))
    u_init = rng.random(m)
    u_part = rng.random(m)
    he_a, he_b = kernels.pair_half_edges_sequential(total, m, u_init, u_part)
    owner = np.repeat(np.arange(arr.size, dtype=np.int64), arr)
    state_time = float(t_end) if not np.isinf(t_end) else float(
        times[-1] if max_events else 0.0
    )
    return DynamicState(
        d=arr.astype(np.int64),
        time=state_time,
        times=times[:m],
        he_a=he_a,
        he_b=he_b,
        ev_u=owner[he_a],
        ev_v=owner[he_b],
    )


@dataclass
class BlobSystem:
    """Components of a snapshot graph with their open-half-edge masses."""

    n: int
    time: float
    labels: np.ndarray  # per-vertex blob index, 0..n_blobs-1
    masses: np.ndarray  # f_b = sum of omega over the blob
    open_he: np.ndarray  # open half-edge ids, ascending
    he_owner: np.ndarray  # host vertex per open half-edge

    @property
    def n_blobs(self) -> int:
        return int(self.masses.size)

    @property
    def s1(self) -> float:
        return float(self.masses.sum())

    def blob_vertices(self, b: int) -> np.ndarray:
        return np.nonzero(self.labels == b)[0]

    def blob_open_hes(self, b: int) -> np.ndarray:
        return self.open_he[self.labels[self.he_owner] == b]


def snapshot(state: DynamicState, t: float) -> tuple[MultiGraph, BlobSystem]:
    """Graph of edges with timestamp <= t plus its blob decomposition."""
    if t > state.time:
        raise ValueError(f"t={t} beyond simulated horizon {state.time}")
    m = int(np.searchsorted(state.times, t, side="right"))
    g = MultiGraph(state.n, state.ev_u[:m], state.ev_v[:m])
    labels = g.component_labels()
    used = np.bincount(
        np.concatenate([state.ev_u[:m], state.ev_v[:m]]), minlength=state.n
    )
    omega = state.d - used
    n_blobs = int(labels.max()) + 1 if state.n else 0
    masses = np.bincount(labels, weights=omega.astype(np.float64), minlength=n_blobs)
    # blobs ordered by size descending, ties by smallest contained vertex
    sizes = np.bincount(labels, minlength=n_blobs)
    first_vertex = np.full(n_blobs, state.n, dtype=np.int64)
    for v in range(state.n - 1, -1, -1):
        first_vertex[labels[v]] = v
    order = sorted(range(n_blobs), key=lambda c: (-sizes[c], first_vertex[c]))
    relabel = np.empty(n_blobs, dtype=np.int64)
    relabel[np.array(order, dtype=np.int64)] = np.arange(n_blobs)
    labels = relabel[labels]
    masses = masses[np.array(order, dtype=np.int64)]

    total = int(state.d.sum())
    dead = np.zeros(total, dtype=bool)
    dead[state.he_a[:m]] = True
    dead[state.he_b[:m]] = True
    open_he = np.nonzero(~dead)[0]
    owner = np.repeat(np.arange(state.n, dtype=np.int64), state.d)
    return g, BlobSystem(
        n=state.n,
        time=float(t),
        labels=labels,
        masses=masses,
        open_he=open_he,
        he_owner=owner[open_he],
    )


@dataclass
class CoupledGraphs:
    """Modified-process superstructure with the thinned original subset.

    Every original edge is a modified edge by construction (the original
    events are exactly the modified events whose half-edges are both
    previously unused).
    """

    t_start: float
    times: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    he_e: np.ndarray
    he_f: np.ndarray
    original: np.ndarray  # bool per event
    blob_of_event: np.ndarray  # (k, 2) blob indices at event time
    n_blobs: int
    masses0: np.ndarray

    @property
    def modified_edges(self):
        return self.eu, self.ev

    @property
    def original_edges(self):
        return self.eu[self.original], self.ev[self.original]

    def merge_history(self):
        """Multiplicative-coalescent merge events (time, rep_a, rep_b) of
        the blob masses under the modified process."""
        parent = list(range(self.n_blobs))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        out = []
        for t, (a, b) in zip(self.times, self.blob_of_event):
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                lo, hi = min(ra, rb), max(ra, rb)
                parent[hi] = lo
                out.append((float(t), lo, hi))
        return out

    def blob_partition(self) -> np.ndarray:
        """Blob-level component labels at the end of the run."""
        eu = self.blob_of_event[:, 0].astype(np.int64)
        ev = self.blob_of_event[:, 1].astype(np.int64)
        labels = kernels.union_find_labels(self.n_blobs, eu, ev)
        return kernels.canonical_labels(labels)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time,u,v,original_flag\n")
        for t, u, v, o in zip(self.times, self.eu, self.ev, self.original):
            buf.write(f"{t:.17g},{u + 1},{v + 1},{1 if o else 0}\n")
        return buf.getvalue()


def run_modified(
    blobs: BlobSystem, t_start: float, t_end: float, rng: np.random.Generator
) -> CoupledGraphs:
    """Pairwise Poisson processes at rate 2/(s1-1) per unordered pair of
    open half-edges, run event-driven: events arrive at total rate s1 and
    each picks an ordered pair of distinct half-edges uniformly. Half-edges
    never die; an event is flagged original iff both its half-edges are
    unused by previous original events.
    """
    s = int(blobs.open_he.size)
    if s < 2:
        raise ValueError("blob system has fewer than two open half-edges")
    if t_end < t_start:
        raise ValueError("t_end must be >= t_start")
    # draw event times on [t_start, t_end] at constant rate s
    span = t_end - t_start
    n_guess = max(16, int(s * span + 6 * np.sqrt(s * span) + 16))
    gaps = rng.exponential(1.0 / s, size=n_guess)
    times = t_start + np.cumsum(gaps)
    while times.size and times[-1] < t_end:
        gaps = rng.exponential(1.0 / s, size=n_guess)
        times = np.concatenate([times, times[-1] + np.cumsum(gaps)])
    k = int(np.searchsorted(times, t_end, side="right"))
    times = times[:k]
    i = (rng.random(k) * s).astype(np.int64)
    j = (rng.random(k) * (s - 1)).astype(np.int64)
    j = j + (j >= i)
    he_e = blobs.open_he[i]
    he_f = blobs.open_he[j]
    eu = blobs.he_owner[i]
    ev = blobs.he_owner[j]
    original = kernels.thin_original_edges(i, j)
    blob_pairs = np.stack([blobs.labels[eu], blobs.labels[ev]], axis=1)
    return CoupledGraphs(
        t_start=float(t_start),
        times=times,
        eu=eu,
        ev=ev,
        he_e=he_e,
        he_f=he_f,
        original=np.asarray(original, dtype=bool),
        blob_of_event=blob_pairs,
        n_blobs=blobs.n_blobs,
        masses0=blobs.masses.copy(),
    )


def modified_parameters(
    blobs: BlobSystem, lam: float, rho: float, mu: float, nu: float
) -> tuple[np.ndarray, float]:
    """x_i = n^-rho f_i and q = 1/sigma2(x) + lambda nu^2 / (mu (nu-1)^2)."""
    x = blobs.n ** (-rho) * blobs.masses
    sigma2 = float((x**2).sum())
    if sigma2 == 0.0:
        raise ValueError("sigma2(x) = 0: no open half-edges")
    q = 1.0 / sigma2 + lam * nu**2 / (mu * (nu - 1.0) ** 2)
    return x, float(q)


def simulate_mc(
    x, duration: float, rng: np.random.Generator
) -> list[tuple[float, int, int]]:
    """Gillespie multiplicative coalescent: particles i, j merge at rate
    x_i x_j; returns merge events (time, rep_i, rep_j) with representatives
    the smallest original index in each cluster."""
    masses = np.asarray(x, dtype=np.float64).copy()
    if masses.size == 0:
        raise ValueError("empty mass vector")
    if np.any(masses <= 0):
        raise ValueError("all masses must be positive")
    reps = list(range(masses.size))
    t = 0.0
    history: list[tuple[float, int, int]] = []
    while len(reps) > 1:
        m = masses[: len(reps)]
        s1 = float(m.sum())
        s2 = float((m * m).sum())
        rate = 0.5 * (s1 * s1 - s2)
        t += rng.exponential(1.0 / rate)
        if t > duration:
            break
        while True:  # rejection: ordered pair prop. to x_i x_j, i != j
            a = int(np.searchsorted(np.cumsum(m), rng.random() * s1))
            b = int(np.searchsorted(np.cumsum(m), rng.random() * s1))
            if a != b:
                break
        i, j = min(a, b), max(a, b)
        history.append((t, reps[i], reps[j]))
        masses[i] = m[i] + m[j]
        masses[j : len(reps) - 1] = masses[j + 1 : len(reps)]
        reps[i] = min(reps[i], reps[j])
        del reps[j]
    return history


def partition_from_history(k: int, history, t: float) -> np.ndarray:
    """Cluster labels of k particles from merge events up to time t."""
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ev_t, a, b in history:
        if ev_t > t:
            break
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    labels = np.array([find(i) for i in range(k)], dtype=np.int64)
    return kernels.canonical_labels(labels)


def thin_half_edges(f, pi: float, rng: np.random.Generator) -> np.ndarray:
    """Retain each of f_i half-edges independently with probability pi;
    an odd retained total is repaired by adding one half-edge at index 0."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError("pi must lie in [0, 1]")
    f = np.asarray(f)
    a = rng.binomial(f.astype(np.int64), pi)
    if int(a.sum()) % 2 != 0:
        a = a.copy()
        a[0] += 1
    return a.astype(np.int64)

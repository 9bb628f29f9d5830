"""p-trees, tilted p-trees, and connected rank-one graphs.

The birthday construction samples a rooted labeled tree with law
prod_v p_v^{d_v}. Tilting an ordered p-tree by L and adding a Poisson
number of surplus edges between a vertex and the right-children of its
root path yields the law of a rank-one graph conditioned on connectivity;
exact enumeration oracles back-check both laws on tiny label sets.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph_core import MultiGraph

__all__ = [
    "ProbVector",
    "AnnotatedPTree",
    "ConnectedSample",
    "TiltAcceptanceError",
    "sample_ptree",
    "birthday_tree_from_labels",
    "build_ordered_tree",
    "annotate",
    "ptree_weight",
    "sample_tilted_connected",
    "sample_connected_weighted",
    "pcon_oracle",
    "PconOracle",
    "partition_law_nr",
    "sample_nr",
    "two_stage_parameters",
    "sample_two_stage",
    "tree_to_json",
    "tree_from_json",
]


class TiltAcceptanceError(RuntimeError):
    """Rejection sampling under the e^{2a} envelope fell below the floor."""

    def __init__(self, tries: int, accepted: int, floor: float):
        rate = accepted / tries if tries else 0.0
        super().__init__(
            f"tilt acceptance rate {rate:.2e} after {tries} tries is below "
            f"the floor {floor:.1e}; the analytic envelope exp(2a) is too "
            "loose here - use the weighted (importance) sampler instead"
        )
        self.tries = tries


@dataclass
class ProbVector:
    """Strictly positive probability mass function."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.ndim != 1 or self.p.size < 1:
            raise ValueError("p must be a non-empty 1-d array")
        if np.any(self.p <= 0):
            raise ValueError("all entries must be positive")
        if abs(self.p.sum() - 1.0) > 1e-12:
            raise ValueError(f"entries must sum to 1, got {self.p.sum()!r}")

    @property
    def m(self) -> int:
        return int(self.p.size)

    @property
    def sigma(self) -> float:
        return float(np.sqrt((self.p**2).sum()))


def _as_p(p) -> np.ndarray:
    return p.p if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)


def birthday_tree_from_labels(labels, m: int) -> tuple[np.ndarray, int]:
    """Tree from an explicit i.i.d.-label stream: edge (Y_{j-1}, Y_j)
    whenever Y_j is unseen, rooted at Y_0. Returns (parent, root)."""
    parent = np.full(m, -2, dtype=np.int64)
    it = iter(labels)
    root = next(it)
    parent[root] = -1
    seen = 1
    prev = root
    while seen < m:
        y = next(it)
        if parent[y] == -2:
            parent[y] = prev
            seen += 1
        prev = y
    return parent, int(root)


def sample_ptree(p, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Birthday-construction p-tree; returns (parent, root)."""
    pa = _as_p(p)
    m = pa.size
    p_cum = np.cumsum(pa)
    p_cum[-1] = 1.0
    block = max(64, int(8 * m * (1.0 + math.log(m + 1))))
    us = rng.random(block)
    parent = np.empty(m, dtype=np.int64)
    while True:
        root, _used = kernels.birthday_tree(p_cum, us, parent)
        if root >= 0:
            return parent.copy(), int(root)
        # extend the same stream and recompute: exact, no completion bias
        us = np.concatenate([us, rng.random(us.size)])


@dataclass
class OrderedTree:
    parent: np.ndarray
    root: int
    child_indptr: np.ndarray
    child_flat: np.ndarray  # children in left-to-right order
    dfs_order: np.ndarray
    dfs_pos: np.ndarray


def build_ordered_tree(
    parent: np.ndarray, root: int, rng: np.random.Generator | None = None
) -> OrderedTree:
    """Attach child orders (uniformly random when rng given, else by vertex
    id) and compute the depth-first order."""
    m = parent.size
    counts = np.zeros(m, dtype=np.int64)
    for v in range(m):
        if parent[v] >= 0:
            counts[parent[v]] += 1
    indptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    flat = np.empty(int(indptr[-1]), dtype=np.int64)
    cursor = indptr[:-1].copy()
    for v in range(m):
        pv = parent[v]
        if pv >= 0:
            flat[cursor[pv]] = v
            cursor[pv] += 1
    if rng is not None:
        for v in range(m):
            lo, hi = indptr[v], indptr[v + 1]
            if hi - lo > 1:
                flat[lo:hi] = flat[lo:hi][rng.permutation(hi - lo)]
    dfs = np.empty(m, dtype=np.int64)
    pos = np.empty(m, dtype=np.int64)
    stack = [int(root)]
    k = 0
    while stack:
        v = stack.pop()
        dfs[k] = v
        pos[v] = k
        k += 1
        # push children reversed so the leftmost is visited first
        for c in range(indptr[v + 1] - 1, indptr[v] - 1, -1):
            stack.append(int(flat[c]))
    return OrderedTree(
        parent=parent, root=int(root), child_indptr=indptr,
        child_flat=flat, dfs_order=dfs, dfs_pos=pos,
    )


@dataclass
class AnnotatedPTree:
    """Ordered p-tree with permitted-edge annotations.

    A[v] is the p-mass of right-children of the root-to-v path; Lambda is
    a * sum_v p_v A[v]; L_value is the tilt exp(Lambda) * prod over tree
    edges of (exp(a p_k p_l) - 1)/(a p_k p_l).
    """

    tree: OrderedTree
    p: np.ndarray
    a: float
    A: np.ndarray
    Lambda: float
    logL: float
    _permitted: list | None = field(default=None, repr=False)

    @property
    def parent(self) -> np.ndarray:
        return self.tree.parent

    @property
    def root(self) -> int:
        return self.tree.root

    @property
    def dfs_order(self) -> np.ndarray:
        return self.tree.dfs_order

    @property
    def L_value(self) -> float:
        return float(np.exp(self.logL))

    def path_to_root(self, v: int) -> list[int]:
        path = [int(v)]
        while self.tree.parent[path[-1]] >= 0:
            path.append(int(self.tree.parent[path[-1]]))
        return path  # v first, root last

    def right_children(self, i: int, path_child: int) -> np.ndarray:
        """Children of path vertex i strictly to the right of path_child."""
        t = self.tree
        lo, hi = t.child_indptr[i], t.child_indptr[i + 1]
        kids = t.child_flat[lo:hi]
        k = int(np.nonzero(kids == path_child)[0][0])
        return kids[k + 1 :]

    def permitted(self, v: int) -> np.ndarray:
        """Endpoints of permitted edges from v: right-children of the
        root-to-v path (empty for the root; v's own children excluded)."""
        out = []
        path = self.path_to_root(v)
        for child, anc in zip(path[:-1], path[1:]):
            out.extend(self.right_children(anc, child))
        return np.array(sorted(out), dtype=np.int64)

    @property
    def permitted_sets(self) -> list[np.ndarray]:
        if self._permitted is None:
            self._permitted = [self.permitted(v) for v in range(self.p.size)]
        return self._permitted


def annotate(tree: OrderedTree, p, a: float) -> AnnotatedPTree:
    pa = _as_p(p)
    A, lam, logL = kernels.annotate_arrays(
        pa,
        float(a),
        tree.dfs_order,
        tree.dfs_pos,
        tree.parent,
        tree.child_flat,
        tree.child_indptr,
    )
    return AnnotatedPTree(tree=tree, p=pa, a=float(a), A=A, Lambda=float(lam), logL=float(logL))


def ptree_weight(parent: np.ndarray, p, ordered: bool = False) -> float:
    """prod_v p_v^{d_v} with d_v the child count; ordered divides by
    prod_v d_v! (the ordered p-tree law)."""
    pa = _as_p(p)
    m = pa.size
    counts = np.zeros(m, dtype=np.int64)
    for v in range(m):
        if parent[v] >= 0:
            counts[parent[v]] += 1
    w = float(np.prod(pa**counts))
    if ordered:
        w /= float(np.prod([math.factorial(int(c)) for c in counts]))
    return w


@dataclass
class ConnectedSample:
    """Tilted p-tree plus its Poisson surplus edges, as a simple graph.

    surplus_pairs holds the realized surplus edges (first endpoint, second
    endpoint); the second endpoint is a right-child of the first
    endpoint's root path, so its parent (recorded in path_anchors) lies on
    that path and carries Q-mass sum of its right-children over A(v).
    """

    tree: AnnotatedPTree
    surplus_pairs: list[tuple[int, int]]
    path_anchors: list[int]
    graph: MultiGraph
    dedup_removed: int
    tries: int = 1


def _draw_surplus(
    ann: AnnotatedPTree, rng: np.random.Generator, route: str
) -> tuple[list[tuple[int, int]], list[int]]:
    pa = ann.p
    a = ann.a
    pairs: list[tuple[int, int]] = []
    anchors: list[int] = []
    if ann.Lambda <= 0.0:
        return pairs, anchors
    if route == "lemma45":
        n_star = int(rng.poisson(ann.Lambda))
        if n_star == 0:
            return pairs, anchors
        w = pa * ann.A
        w = w / w.sum()
        firsts = rng.choice(pa.size, size=n_star, p=w)
        for v in firsts:
            v = int(v)
            path = ann.path_to_root(v)
            rc_sets = []
            rc_mass = []
            for child, anc in zip(path[:-1], path[1:]):
                rc = ann.right_children(anc, child)
                rc_sets.append((anc, rc))
                rc_mass.append(pa[rc].sum())
            rc_mass = np.asarray(rc_mass)
            y_idx = int(
                np.searchsorted(np.cumsum(rc_mass), rng.random() * rc_mass.sum())
            )
            y_idx = min(y_idx, len(rc_sets) - 1)
            anc, rc = rc_sets[y_idx]
            q = pa[rc] / pa[rc].sum()
            u = int(rng.choice(rc, p=q))
            pairs.append((v, u))
            anchors.append(int(anc))
    elif route == "geometric":
        # Poisson points under the height function a*A over [0,1], split by
        # dfs intervals; heights partitioned by permitted vertices in
        # increasing dfs order
        for v in ann.dfs_order:
            v = int(v)
            area = a * pa[v] * ann.A[v]
            if area <= 0.0:
                continue
            cnt = int(rng.poisson(area))
            if cnt == 0:
                continue
            perm = ann.permitted(v)
            perm = perm[np.argsort(ann.tree.dfs_pos[perm])]
            cum = np.cumsum(pa[perm])
            total = cum[-1]
            ts = np.sort(rng.random(cnt)) * total
            for t in ts:
                u_idx = min(int(np.searchsorted(cum, t, side="right")), perm.size - 1)
                u = int(perm[u_idx])
                pairs.append((v, u))
                anchors.append(int(ann.tree.parent[u]))
    else:
        raise ValueError(f"unknown route {route!r}")
    return pairs, anchors


def _dedup(pairs, anchors):
    seen = set()
    out_p, out_a = [], []
    removed = 0
    for (x, y), anc in zip(pairs, anchors):
        key = (min(x, y), max(x, y))
        if key in seen:
            removed += 1
            continue
        seen.add(key)
        out_p.append((x, y))
        out_a.append(anc)
    return out_p, out_a, removed


def _assemble(ann: AnnotatedPTree, rng, route: str, tries: int) -> ConnectedSample:
    pairs, anchors = _draw_surplus(ann, rng, route)
    pairs, anchors, removed = _dedup(pairs, anchors)
    m = ann.p.size
    eu = [int(ann.tree.parent[v]) for v in range(m) if ann.tree.parent[v] >= 0]
    ev = [v for v in range(m) if ann.tree.parent[v] >= 0]
    for x, y in pairs:
        eu.append(x)
        ev.append(y)
    graph = MultiGraph(m, np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64))
    return ConnectedSample(
        tree=ann, surplus_pairs=pairs, path_anchors=anchors,
        graph=graph, dedup_removed=removed, tries=tries,
    )


def sample_tilted_connected(
    p,
    a: float,
    rng: np.random.Generator,
    route: str = "lemma45",
    min_acceptance: float = 1e-4,
) -> ConnectedSample:
    """Connected graph with law prod_E q_ij prod_{E^c} (1 - q_ij) / Z,
    q_ij = 1 - exp(-a p_i p_j).

    The ordered p-tree is tilted by L via exact rejection under the
    envelope exp(2a) (L <= exp(2a) since A(v) <= 1 and the edge-mass sum
    is at most 1), then a Poisson(Lambda) number of surplus edges is
    added by the chosen route; duplicate surplus edges are dropped keeping
    first occurrences. Raises TiltAcceptanceError when the observed
    acceptance rate falls below min_acceptance.
    """
    pa = _as_p(p)
    if a < 0:
        raise ValueError("a must be >= 0")
    max_tries = max(64, int(math.ceil(10.0 / min_acceptance)))
    for tries in range(1, max_tries + 1):
        parent, root = sample_ptree(pa, rng)
        tree = build_ordered_tree(parent, root, rng)
        ann = annotate(tree, pa, a)
        if np.log(rng.random()) < ann.logL - 2.0 * a:
            return _assemble(ann, rng, route, tries)
    raise TiltAcceptanceError(max_tries, 0, min_acceptance)


def sample_connected_weighted(
    p, a: float, rng: np.random.Generator, route: str = "lemma45"
) -> tuple[ConnectedSample, float]:
    """Untilted draw plus its importance weight.

    The tree comes from the plain ordered p-tree law and the surplus from
    the same conditional law as the tilted sampler, so weighting by
    logL (returned) reproduces tilted-law expectations; use when exp(2a)
    makes rejection infeasible.
    """
    pa = _as_p(p)
    parent, root = sample_ptree(pa, rng)
    tree = build_ordered_tree(parent, root, rng)
    ann = annotate(tree, pa, a)
    return _assemble(ann, rng, route, 1), float(ann.logL)


def _pair_index(m: int):
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    return pairs


def _connected_mask(mask: int, m: int, pairs) -> bool:
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for b, (i, j) in enumerate(pairs):
        if mask >> b & 1:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    return len({find(i) for i in range(m)}) == 1


@dataclass
class PconOracle:
    """Exact law over connected simple graphs on m labeled vertices."""

    m: int
    pairs: list[tuple[int, int]]
    masks: np.ndarray
    probs: np.ndarray

    def mask_of(self, g: MultiGraph) -> int:
        idx = {pr: b for b, pr in enumerate(self.pairs)}
        mask = 0
        for u, v in zip(g.eu, g.ev):
            mask |= 1 << idx[(min(u, v), max(u, v))]
        return mask

    def prob_of_mask(self, mask: int) -> float:
        pos = np.nonzero(self.masks == mask)[0]
        return float(self.probs[pos[0]]) if pos.size else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("edge_mask,probability\n")
        for mask, pr in zip(self.masks, self.probs):
            buf.write(f"{int(mask)},{pr:.17g}\n")
        return buf.getvalue()


def pcon_oracle(p, a: float) -> PconOracle:
    """Enumerates P(G) prop. to prod_E q_ij prod_{E^c} (1-q_ij) over
    connected simple graphs; m <= 6 only."""
    pa = _as_p(p)
    m = pa.size
    if m > 6:
        raise ValueError("oracle enumeration limited to m <= 6")
    pairs = _pair_index(m)
    q = np.array([1.0 - np.exp(-a * pa[i] * pa[j]) for i, j in pairs])
    masks, probs = [], []
    for mask in range(1 << len(pairs)):
        if not _connected_mask(mask, m, pairs):
            continue
        pr = 1.0
        for b in range(len(pairs)):
            pr *= q[b] if (mask >> b & 1) else (1.0 - q[b])
        masks.append(mask)
        probs.append(pr)
    probs = np.array(probs)
    probs /= probs.sum()
    return PconOracle(m=m, pairs=pairs, masks=np.array(masks, dtype=np.int64), probs=probs)


def partition_law_nr(x, t: float) -> dict[tuple[int, ...], float]:
    """Exact component-partition law of the rank-one graph with
    q_ij = 1 - exp(-t x_i x_j); m <= 6. Keys are canonical label tuples."""
    xa = np.asarray(x, dtype=np.float64)
    m = xa.size
    if m > 6:
        raise ValueError("enumeration limited to m <= 6")
    pairs = _pair_index(m)
    q = np.array([1.0 - np.exp(-t * xa[i] * xa[j]) for i, j in pairs])
    out: dict[tuple[int, ...], float] = {}
    for mask in range(1 << len(pairs)):
        pr = 1.0
        for b in range(len(pairs)):
            pr *= q[b] if (mask >> b & 1) else (1.0 - q[b])
        eu = np.array([pairs[b][0] for b in range(len(pairs)) if mask >> b & 1], dtype=np.int64)
        ev = np.array([pairs[b][1] for b in range(len(pairs)) if mask >> b & 1], dtype=np.int64)
        labels = kernels.canonical_labels(kernels.union_find_labels(m, eu, ev))
        key = tuple(int(l) for l in labels)
        out[key] = out.get(key, 0.0) + pr
    return out


def sample_nr(
    x, t: float, rng: np.random.Generator, cutoff: float = 0.0
) -> MultiGraph:
    """Norros-Reittu graph: edge {i,j} with probability 1 - exp(-t x_i x_j),
    independently. Row-chunked O(n^2); pairs with q below cutoff are
    skipped (cutoff 0 keeps it exact)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    xa = np.asarray(x, dtype=np.float64)
    n = xa.size
    eus, evs = [], []
    chunk = max(1, int(4e6 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        rows = np.arange(start, stop)
        q = 1.0 - np.exp(-t * xa[rows][:, None] * xa[None, :])
        iu, jv = np.nonzero(
            (rng.random((stop - start, n)) < q)
            & (np.arange(n)[None, :] > rows[:, None])
            & (q >= cutoff)
        )
        eus.append(rows[iu])
        evs.append(jv)
    eu = np.concatenate(eus) if eus else np.zeros(0, dtype=np.int64)
    ev = np.concatenate(evs) if evs else np.zeros(0, dtype=np.int64)
    return MultiGraph(n, eu.astype(np.int64), ev.astype(np.int64))


def two_stage_parameters(
    partition: list, x, t: float
) -> list[tuple[ProbVector, float]]:
    """Per-block (p, a): p is x restricted and renormalized and
    a = t (sum of block x)^2."""
    xa = np.asarray(x, dtype=np.float64)
    out = []
    for block in partition:
        idx = np.asarray(list(block), dtype=np.int64)
        if idx.size == 0:
            raise ValueError("empty partition block")
        s = float(xa[idx].sum())
        out.append((ProbVector(xa[idx] / s), float(t * s * s)))
    return out


def sample_two_stage(x, t: float, rng: np.random.Generator) -> MultiGraph:
    """Rank-one graph via partition then per-block connected sampling."""
    xa = np.asarray(x, dtype=np.float64)
    g0 = sample_nr(xa, t, rng)
    labels = g0.component_labels()
    blocks = [np.nonzero(labels == b)[0] for b in range(int(labels.max()) + 1)]
    eu, ev = [], []
    for block, (pv, a_blk) in zip(blocks, two_stage_parameters(blocks, xa, t)):
        if block.size == 1:
            continue
        sample = sample_tilted_connected(pv, a_blk, rng)
        for u, v in zip(sample.graph.eu, sample.graph.ev):
            eu.append(int(block[u]))
            ev.append(int(block[v]))
    return MultiGraph(xa.size, np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64))


def tree_to_json(tree: OrderedTree) -> str:
    import json

    return json.dumps(
        {
            "parent": [int(x) for x in tree.parent],
            "root": int(tree.root),
            "child_order": [
                [int(c) for c in tree.child_flat[tree.child_indptr[v]:tree.child_indptr[v + 1]]]
                for v in range(tree.parent.size)
            ],
        }
    )


def tree_from_json(text: str) -> OrderedTree:
    import json

    payload = json.loads(text)
    parent = np.array(payload["parent"], dtype=np.int64)
    m = parent.size
    indptr = np.zeros(m + 1, dtype=np.int64)
    counts = [len(c) for c in payload["child_order"]]
    np.cumsum(counts, out=indptr[1:])
    flat = np.array(
        [c for kids in payload["child_order"] for c in kids], dtype=np.int64
    )
    tree = OrderedTree(
        parent=parent, root=int(payload["root"]), child_indptr=indptr,
        child_flat=flat, dfs_order=np.zeros(m, dtype=np.int64),
        dfs_pos=np.zeros(m, dtype=np.int64),
    )
    # recompute dfs from the stored orders
    rebuilt = build_ordered_tree(parent, int(payload["root"]), rng=None)
    tree.dfs_order = rebuilt.dfs_order
    tree.dfs_pos = rebuilt.dfs_pos
    tree.child_indptr = indptr
    tree.child_flat = flat
    stack = [int(payload["root"])]
    k = 0
    while stack:
        v = stack.pop()
        tree.dfs_order[k] = v
        tree.dfs_pos[v] = k
        k += 1
        for c in range(indptr[v + 1] - 1, indptr[v] - 1, -1):
            stack.append(int(flat[c]))
    return tree

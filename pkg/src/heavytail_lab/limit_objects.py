"""Thinned Levy processes and the limit objects they encode.

A thinned Levy path is piecewise linear: jumps theta_i at independent
Exp(theta_i) times plus drift lambda - sum theta_i^2. Excursions of its
reflection carry Poisson marks with intensity equal to the reflected
height, so conditionally on the path the per-excursion mark count is
Poisson(excursion area): both are computed exactly, without time stepping.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .metric_spaces import MeasuredMetricSpace
from .rank_one import (
    ProbVector,
    TiltAcceptanceError,
    sample_connected_weighted,
    sample_tilted_connected,
)

__all__ = [
    "ThetaSeq",
    "LevyPath",
    "Excursion",
    "ExcursionSet",
    "simulate_thinned_levy",
    "excursions_and_marks",
    "default_horizon",
    "largest_excursion_sample",
    "rescaled_excursion_law",
    "LimitComponentParams",
    "limit_component_parameters",
    "calibrate_beta_pmf",
    "approx_G_infinity",
    "approx_G_infinity_weighted",
    "ICRTSkeleton",
    "sample_icrt",
]


@dataclass
class ThetaSeq:
    """Finite non-increasing positive truncation of the jump-size sequence."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.ndim != 1:
            raise ValueError("theta must be 1-d")
        if self.theta.size and np.any(self.theta <= 0):
            raise ValueError("theta entries must be positive")
        if np.any(np.diff(self.theta) > 1e-12):
            raise ValueError("theta must be non-increasing")

    @property
    def K(self) -> int:
        return int(self.theta.size)


def _as_theta(theta) -> np.ndarray:
    if isinstance(theta, ThetaSeq):
        return theta.theta
    return ThetaSeq(np.asarray(theta, dtype=np.float64)).theta


@dataclass
class LevyPath:
    """Event-driven thinned Levy trajectory on [0, horizon].

    value(t) = sum_i theta_i 1{zeta_i <= t} + (lambda - sum theta_i^2) t,
    exactly; jump_times holds every zeta_i (also those beyond the horizon).
    """

    theta: np.ndarray
    lam: float
    horizon: float
    jump_times: np.ndarray

    @property
    def drift_rate(self) -> float:
        return self.lam - float((self.theta**2).sum())

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        jumps = (self.jump_times[None, :] <= t[..., None]) * self.theta[None, :]
        return jumps.sum(axis=-1) + self.drift_rate * t

    def breakpoints(self):
        """(times, values at the times, values just before) within horizon."""
        idx = np.argsort(self.jump_times, kind="stable")
        tt = self.jump_times[idx]
        ss = self.theta[idx]
        keep = tt <= self.horizon
        tt, ss = tt[keep], ss[keep]
        vals_before = np.cumsum(ss) - ss + self.drift_rate * tt
        vals_after = vals_before + ss
        return tt, vals_after, vals_before


def simulate_thinned_levy(
    theta, lam: float, T: float, rng: np.random.Generator
) -> LevyPath:
    """zeta_i ~ Exp(theta_i) independently; exact piecewise-linear path."""
    th = _as_theta(theta)
    if T <= 0:
        raise ValueError("horizon must be positive")
    zeta = (
        rng.exponential(1.0, size=th.size) / th
        if th.size
        else np.zeros(0, dtype=np.float64)
    )
    return LevyPath(theta=th, lam=float(lam), horizon=float(T), jump_times=zeta)


@dataclass
class Excursion:
    start: float
    length: float
    area: float
    jump_indices: tuple
    complete: bool


@dataclass
class ExcursionSet:
    excursions: list  # ordered by decreasing length
    marks: np.ndarray
    incomplete_final: bool

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.excursions])


def excursions_and_marks(
    path: LevyPath, rng: np.random.Generator
) -> ExcursionSet:
    """Excursions of the reflected path above 0 (exact on the linear
    pieces), each with a Poisson(area) mark count."""
    drift = path.drift_rate
    order = np.argsort(path.jump_times, kind="stable")
    times = path.jump_times[order]
    sizes = path.theta[order]
    keep = times <= path.horizon
    times, sizes, jidx = times[keep], sizes[keep], order[keep]

    excursions: list[Excursion] = []
    refl = 0.0
    cur_t = 0.0
    exc_start = None
    exc_area = 0.0
    exc_jumps: list[int] = []
    incomplete = False

    def close(end_t, complete=True):
        nonlocal exc_start, exc_area, exc_jumps
        excursions.append(
            Excursion(
                start=exc_start,
                length=end_t - exc_start,
                area=exc_area,
                jump_indices=tuple(exc_jumps),
                complete=complete,
            )
        )
        exc_start = None
        exc_area = 0.0
        exc_jumps = []

    if drift > 0:
        # positive drift lifts the path off its minimum immediately
        exc_start = 0.0

    events = list(zip(times, sizes, jidx)) + [(path.horizon, 0.0, -1)]
    for t_k, s_k, j_k in events:
        if exc_start is not None:
            dt = t_k - cur_t
            if drift < 0:
                need = refl / (-drift)
                if need <= dt + 1e-15 and need <= dt:
                    exc_area += refl * need + 0.5 * drift * need * need
                    close(cur_t + need)
                    refl = 0.0
                else:
                    exc_area += refl * dt + 0.5 * drift * dt * dt
                    refl += drift * dt
            else:
                exc_area += refl * dt + 0.5 * drift * dt * dt
                refl += drift * dt
        if j_k < 0:
            break
        if s_k > 0.0:
            if exc_start is None:
                exc_start = t_k
            refl += s_k
            exc_jumps.append(int(j_k))
        cur_t = t_k
    if exc_start is not None:
        incomplete = True
        close(path.horizon, complete=False)

    excursions.sort(key=lambda e: (-e.length, e.start))
    marks = np.array([rng.poisson(e.area) for e in excursions], dtype=np.int64)
    return ExcursionSet(
        excursions=excursions, marks=marks, incomplete_final=incomplete
    )


def default_horizon(theta, eps: float = 0.005) -> float:
    """Horizon with expected number of later jumps below eps: beyond T the
    reflected path can only start excursions at missed jumps."""
    th = _as_theta(theta)
    if th.size == 0:
        return 1.0
    T = 1.0
    while float(np.exp(-th * T).sum()) > eps:
        T *= 2.0
        if T > 1e9:
            break
    return T


def largest_excursion_sample(
    theta,
    lam: float,
    rng: np.random.Generator,
    T: float | None = None,
    with_marks: bool = False,
    tail_third_moment: float = 0.0,
    tail_unit: float | None = None,
):
    """(length, marks) of the longest excursion, regrowing the horizon when
    the longest excursion is the flagged incomplete one.

    tail_third_moment > 0 appends a surrogate for the truncated part of
    theta: equal small jumps (size tail_unit, default half the smallest
    retained entry) whose third moments sum to the discarded
    sum_{i>K} theta_i^3. Each tiny jump self-compensates, so to second
    order only that third moment matters; the surrogate removes most of
    the hard-truncation bias at fixed K.
    """
    th = _as_theta(theta)
    horizon = default_horizon(th) if T is None else T
    if tail_third_moment > 0.0:
        unit = tail_unit if tail_unit is not None else float(th[-1]) / 2.0
        count = int(round(tail_third_moment / unit**3))
        th = np.sort(np.concatenate([th, np.full(count, unit)]))[::-1]
    for _ in range(12):
        path = simulate_thinned_levy(th, lam, horizon, rng)
        exc = excursions_and_marks(path, rng)
        if not exc.excursions:
            return (0.0, 0) if with_marks else 0.0
        top = exc.excursions[0]
        if top.complete:
            return (top.length, int(exc.marks[0])) if with_marks else top.length
        horizon *= 2.0
    return (top.length, int(exc.marks[0])) if with_marks else top.length


def rescaled_excursion_law(
    theta,
    lam: float,
    eta1: float,
    eta2: float,
    samples: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Two samplers of the largest excursion length whose laws agree:
    xi(eta1 theta, eta2 lambda) and (1/eta1) xi(theta, eta2 lambda/eta1^2).
    """
    if eta1 <= 0 or eta2 <= 0:
        raise ValueError("eta1 and eta2 must be positive")
    th = _as_theta(theta)
    a = np.array(
        [
            largest_excursion_sample(eta1 * th, eta2 * lam, rng)
            for _ in range(samples)
        ]
    )
    b = np.array(
        [
            largest_excursion_sample(th, eta2 * lam / eta1**2, rng) / eta1
            for _ in range(samples)
        ]
    )
    return a, b


@dataclass
class LimitComponentParams:
    xi_star: float
    theta_sub: np.ndarray
    gamma: float
    degenerate: bool
    marks: int


def limit_component_parameters(
    theta,
    lam: float,
    mu: float,
    nu: float,
    rng: np.random.Generator,
    n_top: int = 1,
    T: float | None = None,
) -> list[LimitComponentParams]:
    """Per-excursion limit-space parameters.

    Simulates xi((mu(nu-1))^-1 theta, (mu(nu-1)^2)^-1 nu^2 lambda); for
    excursion i with jump set Xi, gamma = (xi_i/(mu(nu-1))) sqrt(sum_Xi
    theta_v^2) and theta_sub = theta_j / sqrt(sum_Xi theta_v^2) (normalized
    so its squares sum to 1, matching the limit-space convention).
    """
    if nu <= 1:
        raise ValueError("need nu > 1")
    th = _as_theta(theta)
    scale = 1.0 / (mu * (nu - 1.0))
    lam_star = nu**2 * lam / (mu * (nu - 1.0) ** 2)
    th_star = scale * th
    horizon = default_horizon(th_star) if T is None else T
    path = simulate_thinned_levy(th_star, lam_star, horizon, rng)
    exc = excursions_and_marks(path, rng)
    out = []
    for e, mk in list(zip(exc.excursions, exc.marks))[:n_top]:
        idx = np.array(sorted(e.jump_indices), dtype=np.int64)
        if idx.size == 0:
            out.append(
                LimitComponentParams(
                    xi_star=e.length, theta_sub=np.zeros(0),
                    gamma=0.0, degenerate=True, marks=int(mk),
                )
            )
            continue
        ssq = float((th[idx] ** 2).sum())
        out.append(
            LimitComponentParams(
                xi_star=e.length,
                theta_sub=np.sort(th[idx] / math.sqrt(ssq))[::-1],
                gamma=e.length / (mu * (nu - 1.0)) * math.sqrt(ssq),
                degenerate=False,
                marks=int(mk),
            )
        )
    return out


def calibrate_beta_pmf(beta, m: int) -> ProbVector:
    """pmf with head entries proportional to beta and m-K equal fillers,
    calibrated so p_i/sigma(p) = beta_i exactly on the head."""
    b = np.asarray(beta, dtype=np.float64)
    K = b.size
    ssq = float((b**2).sum())
    if ssq > 1.0 + 1e-12:
        raise ValueError("sum of beta_i^2 must be <= 1")
    if m < K:
        raise ValueError("m must be at least the truncation length")
    if m == K:
        if abs(ssq - 1.0) > 1e-9:
            raise ValueError("with no fillers the beta squares must sum to 1")
        sigma = 1.0 / b.sum()
        return ProbVector(sigma * b)
    rem = max(1.0 - ssq, 0.0)
    if rem == 0.0:
        raise ValueError("beta squares sum to 1: fillers would be zero mass")
    filler_unit = math.sqrt(rem / (m - K))
    if b.size and filler_unit > b[-1] + 1e-12:
        raise ValueError(
            f"calibration infeasible: filler mass {filler_unit:.3g} exceeds "
            f"beta_K = {b[-1]:.3g}; increase m to at least "
            f"{K + int(np.ceil(rem / b[-1] ** 2))}"
        )
    sigma = 1.0 / (b.sum() + (m - K) * filler_unit)
    p = np.concatenate([sigma * b, np.full(m - K, sigma * filler_unit)])
    p = p / p.sum()
    return ProbVector(p)


def approx_G_infinity(
    beta,
    gamma: float,
    m: int,
    rng: np.random.Generator,
    route: str = "lemma45",
) -> MeasuredMetricSpace:
    """Finite-m proxy of the limit space: sigma(p) times a tilted connected
    graph on the calibrated pmf with a = gamma/sigma(p), vertex measure p.

    Uses the exact rejection sampler; for large a (large m at fixed gamma)
    that envelope is hopeless and TiltAcceptanceError points to
    approx_G_infinity_weighted.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    pv = calibrate_beta_pmf(beta, m)
    sigma = pv.sigma
    a = gamma / sigma
    if a > 12.0:
        raise TiltAcceptanceError(0, 0, math.exp(-2 * a))
    sample = sample_tilted_connected(pv, a, rng, route=route)
    return MeasuredMetricSpace.from_graph(sample.graph, mu=pv.p, scale=sigma)


def approx_G_infinity_weighted(
    beta,
    gamma: float,
    m: int,
    rng: np.random.Generator,
    route: str = "lemma45",
) -> tuple[MeasuredMetricSpace, float]:
    """(space, log importance weight): the space is drawn with the plain
    ordered p-tree in place of the tilted one; weighting expectations by
    the exponentiated log weights reproduces the tilted law."""
    pv = calibrate_beta_pmf(beta, m)
    sigma = pv.sigma
    sample, logw = sample_connected_weighted(pv, gamma / sigma, rng, route=route)
    return MeasuredMetricSpace.from_graph(sample.graph, mu=pv.p, scale=sigma), logw


@dataclass
class ICRTSkeleton:
    """Stick-breaking skeleton: branch b covers the global coordinate
    interval (starts[b], ends[b]], attaches at attach_pos[b] (a coordinate
    on an earlier branch) which is the joinpoint of hub hub_of_branch[b].
    Branch 0 is the root branch [0, ends[0]] with no parent."""

    starts: np.ndarray
    ends: np.ndarray
    parent_branch: np.ndarray
    attach_pos: np.ndarray
    hub_of_branch: np.ndarray
    hub_positions: dict
    total_length: float
    degenerate: bool = False
    _memo_depth: dict = field(default_factory=dict, repr=False)

    @property
    def n_branches(self) -> int:
        return int(self.starts.size)

    def branch_of(self, u: float) -> int:
        b = int(np.searchsorted(self.starts, u, side="right") - 1)
        return max(0, min(b, self.n_branches - 1))

    def _entry_chain(self, u: float):
        """[(branch, coordinate on that branch)] from the point to root."""
        chain = []
        b = self.branch_of(u)
        pos = u
        while True:
            chain.append((b, pos))
            if b == 0:
                return chain
            pos = float(self.attach_pos[b])
            b = int(self.parent_branch[b])

    def distance(self, u: float, v: float) -> float:
        cu = self._entry_chain(u)
        cv = self._entry_chain(v)
        bu = {b: pos for b, pos in cu}
        # deepest branch of v's chain that u's chain also visits
        for b, pos_v in cv:
            if b in bu:
                common, pos_u = b, bu[b]
                break
        meet = min(pos_u, pos_v)

        def climb(chain, upto_branch, upto_pos):
            d = 0.0
            for b, pos in chain:
                if b == upto_branch:
                    d += pos - upto_pos
                    return d
                d += pos - self.starts[b]
            raise RuntimeError("common branch not on chain")

        return climb(cu, common, meet) + climb(cv, common, meet)

    def branches_at_hub(self, i: int) -> int:
        return int((self.hub_of_branch == i).sum())

    def to_json(self) -> str:
        return json.dumps(
            {
                "degenerate": self.degenerate,
                "total_length": self.total_length,
                "branches": [
                    {
                        "parent": int(self.parent_branch[b]),
                        "length": float(self.ends[b] - self.starts[b]),
                        "hub": int(self.hub_of_branch[b]),
                    }
                    for b in range(self.n_branches)
                ],
            }
        )


def sample_icrt(beta, T_cut: float, rng: np.random.Generator) -> ICRTSkeleton:
    """Poisson stick-breaking: the first point of the rate-beta_i process
    is hub i's joinpoint, later points are cutpoints; branches between
    successive cutpoints attach at the joinpoint of the cutpoint that
    opened them. Stops at the last cutpoint <= T_cut."""
    b = np.asarray(beta, dtype=np.float64)
    if b.size == 0 or np.any(b <= 0):
        raise ValueError("beta must be positive and non-empty")
    if T_cut <= 0:
        raise ValueError("T_cut must be positive")
    join: dict[int, float] = {}
    cuts: list[tuple[float, int]] = []
    for i, rate in enumerate(b):
        t = rng.exponential(1.0 / rate)
        if t > T_cut:
            continue
        join[i] = t
        while True:
            t += rng.exponential(1.0 / rate)
            if t > T_cut:
                break
            cuts.append((t, i))
    cuts.sort()
    if not cuts:
        return ICRTSkeleton(
            starts=np.array([0.0]),
            ends=np.array([T_cut]),
            parent_branch=np.array([-1], dtype=np.int64),
            attach_pos=np.array([0.0]),
            hub_of_branch=np.array([-1], dtype=np.int64),
            hub_positions={},
            total_length=float(T_cut),
            degenerate=True,
        )
    starts = [0.0]
    ends = [cuts[0][0]]
    parent = [-1]
    attach = [0.0]
    hub_of = [-1]
    for k in range(len(cuts) - 1):
        eta_k, hub = cuts[k]
        starts.append(eta_k)
        ends.append(cuts[k + 1][0])
        attach.append(join[hub])
        hub_of.append(hub)
        parent.append(0)  # fixed up below from the attach coordinate
    skel = ICRTSkeleton(
        starts=np.array(starts),
        ends=np.array(ends),
        parent_branch=np.array(parent, dtype=np.int64),
        attach_pos=np.array(attach),
        hub_of_branch=np.array(hub_of, dtype=np.int64),
        hub_positions={i: pos for i, pos in join.items() if pos <= cuts[-1][0]},
        total_length=float(cuts[-1][0]),
    )
    for k in range(1, skel.n_branches):
        skel.parent_branch[k] = skel.branch_of(skel.attach_pos[k])
    return skel


def excursion_table_csv(exc: ExcursionSet) -> str:
    buf = io.StringIO()
    buf.write("length,area,marks\n")
    for e, mk in zip(exc.excursions, exc.marks):
        buf.write(f"{e.length:.17g},{e.area:.17g},{mk}\n")
    return buf.getvalue()

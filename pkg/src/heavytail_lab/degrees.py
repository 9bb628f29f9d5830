"""Degree sequences for heavy-tailed configuration models.

Generates quantile and i.i.d. power-law degree sequences with exponent
tau in (3, 4), computes the criticality parameter and percolation window,
and reports diagnostics for the high-degree / moment assumptions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "TauExponents",
    "DegreeSequence",
    "AssumptionReport",
    "PercolationProbability",
    "exponents",
    "generate_degrees",
    "criticality_parameter",
    "percolation_probability",
    "assumption_diagnostics",
    "tune_quantile_scale",
    "generate_barely_subcritical",
]


@dataclass(frozen=True)
class TauExponents:
    """Scaling exponents derived from the degree exponent tau."""

    tau: float
    alpha: float
    rho: float
    eta: float


def exponents(tau: float) -> TauExponents:
    """alpha = 1/(tau-1), rho = (tau-2)/(tau-1), eta = (tau-3)/(tau-1)."""
    if not 3.0 < tau < 4.0:
        raise ValueError(f"tau must lie in (3, 4), got {tau}")
    return TauExponents(
        tau=tau,
        alpha=1.0 / (tau - 1.0),
        rho=(tau - 2.0) / (tau - 1.0),
        eta=(tau - 3.0) / (tau - 1.0),
    )


@dataclass
class DegreeSequence:
    """Non-increasing positive integer degrees with even sum.

    weights are optional per-vertex reals (used by the weighted
    susceptibility functionals); tau records the generating exponent.
    """

    d: np.ndarray
    weights: np.ndarray | None = None
    tau: float | None = None
    quantile_scale: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=np.int64)
        if self.d.ndim != 1 or self.d.size < 1:
            raise ValueError("degree sequence must be a non-empty 1-d array")
        if np.any(self.d < 1):
            raise ValueError("all degrees must be >= 1")
        if np.any(np.diff(self.d) > 0):
            raise ValueError("degrees must be non-increasing")
        if int(self.d.sum()) % 2 != 0:
            raise ValueError("degree sum must be even")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != self.d.shape:
                raise ValueError("weights must match the degree sequence length")
            if np.any(self.weights < 0):
                raise ValueError("weights must be non-negative")

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def total_degree(self) -> int:
        return int(self.d.sum())

    def to_text(self) -> str:
        return "\n".join(str(int(x)) for x in self.d) + "\n"

    @classmethod
    def from_text(cls, text: str, tau: float | None = None) -> "DegreeSequence":
        vals = [int(line) for line in text.split() if line.strip()]
        return cls(d=np.sort(np.array(vals, dtype=np.int64))[::-1], tau=tau)

    def to_json(self) -> str:
        payload = {"n": self.n, "d": [int(x) for x in self.d]}
        if self.weights is not None:
            payload["w"] = [float(x) for x in self.weights]
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str, tau: float | None = None) -> "DegreeSequence":
        payload = json.loads(text)
        d = np.array(payload["d"], dtype=np.int64)
        w = np.array(payload["w"], dtype=np.float64) if "w" in payload else None
        return cls(d=d, weights=w, tau=tau)


def _fix_parity(d: np.ndarray) -> np.ndarray:
    """Make the degree sum even by incrementing the hub (index 0)."""
    if int(d.sum()) % 2 != 0:
        d = d.copy()
        d[0] += 1
    return np.sort(d)[::-1]


def _quantile_degrees(n: int, alpha: float, scale: float) -> np.ndarray:
    i = np.arange(1, n + 1, dtype=np.float64)
    raw = np.ceil(scale * (n / i) ** alpha)
    return np.maximum(raw, 1.0).astype(np.int64)


def generate_degrees(
    n: int,
    tau: float,
    mode: str = "quantile",
    target_mean: float | None = None,
    rng: np.random.Generator | None = None,
    scale: float | None = None,
) -> DegreeSequence:
    """Quantile rule d_i = max(1, ceil(c (n/i)^alpha)) or sorted i.i.d.
    power-law draws with P(D >= x) = x^-(tau-1); parity is repaired by
    incrementing the hub degree.

    In quantile mode the scale c is either given directly or fixed by
    target_mean through a deterministic bisection.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    exps = exponents(tau)
    if mode == "quantile":
        if scale is None:
            if target_mean is None:
                scale = 1.0
            else:
                scale = _scale_for_mean(n, exps.alpha, target_mean)
        d = _quantile_degrees(n, exps.alpha, scale)
        return DegreeSequence(d=_fix_parity(d), tau=tau, quantile_scale=scale)
    if mode == "iid":
        if rng is None:
            raise ValueError("iid mode needs an explicit rng")
        u = rng.random(n)
        d = np.floor(u ** (-1.0 / (tau - 1.0))).astype(np.int64)
        d = np.maximum(d, 1)
        d = np.sort(d)[::-1]
        return DegreeSequence(d=_fix_parity(d), tau=tau)
    raise ValueError(f"unknown mode {mode!r}")


def _scale_for_mean(n: int, alpha: float, target_mean: float) -> float:
    if target_mean < 1.0:
        raise ValueError("target_mean must be >= 1 (degrees are >= 1)")

    def mean_at(c):
        return _quantile_degrees(n, alpha, c).mean()

    lo, hi = 1e-9, 1.0
    while mean_at(hi) < target_mean:
        hi *= 2.0
        if hi > 1e9:
            raise ValueError("target_mean unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_at(mid) < target_mean:
            lo = mid
        else:
            hi = mid
    return hi


def criticality_parameter(d) -> float:
    """nu_n = sum d_i (d_i - 1) / sum d_i."""
    arr = d.d if isinstance(d, DegreeSequence) else np.asarray(d, dtype=np.int64)
    if arr.size == 0:
        raise ValueError("empty degree sequence")
    total = float(arr.sum())
    if total <= 0:
        raise ValueError("degree sum must be positive")
    return float((arr.astype(np.float64) * (arr - 1)).sum() / total)


class PercolationProbability(NamedTuple):
    p: float
    clamped: bool


def percolation_probability(ds: DegreeSequence, lam: float) -> PercolationProbability:
    """Critical-window probability p_n(lambda) = 1/nu_n + lambda n^-eta.

    Requires a supercritical base sequence (nu_n > 1) and a tau on the
    sequence; the result is clamped to [0, 1] with a flag.
    """
    if ds.tau is None:
        raise ValueError("degree sequence carries no tau")
    nu = criticality_parameter(ds)
    if nu <= 1.0:
        raise ValueError(f"nu_n = {nu:.6f} <= 1: base graph not supercritical")
    eta = exponents(ds.tau).eta
    p = 1.0 / nu + lam * ds.n ** (-eta)
    clamped = p < 0.0 or p > 1.0
    return PercolationProbability(p=float(min(max(p, 0.0), 1.0)), clamped=clamped)


@dataclass
class AssumptionReport:
    theta_estimates: np.ndarray
    mu_hat: float
    mu2_hat: float
    third_moment_tail: dict[int, float]
    nu_n: float


def assumption_diagnostics(ds: DegreeSequence, tau: float, K: int) -> AssumptionReport:
    """Rescaled hub degrees n^-alpha d_i (i <= K), empirical first and
    second moments, the truncated third-moment tail n^-3alpha sum_{i>k} d_i^3
    on a doubling ladder of cutoffs k <= K, and nu_n.

    The tail is reported as a trend; finite data cannot certify the
    ell^3-minus-ell^2 membership of the limiting theta sequence.
    """
    if K >= ds.n:
        raise ValueError("K must be < n")
    exps = exponents(tau)
    n = ds.n
    d = ds.d.astype(np.float64)
    na = float(n) ** (-exps.alpha)
    cube = d**3
    cutoffs = []
    k = 1
    while k < K:
        cutoffs.append(k)
        k *= 2
    cutoffs.append(K)
    tail = {
        int(k): float(n ** (-3 * exps.alpha) * cube[k:].sum()) for k in cutoffs
    }
    return AssumptionReport(
        theta_estimates=na * d[:K],
        mu_hat=float(d.mean()),
        mu2_hat=float((d**2).mean()),
        third_moment_tail=tail,
        nu_n=criticality_parameter(ds),
    )


def tune_quantile_scale(
    n: int, tau: float, nu_target: float, tol: float = 1e-10
) -> float:
    """Scale c so the quantile sequence has nu_n as close as possible to
    nu_target. nu_n(c) is piecewise constant and monotone through the
    relevant range, so we bracket by doubling and bisect."""
    alpha = exponents(tau).alpha

    def nu_at(c):
        return criticality_parameter(_quantile_degrees(n, alpha, c))

    lo = 1e-9
    hi = 0.5
    while nu_at(hi) < nu_target:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("nu_target unreachable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if nu_at(mid) < nu_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    return hi


def generate_barely_subcritical(
    n: int, tau: float, delta: float, lambda0: float
) -> tuple[DegreeSequence, float, float]:
    """Quantile sequence tuned toward nu_n = 1 - lambda0 n^-delta.

    The achieved pair is reported because integer degrees quantize nu_n;
    returns (sequence, achieved_delta=delta, achieved_lambda0).
    """
    eta = exponents(tau).eta
    if not 0.0 < delta < eta:
        raise ValueError(f"delta must lie in (0, eta={eta:.4f})")
    nu_target = 1.0 - lambda0 * n ** (-delta)
    scale = tune_quantile_scale(n, tau, nu_target)
    ds = generate_degrees(n, tau, mode="quantile", scale=scale)
    achieved_lambda0 = (1.0 - criticality_parameter(ds)) * n**delta
    return ds, delta, float(achieved_lambda0)

"""Statistics shared by the experiment harness and the test suite."""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

__all__ = [
    "slope",
    "ks_two_sample",
    "tv_empirical",
    "size_biased_permutation",
    "bootstrap_ci",
]


def slope(x, y) -> tuple[float, float]:
    """Least-squares slope of y on x with its standard error.

    Callers pass log-transformed data for power-law exponents.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    xm = x - x.mean()
    sxx = float((xm**2).sum())
    if sxx == 0.0:
        raise ValueError("degenerate x values")
    b = float((xm * y).sum() / sxx)
    if x.size == 2:
        return b, 0.0
    resid = y - y.mean() - b * xm
    se = float(np.sqrt((resid**2).sum() / (x.size - 2) / sxx))
    return b, se


def ks_two_sample(a, b) -> dict:
    """Two-sample Kolmogorov-Smirnov distance with asymptotic critical
    values at 5% and 1%."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    res = sps.ks_2samp(a, b, method="asymp")
    scale = np.sqrt((a.size + b.size) / (a.size * b.size))
    return {
        "distance": float(res.statistic),
        "pvalue": float(res.pvalue),
        "critical_5pct": float(1.358 * scale),
        "critical_1pct": float(1.628 * scale),
    }


def tv_empirical(counts: dict, exact: dict) -> float:
    """Total variation between empirical counts and an exact distribution.

    Unseen outcomes of the exact law contribute their full mass.
    """
    total = float(sum(counts.values()))
    if total <= 0:
        raise ValueError("empty counts")
    keys = set(counts) | set(exact)
    return 0.5 * sum(
        abs(counts.get(k, 0) / total - exact.get(k, 0.0)) for k in keys
    )


def size_biased_permutation(x, rng: np.random.Generator) -> np.ndarray:
    """Sequential sampling without replacement with probability
    proportional to the remaining x; zero-mass entries come last, in
    index order. Realized by sorting independent Exp(x_i) keys."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    keys = np.full(x.size, np.inf)
    pos = x > 0
    keys[pos] = rng.exponential(1.0, size=int(pos.sum())) / x[pos]
    return np.argsort(keys, kind="stable")


def bootstrap_ci(
    values, rng: np.random.Generator, n_boot: int = 2000, level: float = 0.95
) -> tuple[float, float]:
    """Percentile bootstrap confidence interval for the mean."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty sample")
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    means = values[idx].mean(axis=1)
    lo = (1.0 - level) / 2.0
    return float(np.quantile(means, lo)), float(np.quantile(means, 1.0 - lo))

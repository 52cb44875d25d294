"""Statistical comparisons of Monte Carlo samples against predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fluctuations import gaussian_moments

__all__ = ["CheckResult", "MomentVerdict", "compare_moments", "rate_term", "mean_se", "variance_se", "batch_se"]


@dataclass(frozen=True)
class CheckResult:
    """One comparison with its tolerance and where the tolerance came from."""

    check: str
    n: int
    f_name: str
    label: str
    estimate: complex | float
    se: float
    predicted: complex | float
    tolerance: float
    tolerance_source: str
    passed: bool

    @property
    def key(self) -> tuple:
        return (self.check, self.n, self.f_name, self.label)


@dataclass(frozen=True)
class MomentVerdict:
    k: int
    empirical: float
    predicted: float
    se: float
    rate: float
    tolerance: float
    passed: bool


def rate_term(n: int, lipschitz: bool, c: float = 5.0) -> float:
    """``c N^(-1/2)`` when ``f'`` is bounded, ``c N^(-1/6)`` otherwise."""
    return c * n ** (-0.5 if lipschitz else -1 / 6)


def mean_se(x) -> float:
    """Standard error of the mean; complex samples use ``E|x - Ex|^2``."""
    x = np.asarray(x)
    if x.size < 2:
        return float("inf")
    return float(np.sqrt(np.mean(np.abs(x - x.mean()) ** 2) / (x.size - 1)))


def variance_se(x) -> float:
    """Standard error of the sample variance, ``sqrt((m4 - s^4) / n)``."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    s2 = np.mean(d * d)
    return float(np.sqrt(max(np.mean(d**4) - s2 * s2, 0.0) / x.size))


def batch_se(values, batches: int) -> float:
    """Batch-means standard error of ``mean(values)``."""
    v = np.asarray(values, dtype=float)
    b = max(2, min(batches, v.size // 2))
    means = np.array([chunk.mean() for chunk in np.array_split(v, b)])
    return float(means.std(ddof=1) / np.sqrt(b))


def compare_moments(
    samples,
    variance: float,
    k_max: int = 6,
    n: int | None = None,
    lipschitz: bool = True,
    c: float = 5.0,
    batches: int = 20,
) -> list[MomentVerdict]:
    """Empirical ``E T^k`` against the Gaussian moments of the given variance.

    Passes when ``|diff| <= 3 SE + rate``; the SE comes from batch means and
    the rate term is :func:`rate_term` (zero when ``n`` is None).
    """
    if not 1 <= k_max <= 6:
        raise ValueError("k_max must be between 1 and 6")
    x = np.asarray(samples, dtype=float)
    rate = 0.0 if n is None else rate_term(n, lipschitz, c)
    out = []
    for k in range(1, k_max + 1):
        xk = x**k
        emp = float(xk.mean())
        pred = float(gaussian_moments(k, 0, variance))
        se = batch_se(xk, batches)
        tol = 3 * se + rate
        out.append(MomentVerdict(k, emp, pred, se, rate, tol, bool(abs(emp - pred) <= tol)))
    return out

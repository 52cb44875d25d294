"""Fluctuation statistics of ``f(H)_11`` and ``f(H)_12`` and their Gaussian limits.

The limiting variances are combinations of the quadratic forms of
:func:`wignerfh.semicircle.v_terms`:

    Var T_f   = V1 + V1^(s2) - 2 V2 - (1 + s2) V3 + (s4 - 2 - s2^2) V4
    E S_f^2   = V1^(s2) - V2 - s2 V3
    E|S_f|^2  = V1 - V2 - V3

Only the first two eigenvector components are needed for these entries, so
:class:`SpectralSample` reduces ``H`` to tridiagonal form (the reduction
fixes ``e_1``), diagonalizes the tridiagonal matrix and maps one vector back.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, get_lapack_funcs
from scipy.special import ndtr

from .bvfunc import BVFunction
from .ensembles import WignerMatrix
from .errors import DomainError, NumericalError
from .semicircle import VTerms, sc_integral, v_terms

__all__ = [
    "FluctuationPrediction",
    "predict",
    "predicted_variance_diag",
    "predicted_variance_offdiag",
    "SpectralSample",
    "f_of_H_entry",
    "SampleStatistic",
    "t_statistic",
    "gaussian_moments",
    "complex_covariance",
    "levy_distance",
    "MomentAccumulator",
]

log = logging.getLogger(__name__)

_NEG_TOL = 1e-9


def _clip_variance(v: float, label: str) -> float:
    if v < -_NEG_TOL:
        raise NumericalError(f"{label} is negative ({v:.3e}) beyond quadrature noise")
    if v < 0:
        log.debug("%s = %.2e clipped to 0", label, v)
        return 0.0
    return v


def _diag_from_terms(t: VTerms, sigma4: float) -> float:
    s2 = t.sigma2
    return t.v1 + t.v1_sigma2 - 2 * t.v2 - (1 + s2) * t.v3 + (sigma4 - 2 - s2 * s2) * t.v4


def predicted_variance_diag(f: BVFunction, sigma2: float, sigma4: float) -> float:
    """Limiting variance of ``T_f``."""
    return _clip_variance(_diag_from_terms(v_terms(f, sigma2), sigma4), "Var T_f")


def predicted_variance_offdiag(f: BVFunction, sigma2: float) -> tuple[float, float]:
    """``(E S^2, E|S|^2)`` of the limiting off-diagonal Gaussian."""
    t = v_terms(f, sigma2)
    return t.v1_sigma2 - t.v2 - sigma2 * t.v3, _clip_variance(t.v1 - t.v2 - t.v3, "E|S_f|^2")


@dataclass(frozen=True)
class FluctuationPrediction:
    """Predicted centering and limiting Gaussian law for one ``f``."""

    name: str
    mean: float
    xi_coeff: float
    var_diag: float
    var_offdiag_sq: float
    abs_sq: float
    regularity_flag: bool
    sigma2: float
    sigma4: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def predict(f: BVFunction, sigma2: float, sigma4: float) -> FluctuationPrediction:
    t = v_terms(f, sigma2)
    esq = t.v1_sigma2 - t.v2 - sigma2 * t.v3
    abs_sq = _clip_variance(t.v1 - t.v2 - t.v3, "E|S_f|^2")
    if abs(esq) > abs_sq + _NEG_TOL:
        raise NumericalError(f"|E S^2| = {abs(esq):.3e} exceeds E|S|^2 = {abs_sq:.3e}")
    return FluctuationPrediction(
        name=f.name,
        mean=sc_integral(f),
        xi_coeff=sc_integral(f, "x"),
        var_diag=_clip_variance(_diag_from_terms(t, sigma4), "Var T_f"),
        var_offdiag_sq=esq,
        abs_sq=abs_sq,
        regularity_flag=f.has_bounded_derivative,
        sigma2=float(sigma2),
        sigma4=float(sigma4),
    )


# -- spectral evaluation --------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralSample:
    """Eigenvalues of ``H`` with the first two components of every eigenvector.

    ``u1[k] = u_k(1)`` and ``u2[k] = u_k(2)`` so that
    ``f(H)_11 = sum f(lambda_k) |u1|^2`` and
    ``f(H)_12 = sum f(lambda_k) u1 conj(u2)``.
    """

    eigenvalues: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    method: str = "tridiagonal"

    @classmethod
    def from_matrix(cls, h, method: str = "tridiagonal") -> "SpectralSample":
        a = h.entries if isinstance(h, WignerMatrix) else np.asarray(h)
        if method == "eigh":
            lam, u = eigh(a)
            return cls(lam, u[0].copy(), u[1].copy(), method)
        if method != "tridiagonal":
            raise ValueError(f"unknown method {method!r}")
        lam, w, p = _tridiagonal_route(a)
        return cls(lam, w[0].copy(), np.conj(p) @ w, method)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def weights(self) -> np.ndarray:
        """Spectral measure of ``e_1``: masses ``|u_k(1)|^2`` at ``lambda_k``."""
        return np.abs(self.u1) ** 2

    def entry11(self, f) -> float:
        return float(np.dot(f(self.eigenvalues), self.weights))

    def entry12(self, f) -> complex:
        return complex(np.dot(f(self.eigenvalues), self.u1 * np.conj(self.u2)))

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))


def _tridiagonal_route(a: np.ndarray):
    n = a.shape[0]
    cplx = np.iscomplexobj(a)
    name = "hetrd" if cplx else "sytrd"
    trd, trd_lwork = get_lapack_funcs((name, name + "_lwork"), (a,))
    lwork, info = trd_lwork(n, lower=1)
    c, d, e, tau, info = trd(a, lower=1, lwork=int(np.real(lwork)))
    if info != 0:
        raise NumericalError(f"{name} failed with info={info}")
    lam, w = eigh_tridiagonal(d, e, lapack_driver="stemr")
    # p = Q^H e_2, applying H(0)^H, H(1)^H, ... in turn; H(i) acts on i+1..n-1
    p = np.zeros(n, dtype=c.dtype)
    p[1] = 1.0
    for i in range(n - 1):
        v = c[i + 1 :, i].copy()
        v[0] = 1.0
        seg = p[i + 1 :]
        seg -= np.conj(tau[i]) * v * np.vdot(v, seg)
    return lam, w, p


def f_of_H_entry(h, f, i: int, j: int):
    """``f(H)_ij`` from a full eigendecomposition (0-based indices)."""
    a = h.entries if isinstance(h, WignerMatrix) else np.asarray(h)
    lam, u = eigh(a)
    val = np.sum(f(lam) * u[i] * np.conj(u[j]))
    return float(val.real) if i == j or not np.iscomplexobj(val) else complex(val)


@dataclass(frozen=True)
class SampleStatistic:
    t_value: float
    s_value: complex
    f11: float
    f12: complex
    seed: int


def t_statistic(h: WignerMatrix, f: BVFunction, pred: FluctuationPrediction, sample: SpectralSample | None = None) -> SampleStatistic:
    """Centered statistics ``T_f`` and ``S_f`` of one sampled matrix."""
    if sample is None:
        sample = SpectralSample.from_matrix(h)
    rn = np.sqrt(h.n)
    f11 = sample.entry11(f)
    f12 = sample.entry12(f)
    return SampleStatistic(
        t_value=float(rn * (f11 - pred.mean) - h.xi11 * pred.xi_coeff),
        s_value=complex(rn * f12 - h.xi12 * pred.xi_coeff),
        f11=f11,
        f12=f12,
        seed=h.seed,
    )


# -- Gaussian moments and distances -----------------------------------------


def _double_factorial(k: int) -> int:
    # (k-1)!! for even k, with (-1)!! = 1
    out = 1
    for j in range(k - 1, 0, -2):
        out *= j
    return out


def complex_covariance(esq: complex, abs_sq: float) -> np.ndarray:
    """2x2 covariance of ``(Re D, Im D)`` given ``E D^2`` and ``E|D|^2``."""
    b = complex(esq)
    if abs(b) > abs_sq + _NEG_TOL:
        raise DomainError(f"|E D^2| = {abs(b):.4g} exceeds E|D|^2 = {abs_sq:.4g}")
    return 0.5 * np.array([[abs_sq + b.real, b.imag], [b.imag, abs_sq - b.real]])


def gaussian_moments(k: int, l: int = 0, variance=1.0):
    """Moments of a centered Gaussian.

    With a real ``variance`` and ``l = 0`` this is ``E G^k`` for
    ``G ~ N(0, variance)``. With ``variance = (esq, abs_sq)`` it is the mixed
    moment ``E D^k conj(D)^l`` of a complex Gaussian, summed over pairings:
    ``j`` pairs of type ``(D, conj D)`` contribute ``abs_sq`` each, the others
    ``esq`` or ``conj(esq)``.
    """
    if k < 0 or l < 0:
        raise DomainError("moment orders must be nonnegative")
    if np.ndim(variance) == 0:
        if l:
            raise DomainError("mixed moments need (esq, abs_sq)")
        v = float(variance)
        if v < 0:
            raise DomainError("variance must be nonnegative")
        return 0.0 if k % 2 else _double_factorial(k) * v ** (k // 2)
    b, a = complex(variance[0]), float(variance[1])
    complex_covariance(b, a)
    total = 0j
    for j in range(min(k, l) + 1):
        if (k - j) % 2 or (l - j) % 2:
            continue
        count = comb(k, j) * comb(l, j) * factorial(j) * _double_factorial(k - j) * _double_factorial(l - j)
        total += count * a**j * b ** ((k - j) // 2) * np.conj(b) ** ((l - j) // 2)
    return complex(total)


def levy_distance(samples, variance: float, min_samples: int = 100) -> float:
    """Levy distance between the empirical law of ``samples`` and ``N(0, variance)``.

    Bisection on ``eps`` with the defining inequalities
    ``G(x - eps) - eps <= F(x) <= G(x + eps) + eps`` checked at the jumps of
    the empirical distribution function ``F``. ``variance = 0`` is the point
    mass at 0.
    """
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n < min_samples:
        raise DomainError(f"need at least {min_samples} samples, got {n}")
    if variance < 0:
        raise DomainError("variance must be nonnegative")
    # F(s_i) counts ties, so take the last index of each run of equal values
    last = np.r_[s[1:] != s[:-1], True]
    xs, fr = s[last], (np.flatnonzero(last) + 1) / n
    fl = np.r_[0.0, fr[:-1]]  # F just below each jump

    if variance > 0:
        sd = np.sqrt(variance)
        g_right = g_left = lambda x: ndtr(x / sd)
    else:
        g_right = lambda x: (x >= 0).astype(float)
        g_left = lambda x: (x > 0).astype(float)

    def ok(eps):
        return np.all(fr <= g_right(xs + eps) + eps) and np.all(g_left(xs - eps) - eps <= fl)

    lo, hi = 0.0, 1.0
    if ok(0.0):
        return 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class MomentAccumulator:
    """Mergeable running statistics of a real sample.

    Keeps the count, the mean and central second moment (Chan's update) and the
    raw power sums up to ``order``. Merging is exact up to rounding and does not
    depend on the grouping beyond 1e-12 relative.
    """

    order: int = 6
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    power_sums: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.power_sums is None:
            self.power_sums = np.zeros(self.order + 1)

    def push(self, values) -> "MomentAccumulator":
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return self
        other = MomentAccumulator(self.order, x.size, float(x.mean()), float(((x - x.mean()) ** 2).sum()),
                                  np.array([np.sum(x**k) for k in range(self.order + 1)]))
        return self.merge(other)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.count == 0:
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        self.mean = self.mean + delta * other.count / n
        self.count = n
        self.power_sums = self.power_sums + other.power_sums
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else float("nan")

    def raw_moment(self, k: int) -> float:
        return float(self.power_sums[k] / self.count)

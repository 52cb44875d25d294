"""Semicircle law analytics.

Integrals against ``mu_sc(dx) = (1/2pi) sqrt((4 - x^2)_+) dx`` are computed in
the angle variable ``x = 2 sin(theta)``, where the measure becomes
``(2/pi) cos^2(theta) d(theta)``; this removes the square-root edge so that
Gauss-Legendre converges spectrally on each smooth piece of the integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ._quad import adaptive_gl, gauss_legendre, panel_rule
from .bvfunc import BVFunction
from .errors import DomainError, NumericalError, SingularityError

__all__ = [
    "sc_density",
    "stieltjes_m",
    "sc_integral",
    "SemicircleMoments",
    "semicircle_moments",
    "VTerms",
    "v_terms",
    "v1_sigma2",
    "mehler_kernel",
]


def sc_density(x):
    """Semicircle density ``(1/2pi) sqrt((4 - x^2)_+)``."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2 * np.pi)
    return float(out) if out.ndim == 0 else out


def stieltjes_m(z, boundary: bool = False):
    """Stieltjes transform ``m(z) = int (x - z)^{-1} mu_sc(dx)``.

    Off the real axis this is the root of ``m^2 + z m + 1 = 0`` with
    ``Im m * Im z > 0``. Real arguments in ``[-2, 2]`` are only accepted with
    ``boundary=True`` and then return the upper boundary value
    ``m(x + i0) = (-x + i sqrt(4 - x^2)) / 2``.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    on_cut = (z.imag == 0) & (np.abs(z.real) <= 2)
    if on_cut.any() and not boundary:
        raise DomainError("m(z) is not defined on [-2, 2]; pass boundary=True for m(x + i0)")
    # sqrt(z-2)*sqrt(z+2) is the branch of sqrt(z^2-4) that behaves like z at infinity
    s = np.sqrt(z - 2) * np.sqrt(z + 2)
    m = -2.0 / (z + s)
    if on_cut.any():
        x = z.real[on_cut]
        m[on_cut] = 0.5 * (-x + 1j * np.sqrt(4 - x * x))
    return complex(m[0]) if scalar else m


def _theta_edges(f: BVFunction | None) -> np.ndarray:
    pts = [-2.0, 2.0]
    if f is not None:
        pts += [b for b in f.breakpoints if -2 < b < 2]
    return np.arcsin(np.unique(np.clip(pts, -2, 2)) / 2)


_WEIGHTS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "1": lambda x: np.ones_like(x),
    "x": lambda x: x,
    "x2-1": lambda x: x * x - 1.0,
}


def sc_integral(f: BVFunction, weight: str | Callable = "1", tol: float = 1e-12) -> float:
    """``int f(x) w(x) mu_sc(dx)``.

    ``weight`` is ``"1"``, ``"x"``, ``"x2-1"`` or a vectorized callable that is
    smooth between the breakpoints of ``f``.
    """
    w = _WEIGHTS[weight] if isinstance(weight, str) else weight
    edges = _theta_edges(f)
    total = 0.0
    for t0, t1 in zip(edges[:-1], edges[1:]):

        def integrand(t):
            x = 2 * np.sin(t)
            return f.eval(x) * w(x) * (2 / np.pi) * np.cos(t) ** 2

        # evaluate at interior nodes only, so the right-continuous value at a
        # breakpoint never leaks into the neighbouring panel
        val, _ = adaptive_gl(integrand, t0, t1, tol=tol * (t1 - t0) / np.pi, initial_panels=2)
        total += float(np.real(val))
    return total


@dataclass(frozen=True)
class SemicircleMoments:
    """Quadrature table for ``mu_sc`` and the even (Catalan) moments."""

    nodes: np.ndarray
    weights: np.ndarray
    catalan: tuple[int, ...]

    def moment(self, k: int) -> float:
        if k % 2:
            return 0.0
        return float(self.catalan[k // 2])


@lru_cache(maxsize=8)
def semicircle_moments(n: int = 64, kmax: int = 20) -> SemicircleMoments:
    """Gauss-Legendre table in the angle variable, symmetric about 0."""
    t, w = gauss_legendre(n)
    theta = 0.5 * np.pi * t
    nodes = 2 * np.sin(theta)
    weights = 0.5 * np.pi * w * (2 / np.pi) * np.cos(theta) ** 2
    cat = [1]
    for k in range(1, kmax + 1):
        cat.append(cat[-1] * 2 * (2 * k - 1) // (k + 1))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SemicircleMoments(nodes, weights, tuple(cat))


def mehler_kernel(x, y, sigma2: float):
    """``(1 - s^2) / (1 - xys + (x^2 + y^2 - 2)s^2 - xys^3 + s^4)`` for ``s = sigma2``."""
    s = sigma2
    xy = x * y
    den = 1.0 - xy * s + (x * x + y * y - 2.0) * s * s - xy * s**3 + s**4
    return (1.0 - s * s) / den, den


def _tensor_rule(f: BVFunction, panels_per_piece: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    edges = _theta_edges(f)
    fine = np.concatenate(
        [np.linspace(a, b, panels_per_piece + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])] + [edges[-1:]]
    )
    t, w = panel_rule(fine, n)
    x = 2 * np.sin(t)
    return x, w * (2 / np.pi) * np.cos(t) ** 2 * f.eval(x)


_SERIES_ABOVE = 0.8
_SERIES_MAX_TERMS = 20000


def _chebyshev_coefficients(f: BVFunction, kmax: int) -> np.ndarray:
    """``c_k = int f(x) U_k(x/2) mu_sc(dx)`` for ``k < kmax``.

    With ``x = 2 cos(phi)`` this is ``(2/pi) int_0^pi f sin((k+1) phi) sin(phi) dphi``,
    taken on Gauss-Legendre panels between the breakpoints of ``f`` with enough
    nodes to resolve the highest frequency.
    """
    pts = [b for b in f.breakpoints if -2 < b < 2]
    edges = np.unique(np.concatenate([[0.0, np.pi], np.arccos(np.clip(pts, -2, 2) / 2)]))
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        # about 48 nodes per 64-point subpanel go to resolving sin((kmax+1) phi)
        m = int(np.ceil((kmax + 2) * (b - a) / 2 / 48)) + 1
        t, w = panel_rule(np.linspace(a, b, m + 1), 64)
        nodes.append(t)
        weights.append(w)
    phi = np.concatenate(nodes)
    wf = np.concatenate(weights) * (2 / np.pi) * np.sin(phi) * f.eval(2 * np.cos(phi))
    out = np.empty(kmax)
    step = max(1, (1 << 22) // phi.size)
    for k0 in range(0, kmax, step):
        k = np.arange(k0, min(kmax, k0 + step))
        out[k] = np.sin(np.outer(k + 1, phi)) @ wf
    return out


def _v1_series(f: BVFunction, s: float, tol: float) -> float:
    kmax = min(_SERIES_MAX_TERMS, int(np.ceil(np.log(tol) / np.log(abs(s)))) + 1)
    c = _chebyshev_coefficients(f, kmax)
    return float(np.sum(s ** np.arange(kmax) * c * c))


def v1_sigma2(f: BVFunction, sigma2: float, tol: float = 1e-10, max_refine: int = 7) -> float:
    """Double integral of ``f(x) f(y)`` against the sigma2 Mehler kernel.

    At ``|sigma2| = 1`` the kernel degenerates to a point mass on the diagonal
    (``sigma2 = 1``) or anti-diagonal (``sigma2 = -1``) and the limit is
    returned in closed form. For ``|sigma2| > 0.8`` the kernel is sharply
    peaked and its expansion ``sum_k sigma2^k U_k(x/2) U_k(y/2)`` in Chebyshev
    polynomials of the second kind is summed instead of the tensor quadrature.
    """
    s = float(sigma2)
    if abs(s) > 1:
        raise DomainError("|sigma2| must be at most 1")
    if s == 1.0:
        return sc_integral(f, weight=f.eval)
    if s == -1.0:
        return sc_integral(f, weight=lambda x: f.eval(-x))
    if s == 0.0:
        return sc_integral(f) ** 2
    if abs(s) > _SERIES_ABOVE:
        return _v1_series(f, s, tol)
    prev = None
    change = np.inf
    panels = 2
    for _ in range(max_refine):
        x, wf = _tensor_rule(f, panels, 16)
        k, den = mehler_kernel(x[:, None], x[None, :], s)
        if np.any(den <= 1e-300):
            raise SingularityError("Mehler kernel denominator vanished")
        val = float(wf @ k @ wf)
        if not np.isfinite(val):
            raise NumericalError("non-finite kernel integral")
        if prev is not None:
            change = abs(val - prev)
            if change <= tol * max(1.0, abs(val)):
                return val
        prev = val
        panels *= 2
    raise NumericalError(f"kernel quadrature did not converge for sigma2={s} (last change {change:.2e})")


@dataclass(frozen=True)
class VTerms:
    """Quadratic forms entering the limiting variances."""

    v1: float
    v1_sigma2: float
    v2: float
    v3: float
    v4: float
    sigma2: float


def v_terms(f: BVFunction, sigma2: float) -> VTerms:
    """All five quadratic forms of ``f`` for the given ``sigma2``."""
    if abs(sigma2) > 1:
        raise DomainError("|sigma2| must be at most 1")
    return VTerms(
        v1=sc_integral(f, weight=f.eval),
        v1_sigma2=v1_sigma2(f, sigma2),
        v2=sc_integral(f) ** 2,
        v3=sc_integral(f, "x") ** 2,
        v4=sc_integral(f, "x2-1") ** 2,
        sigma2=float(sigma2),
    )

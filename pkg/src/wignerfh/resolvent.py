"""Resolvents, minor resolvents and the fluctuation kernels X(z), Y(z).

Write ``H = [[h11, h^*], [h, H1]]`` and, one level further,
``H1 = [[h22, h2^*], [h2, H2]]`` with ``h = (h21, h1)``. Then

    G11 = 1 / (h11 - z - <h, G1 h>),        G1 = (H1 - z)^-1
    X(z) = <h, G1 h> - Tr G1 / N
    Y(z) = sqrt(N) <h1, G2 h2>,             G2 = (H2 - z)^-1

Indices are 0-based throughout. :func:`kernel_stats` evaluates these by
direct solves on the minors; :class:`KernelEvaluator` gets the same numbers
from the first two eigenvector components of ``H`` via the Schur complement
of the leading 2x2 block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh, inv, lu_factor, lu_solve

from .ensembles import WignerMatrix, minor
from .errors import NumericalError, SingularityError, SpecError
from .fluctuations import SpectralSample
from .pleijel import StieltjesSource, discrete_source
from .semicircle import stieltjes_m

__all__ = [
    "ETA_MIN",
    "ResolventQuery",
    "resolvent_entries",
    "schur_g11",
    "KernelStats",
    "kernel_stats",
    "KernelEvaluator",
    "exx_prediction",
    "eyy_predictions",
    "wick_prediction",
    "pair_partitions",
    "local_law_residuals",
    "phi_split",
    "psi_phi",
    "resolvent_source",
]

ETA_MIN = 1e-8
_SING_TOL = 1e-12


def _entries(h) -> np.ndarray:
    return h.entries if isinstance(h, WignerMatrix) else np.asarray(h)


def _check_z(z) -> complex:
    z = complex(z)
    if abs(z.imag) < ETA_MIN:
        raise SpecError(f"|Im z| must be at least {ETA_MIN}")
    return z


@dataclass(frozen=True)
class ResolventQuery:
    """Which parts of ``(H - z)^-1`` to compute.

    ``entries`` holds ``(i, j)`` pairs, ``"trace"`` or ``("row", i)``.
    """

    z: complex
    entries: tuple = ((0, 0),)

    def __post_init__(self):
        object.__setattr__(self, "z", _check_z(self.z))


def resolvent_entries(h, q: ResolventQuery) -> dict:
    """Requested resolvent entries by LU solves, one per distinct column."""
    a = _entries(h)
    n = a.shape[0]
    lu = lu_factor(a - q.z * np.eye(n), check_finite=False)
    cols: dict[int, np.ndarray] = {}

    def col(j):
        if j not in cols:
            e = np.zeros(n, dtype=complex)
            e[j] = 1.0
            x = lu_solve(lu, e, check_finite=False)
            if not np.all(np.isfinite(x)):
                raise NumericalError("singular resolvent solve")
            cols[j] = x
        return cols[j]

    out = {}
    for item in q.entries:
        if item == "trace":
            out["trace"] = complex(np.sum(1.0 / (eigvalsh(a) - q.z)))
        elif isinstance(item, tuple) and item and item[0] == "row":
            # row i of G(z) is the transpose of column i of G(z)^T = (H^T - z)^-1
            i = item[1]
            e = np.zeros(n, dtype=complex)
            e[i] = 1.0
            out[item] = lu_solve(lu, e, trans=1, check_finite=False)
        else:
            i, j = item
            out[(i, j)] = complex(col(j)[i])
    return out


def _quad_form(a_minor: np.ndarray, u: np.ndarray, v: np.ndarray, z: complex) -> complex:
    """``<u, (A - z)^-1 v>`` with the inner product conjugate-linear in ``u``."""
    n = a_minor.shape[0]
    x = lu_solve(lu_factor(a_minor - z * np.eye(n), check_finite=False), v, check_finite=False)
    return complex(np.vdot(u, x))


def schur_g11(h, z: complex) -> complex:
    """``G(z)_11`` from the Schur complement formula on the 1-minor."""
    z = _check_z(z)
    a = _entries(h)
    hat, (col,) = minor(a, [0])
    return 1.0 / (a[0, 0] - z - _quad_form(hat, col, col, z))


@dataclass(frozen=True)
class KernelStats:
    x_value: complex
    y_value: complex
    m_hat: complex


def kernel_stats(h, z: complex) -> KernelStats:
    """``X(z)``, ``Y(z)`` and ``m_hat_N(z) = Tr G1 / N`` by direct solves on the minors."""
    z = _check_z(z)
    a = _entries(h)
    n = a.shape[0]
    h1hat, (col,) = minor(a, [0])
    m_hat = complex(np.sum(1.0 / (eigvalsh(h1hat) - z))) / n
    x = _quad_form(h1hat, col, col, z) - m_hat
    h2hat, (c1, c2) = minor(a, [0, 1])
    y = np.sqrt(n) * _quad_form(h2hat, c1, c2, z)
    return KernelStats(complex(x), complex(y), m_hat)


class KernelEvaluator:
    """Fast ``G11``, ``X`` and ``Y`` at many ``z`` from one spectral sample.

    The leading 2x2 block ``B(z)`` of ``G(z)`` is read off the first two
    eigenvector components. Its inverse is ``H[:2,:2] - z - K(z)`` with
    ``K_ij = <h_i, G2 h_j>``, which gives every quadratic form in the 2-minor
    resolvent, and ``Tr G1 = Tr G - G11' / G11``.
    """

    def __init__(self, h: WignerMatrix, sample: SpectralSample | None = None):
        a = _entries(h)
        self.n = a.shape[0]
        self.h11 = a[0, 0]
        self.h21 = a[1, 0]
        self.h22 = a[1, 1]
        self.h12 = a[0, 1]
        self.sample = sample if sample is not None else SpectralSample.from_matrix(a)

    def evaluate(self, zs) -> dict[str, np.ndarray]:
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        if np.any(np.abs(zs.imag) < ETA_MIN):
            raise SpecError(f"|Im z| must be at least {ETA_MIN}")
        s = self.sample
        inv_ = 1.0 / (s.eigenvalues[None, :] - zs[:, None])
        u1, u2 = s.u1, s.u2
        b11 = inv_ @ (np.abs(u1) ** 2)
        b22 = inv_ @ (np.abs(u2) ** 2)
        b12 = inv_ @ (u1 * np.conj(u2))
        b21 = inv_ @ (u2 * np.conj(u1))
        det = b11 * b22 - b12 * b21
        # inverse of B = [[b11, b12], [b21, b22]]
        k11 = self.h11 - zs - b22 / det
        k22 = self.h22 - zs - b11 / det
        k12 = self.h12 + b12 / det
        k21 = self.h21 + b21 / det
        # K = [[c, b'], [b, a]] in the notation <h_i, G2 h_j>
        c, bp, b, a_ = k11, k12, k21, k22
        g22 = 1.0 / (self.h22 - zs - a_)
        quad = c + g22 * (bp - np.conj(self.h21)) * (b - self.h21)
        tr_g = inv_.sum(axis=1)
        dg11 = (inv_ * inv_) @ (np.abs(u1) ** 2)
        tr_g1 = tr_g - dg11 / b11
        m_hat = tr_g1 / self.n
        return {
            "g11": b11,
            "quad": quad,
            "m_hat": m_hat,
            "x": quad - m_hat,
            "y": np.sqrt(self.n) * bp,
            # sqrt(N) <h2, G2 h1> = conj Y(conj z)
            "y_swap": np.sqrt(self.n) * b,
        }

    def kernel_stats(self, z: complex) -> KernelStats:
        r = self.evaluate([z])
        return KernelStats(complex(r["x"][0]), complex(r["y"][0]), complex(r["m_hat"][0]))


# -- closed-form predictions ---------------------------------------------------


def _guard(den, label):
    if np.any(np.abs(den) < _SING_TOL):
        raise SingularityError(f"{label} denominator vanishes")
    return den


def exx_prediction(z, z2, sigma2: float, sigma4: float) -> complex:
    """Limit of ``N E[X(z) X(z2)]``."""
    m, m2 = stieltjes_m(_check_z(z)), stieltjes_m(_check_z(z2))
    p = m * m2
    d1 = _guard(1 - p, "1 - m m'")
    d2 = _guard(1 - sigma2 * p, "1 - sigma2 m m'")
    return complex(p * p / d1 + sigma2**3 * p * p / d2 + (sigma4 - 1) * p)


def eyy_predictions(z, z2, sigma2: float) -> dict[str, complex]:
    """Limits of the ``Y`` covariances.

    ``"EYY"`` is ``E[Y(z) Y(z2)]``; ``"EYYbar"`` is ``E[Y(z) conj Y(conj z2)]``,
    both in terms of ``m' = m(z2)``. ``"EYYbar_conj"`` is the same kernel written
    for ``E[Y(z) conj Y(z2)]``, i.e. with ``m' = conj m(z2)``.
    """
    m, m2 = stieltjes_m(_check_z(z)), stieltjes_m(_check_z(z2))
    p = m * m2
    pc = m * np.conj(m2)
    return {
        "EYY": complex(sigma2**2 * p / _guard(1 - sigma2 * p, "1 - sigma2 m m'")),
        "EYYbar": complex(p / _guard(1 - p, "1 - m m'")),
        "EYYbar_conj": complex(pc / _guard(1 - pc, "1 - m conj(m')")),
    }


def pair_partitions(items):
    """All perfect matchings of ``items`` as lists of pairs."""
    items = list(items)
    if not items:
        yield []
        return
    if len(items) % 2:
        return
    first = items[0]
    for k in range(1, len(items)):
        rest = items[1:k] + items[k + 1 :]
        for p in pair_partitions(rest):
            yield [(first, items[k])] + p


def wick_prediction(zs, sigma2: float, sigma4: float) -> complex:
    """Sum over pairings of products of :func:`exx_prediction`; 0 for odd length."""
    zs = list(zs)
    if len(zs) % 2:
        return 0j
    cache = {}
    total = 0j
    for match in pair_partitions(range(len(zs))):
        term = 1 + 0j
        for i, j in match:
            if (i, j) not in cache:
                cache[(i, j)] = exx_prediction(zs[i], zs[j], sigma2, sigma4)
            term *= cache[(i, j)]
        total += term
    return complex(total)


# -- diagnostics ------------------------------------------------------------------


def local_law_residuals(h, z: complex) -> tuple[float, float]:
    """``|m_N(z) - m(z)|`` and ``max_ij |G_ij - delta_ij m(z)|``."""
    z = _check_z(z)
    a = _entries(h)
    n = a.shape[0]
    g = inv(a - z * np.eye(n), check_finite=False)
    m = stieltjes_m(z)
    avg = abs(np.trace(g) / n - m)
    g[np.diag_indices(n)] -= m
    return float(avg), float(np.max(np.abs(g)))


def phi_split(h, z: complex) -> tuple[complex, complex, complex]:
    """``Phi_N = G11``, ``Phi_hat_N = 1 / (-z - m_hat_N)`` and their difference."""
    z = _check_z(z)
    ks = kernel_stats(h, z)
    phi = schur_g11(h, z)
    phi_hat = 1.0 / (-z - ks.m_hat)
    return phi, phi_hat, phi - phi_hat


def psi_phi(z, z2, n: int) -> tuple[float, float]:
    """Error-envelope quantities ``Psi`` and ``Phi`` for the pair ``(z, z2)``."""
    x, eta = complex(z).real, abs(complex(z).imag)
    x2, eta2 = complex(z2).real, abs(complex(z2).imag)
    psi = (1 / np.sqrt(eta * eta2)) * (1 / np.sqrt(eta) + 1 / np.sqrt(eta2) + 1 / np.sqrt(n * eta * eta2))
    inside = abs(x) <= 2 and abs(x2) <= 2
    phi = (eta + eta2 + (x - x2) ** 2 if inside else 0.0) + max(abs(x) - 2, 0.0) + max(abs(x2) - 2, 0.0)
    return float(psi), float(phi)


def resolvent_source(h, sample: SpectralSample | None = None) -> StieltjesSource:
    """``z -> G(z)_11``, the transform of the spectral measure of ``e_1``."""
    if sample is None:
        sample = SpectralSample.from_matrix(_entries(h))
    src = discrete_source(sample.eigenvalues, sample.weights, name="G11")
    return src

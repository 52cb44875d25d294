"""Wigner matrix ensembles with prescribed second and fourth entry moments.

Off-diagonal entries are ``h_ij = x_ij / sqrt(N)`` with ``E|x|^2 = 1``,
``E x^2 = sigma2`` and ``E|x|^4 = sigma4``. Complex families are built either
as ``a*x + i*b*y`` from independent real unit-variance draws with
``a^2 + b^2 = 1`` and ``a^2 - b^2 = sigma2``, which gives

    sigma4 = kappa (1 + sigma2^2) / 2 + (1 - sigma2^2) / 2

for a real family of kurtosis ``kappa``, or as ``r * exp(i*theta)`` with a
uniform phase and a radial law tuned to the requested ``sigma4``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import SpecError

__all__ = [
    "EnsembleSpec",
    "WignerMatrix",
    "sample_wigner",
    "builtin_specs",
    "get_spec",
    "minor",
    "trial_seed",
    "REAL_FAMILIES",
]

log = logging.getLogger(__name__)

# kurtosis E x^4 of each unit-variance real family
REAL_FAMILIES = {"gaussian": 3.0, "rademacher": 1.0, "uniform": 9.0 / 5.0}
_DIAG_LAWS = set(REAL_FAMILIES) | {"zero"}
_MOMENT_DRAWS = 10**6
_MOMENT_RTOL = 0.02


def _real_draw(rng: np.random.Generator, family: str, size) -> np.ndarray:
    if family == "gaussian":
        return rng.standard_normal(size)
    if family == "rademacher":
        return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0
    if family == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
    if family == "zero":
        return np.zeros(size)
    raise SpecError(f"unknown real family {family!r}")


@dataclass(frozen=True)
class EnsembleSpec:
    """Entry distribution of a Wigner matrix.

    Attributes
    ----------
    symmetry : {"real", "complex"}
        Real symmetric or complex Hermitian.
    off_diag_law : str
        ``"gaussian"``, ``"rademacher"`` or ``"uniform"`` (real families, also
        usable for complex matrices via the ``a*x + i*b*y`` construction), or
        ``"uniform_phase"`` (complex only).
    sigma2 : float
        ``N * E h_ij^2``; forced to 1 for real matrices.
    sigma4 : float or None
        ``N^2 * E|h_ij|^4``. Derived from the family when None; required for
        ``"uniform_phase"``.
    diag_law : str or None
        Real family of ``xi_ii = sqrt(N) h_ii``; defaults to the off-diagonal
        family (Rademacher for ``"uniform_phase"``).
    s_diag : float
        ``N * E|h_ii|^2``.
    name : str
        Label.
    """

    symmetry: str = "real"
    off_diag_law: str = "gaussian"
    sigma2: float = 1.0
    sigma4: float | None = None
    diag_law: str | None = None
    s_diag: float = 1.0
    name: str = "custom"
    check_moments: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.symmetry not in ("real", "complex"):
            raise SpecError("symmetry must be 'real' or 'complex'")
        law = self.off_diag_law
        if law not in REAL_FAMILIES and law != "uniform_phase":
            raise SpecError(f"unknown off-diagonal law {law!r}")
        if self.symmetry == "real":
            if law == "uniform_phase":
                raise SpecError("uniform_phase entries are complex")
            if self.sigma2 != 1.0:
                raise SpecError("real symmetric entries force sigma2 = 1")
        if not -1.0 <= self.sigma2 <= 1.0:
            raise SpecError("sigma2 must lie in [-1, 1]")
        if law == "uniform_phase":
            if self.sigma2 != 0.0:
                raise SpecError("uniform_phase entries have sigma2 = 0")
            if self.sigma4 is None or self.sigma4 < 1.0:
                raise SpecError("uniform_phase needs sigma4 >= 1")
        else:
            nominal = self.family_sigma4()
            if self.sigma4 is None:
                object.__setattr__(self, "sigma4", nominal)
            elif abs(self.sigma4 - nominal) > 1e-12:
                raise SpecError(f"sigma4={self.sigma4} is not attainable with {law!r} entries (gives {nominal})")
        if self.diag_law is None:
            object.__setattr__(self, "diag_law", "rademacher" if law == "uniform_phase" else law)
        if self.diag_law not in _DIAG_LAWS:
            raise SpecError(f"unknown diagonal law {self.diag_law!r}")
        if self.s_diag < 0:
            raise SpecError("s_diag must be nonnegative")
        if self.check_moments:
            _verified_moments(self)

    def family_sigma4(self) -> float:
        kappa = REAL_FAMILIES[self.off_diag_law]
        if self.symmetry == "real":
            return kappa
        s2 = self.sigma2 * self.sigma2
        return kappa * (1 + s2) / 2 + (1 - s2) / 2

    @property
    def a_b(self) -> tuple[float, float]:
        """Real and imaginary weights of the ``a*x + i*b*y`` construction."""
        return np.sqrt((1 + self.sigma2) / 2), np.sqrt((1 - self.sigma2) / 2)

    def draw_offdiag(self, rng: np.random.Generator, size) -> np.ndarray:
        """Unit-variance off-diagonal variables ``x = sqrt(N) h``."""
        law = self.off_diag_law
        if self.symmetry == "real":
            return _real_draw(rng, law, size)
        if law == "uniform_phase":
            radius = self._radial(rng, size)
            return radius * np.exp(2j * np.pi * rng.random(size))
        a, b = self.a_b
        x = _real_draw(rng, law, size)
        y = _real_draw(rng, law, size)
        return a * x + 1j * b * y

    def _radial(self, rng: np.random.Generator, size) -> np.ndarray:
        # r^2 ~ Gamma(k, 1/k): E r^2 = 1, E r^4 = 1 + 1/k
        if self.sigma4 == 1.0:
            return np.ones(size)
        k = 1.0 / (self.sigma4 - 1.0)
        return np.sqrt(rng.gamma(k, 1.0 / k, size))

    def draw_diag(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.sqrt(self.s_diag) * _real_draw(rng, self.diag_law, size)

    def _check_moments(self):
        rng = np.random.default_rng(20240611)
        x = self.draw_offdiag(rng, _MOMENT_DRAWS)
        a2 = np.abs(x) ** 2
        checks = {
            "E|x|^2": (a2.mean(), 1.0),
            "E x^2": ((x * x).mean().real, self.sigma2),
            "E|x|^4": ((a2 * a2).mean(), self.sigma4),
        }
        for label, (emp, nominal) in checks.items():
            if abs(emp - nominal) > _MOMENT_RTOL * max(1.0, abs(nominal)):
                raise SpecError(f"{self.name}: empirical {label}={emp:.4f} inconsistent with {nominal}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("check_moments")
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "EnsembleSpec":
        d = dict(d)
        if "name" in d and set(d) == {"name"} | (set(d) & {"sigma4"}):
            return get_spec(d["name"], **({"sigma4": d["sigma4"]} if "sigma4" in d else {}))
        try:
            return cls(**d)
        except TypeError as exc:
            raise SpecError(f"bad ensemble fields: {exc}") from None


@lru_cache(maxsize=64)
def _verified_moments(spec: EnsembleSpec) -> bool:
    spec._check_moments()
    return True


@dataclass(frozen=True, eq=False)
class WignerMatrix:
    """One sampled matrix with the realized ``xi_11 = sqrt(N) h_11`` and ``xi_12``."""

    entries: np.ndarray
    xi11: float
    xi12: complex
    spec: EnsembleSpec
    seed: int

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)


def sample_wigner(spec: EnsembleSpec, n: int, seed: int) -> WignerMatrix:
    """Sample an ``n x n`` Wigner matrix; deterministic in ``(spec, n, seed)``."""
    if n < 2:
        raise SpecError("dimension must be at least 2")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(n)
    x = spec.draw_offdiag(rng, (n, n))
    upper = np.triu(x, 1) * scale
    h = upper + upper.conj().T
    diag = spec.draw_diag(rng, n) * scale
    h[np.diag_indices(n)] = diag
    h.setflags(write=False)
    return WignerMatrix(
        entries=h,
        xi11=float(np.sqrt(n) * diag[0]),
        xi12=complex(np.sqrt(n) * h[0, 1]),
        spec=spec,
        seed=int(seed),
    )


def trial_seed(master_seed: int, *keys: int) -> int:
    """64-bit seed for one trial, a hash of ``(master_seed, *keys)``."""
    state = np.random.SeedSequence([int(master_seed) & (2**64 - 1), *map(int, keys)]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def builtin_specs(uniform_phase_sigma4: float = 1.5) -> list[EnsembleSpec]:
    """GOE, GUE, real Rademacher and complex uniform-phase ensembles."""
    return [
        EnsembleSpec("real", "gaussian", 1.0, name="goe"),
        EnsembleSpec("complex", "gaussian", 0.0, name="gue"),
        EnsembleSpec("real", "rademacher", 1.0, name="rademacher"),
        EnsembleSpec("complex", "uniform_phase", 0.0, sigma4=uniform_phase_sigma4, name="uniform_phase"),
    ]


def get_spec(name: str, **params) -> EnsembleSpec:
    """Builtin ensemble by name; ``uniform_phase`` accepts ``sigma4``."""
    name = name.lower()
    if name == "uniform_phase":
        return builtin_specs(params.pop("sigma4", 1.5))[3]
    if params:
        raise SpecError(f"ensemble {name!r} takes no parameters")
    for spec in builtin_specs():
        if spec.name == name:
            return spec
    raise SpecError(f"unknown ensemble {name!r}")


def minor(h, remove: Iterable[int]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Delete rows and columns ``remove`` (0-based).

    Returns the minor and, for each removed index ``i``, the column
    ``h[:, i]`` restricted to the surviving indices, in the order given.
    """
    a = h.entries if isinstance(h, WignerMatrix) else np.asarray(h)
    remove = list(remove)
    n = a.shape[0]
    if not remove or len(set(remove)) != len(remove) or any(not 0 <= i < n for i in remove):
        raise SpecError(f"invalid index set {remove} for dimension {n}")
    keep = np.setdiff1d(np.arange(n), remove)
    return a[np.ix_(keep, keep)], [a[keep, i] for i in remove]


def spectral_radius_ok(eigenvalues: np.ndarray, bound: float = 3.0) -> bool:
    """``max |lambda| <= bound``; logs a diagnostic on violation."""
    r = float(np.max(np.abs(eigenvalues)))
    if r > bound:
        log.warning("spectral radius %.4f exceeds %.1f", r, bound)
        return False
    return True

"""Experiment configuration read from a TOML file.

Only ``ensemble`` and ``functions`` are required::

    master_seed = 7
    n_values = [200, 500]
    trials = 1000
    checks = ["mean", "variance", "moments"]

    [ensemble]
    name = "goe"

    [[functions]]
    kind = "indicator"
    a = -1.0
    b = 1.0
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from ..bvfunc import BVFunction, from_descriptor
from ..ensembles import EnsembleSpec
from ..errors import ConfigError, SpecError
from ..pleijel import ContourParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALL_CHECKS = ("identity", "mean", "variance", "offdiag", "moments", "levy", "pleijel", "exx", "local_law", "spectrum")
DEFAULT_CHECKS = ("identity", "mean", "variance", "offdiag", "moments", "levy", "spectrum")
DEFAULT_KERNEL_POINTS = ((0.0, 1.0), (0.5, 0.5), (-0.5, 0.5))


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``kernel_points`` are ``(Re z, Im z)`` pairs for the X/Y covariance
    checks. ``wick_indices`` picks the four kernel points used for the Wick
    check. ``rate_c`` is the constant in front of the ``N^(-1/2)`` or
    ``N^(-1/6)`` rate term of the moment checks.
    """

    ensemble: Mapping[str, Any]
    functions: tuple[Mapping[str, Any], ...]
    n_values: tuple[int, ...] = (200,)
    trials: int = 200
    checks: tuple[str, ...] = DEFAULT_CHECKS
    master_seed: int = 0
    contour: Mapping[str, Any] = field(default_factory=dict)
    kernel_points: tuple[tuple[float, float], ...] = DEFAULT_KERNEL_POINTS
    wick_indices: tuple[int, ...] = (0, 0, 1, 2)
    local_law_x: float = 0.0
    k_max: int = 6
    rate_c: float = 5.0
    batches: int = 20
    levy_threshold: float = 0.05
    pleijel_every: int = 100
    keep_samples: bool = True
    output: str = "out"
    threads: int = 1

    def __post_init__(self):
        if not self.functions:
            raise ConfigError("functions: at least one function is required")
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        ns = tuple(int(n) for n in self.n_values)
        if not ns or list(ns) != sorted(ns) or len(set(ns)) != len(ns):
            raise ConfigError("n_values: must be a nonempty strictly ascending list")
        if ns[0] < 2:
            raise ConfigError("n_values: dimensions must be at least 2")
        object.__setattr__(self, "n_values", ns)
        bad = [c for c in self.checks if c not in ALL_CHECKS]
        if bad:
            raise ConfigError(f"checks: unknown {bad}; known {list(ALL_CHECKS)}")
        object.__setattr__(self, "checks", tuple(dict.fromkeys(self.checks)))
        if not 1 <= self.k_max <= 6:
            raise ConfigError("k_max: must be between 1 and 6")
        if self.threads < 1:
            raise ConfigError("threads: must be at least 1")
        pts = tuple((float(a), float(b)) for a, b in self.kernel_points)
        if any(b == 0 for _, b in pts):
            raise ConfigError("kernel_points: imaginary parts must be nonzero")
        object.__setattr__(self, "kernel_points", pts)
        if len(self.wick_indices) % 2 or any(not 0 <= i < len(pts) for i in self.wick_indices):
            raise ConfigError("wick_indices: even number of valid kernel point indices required")
        object.__setattr__(self, "functions", tuple(dict(f) for f in self.functions))
        object.__setattr__(self, "ensemble", dict(self.ensemble))
        object.__setattr__(self, "contour", dict(self.contour))
        # fail early on bad ensemble or function tables
        try:
            self.spec()
        except SpecError as exc:
            raise ConfigError(f"ensemble: {exc}") from None
        for i, d in enumerate(self.functions):
            try:
                from_descriptor(d)
            except SpecError as exc:
                raise ConfigError(f"functions[{i}]: {exc}") from None

    def spec(self) -> EnsembleSpec:
        return EnsembleSpec.from_dict(self.ensemble)

    def bv_functions(self) -> list[BVFunction]:
        return [from_descriptor(d) for d in self.functions]

    def contour_params(self, n: int, lipschitz: bool) -> ContourParams:
        c = dict(self.contour)
        if "eta0" in c or "M" in c:
            base = ContourParams.for_matrix(n, lipschitz)
            c.setdefault("eta0", base.eta0)
            c.setdefault("M", base.M)
            return ContourParams(**c)
        return ContourParams.for_matrix(n, lipschitz, **c)

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(kw)
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = [list(x) if isinstance(x, tuple) else x for x in v]
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown field(s) {unknown}")
        for key in ("ensemble", "functions"):
            if key not in d:
                raise ConfigError(f"{key}: required field missing")
        if isinstance(d["ensemble"], str):
            d["ensemble"] = {"name": d["ensemble"]}
        for key in ("functions", "n_values", "checks", "kernel_points", "wick_indices"):
            if key in d:
                if not isinstance(d[key], (list, tuple)):
                    raise ConfigError(f"{key}: expected a list")
                d[key] = tuple(tuple(x) if isinstance(x, list) else x for x in d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Parse a TOML experiment file; errors name the file, line or field."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None

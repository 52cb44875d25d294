"""Deterministic parallel Monte Carlo over trials.

Trial ``t`` at dimension ``n`` uses the seed ``trial_seed(master_seed, n, t)``,
so its outcome does not depend on scheduling. Trials run on a thread pool
with BLAS pinned to one thread; results are collected in trial order and
every reduction runs over trial-ordered arrays.
"""

from __future__ import annotations

import logging
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError
from threadpoolctl import threadpool_limits

from .. import __version__
from ..bvfunc import FLAT
from ..ensembles import sample_wigner, trial_seed
from ..errors import NumericalError
from ..fluctuations import FluctuationPrediction, SpectralSample, levy_distance, predict, t_statistic
from ..pleijel import pleijel_integrate
from ..resolvent import KernelEvaluator, eyy_predictions, exx_prediction, local_law_residuals, resolvent_source, wick_prediction
from .compare import CheckResult, compare_moments, mean_se, rate_term, variance_se
from .config import ExperimentConfig

__all__ = ["RunResult", "run_experiment", "SCHEMA_VERSION", "analyse"]

log = logging.getLogger(__name__)

SCHEMA_VERSION = "wignerfh.run/1"
_MAX_FAIL_FRACTION = 1e-3
_RADIUS = 3.0
_IDENTITY_TOL = 1e-10
_LOCAL_LAW_QUANTILE = 0.95


@dataclass
class RunResult:
    """Checks, per-(n, f) summaries and optionally the per-trial samples.

    ``runtime`` holds timing and host metadata; it is excluded from
    :meth:`canonical` so that reruns compare byte for byte.
    """

    config: dict
    checks: list[CheckResult]
    summaries: list[dict]
    samples: dict[int, dict] = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)
    version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def canonical(self) -> bytes:
        from .output import to_json

        return to_json(self, include_runtime=False).encode()


# -- per-trial work -------------------------------------------------------------


def _is_identity(desc: dict) -> bool:
    kind = desc.get("kind")
    return kind == "x" or (kind == "monomial" and int(desc.get("k", 0)) == 1)


@dataclass(frozen=True)
class _Context:
    cfg: ExperimentConfig
    n: int
    spec: object
    functions: list
    preds: list[FluctuationPrediction]
    zs: np.ndarray
    local_law_zs: np.ndarray


def _trial(ctx: _Context, t: int) -> dict:
    cfg, n = ctx.cfg, ctx.n
    seed = trial_seed(cfg.master_seed, n, t)
    h = sample_wigner(ctx.spec, n, seed)
    rec = {"seed": seed, "xi11": h.xi11, "xi12": h.xi12, "failed": False}
    try:
        sample = SpectralSample.from_matrix(h)
    except (LinAlgError, NumericalError) as exc:
        log.warning("trial %d at n=%d failed: %s", t, n, exc)
        rec["failed"] = True
        return rec
    rec["radius"] = sample.spectral_radius()
    rec["stats"] = [t_statistic(h, f, p, sample) for f, p in zip(ctx.functions, ctx.preds)]
    checks = cfg.checks
    if "exx" in checks:
        r = KernelEvaluator(h, sample).evaluate(ctx.zs)
        rec["x"], rec["y"], rec["y_swap"] = r["x"], r["y"], r["y_swap"]
    if "local_law" in checks:
        rec["local_law"] = np.array([local_law_residuals(h, z) for z in ctx.local_law_zs])
    if "pleijel" in checks and t % cfg.pleijel_every == 0:
        src = resolvent_source(h, sample)
        lam, u = np.linalg.eigh(h.entries)
        w = np.abs(u[0]) ** 2
        rows = []
        for f in ctx.functions:
            res = pleijel_integrate(src, f, cfg.contour_params(n, f.has_bounded_derivative))
            rows.append((res.value, res.error_budget, float(np.dot(f(lam), w))))
        rec["pleijel"] = rows
    return rec


def _run_n(cfg: ExperimentConfig, n: int, spec, functions, preds, pool) -> list[dict]:
    zs = np.array([complex(a, b) for a, b in cfg.kernel_points])
    ll = np.array([complex(cfg.local_law_x, 1.0), complex(cfg.local_law_x, n**-0.5)])
    ctx = _Context(cfg, n, spec, functions, preds, zs, ll)
    if pool is None:
        return [_trial(ctx, t) for t in range(cfg.trials)]
    return list(pool.map(lambda t: _trial(ctx, t), range(cfg.trials)))


# -- aggregation -------------------------------------------------------------------


def _collect(records: list[dict], functions, cfg: ExperimentConfig) -> dict:
    ok = [r for r in records if not r["failed"]]
    out = {
        "seed": [r["seed"] for r in records],
        "failed": [r["failed"] for r in records],
        "xi11": np.array([r["xi11"] for r in ok]),
        "xi12": np.array([r["xi12"] for r in ok]),
        "radius": np.array([r["radius"] for r in ok]),
        "trial": np.array([i for i, r in enumerate(records) if not r["failed"]]),
        "f": {},
    }
    for j, f in enumerate(functions):
        out["f"][f.name] = {
            "t": np.array([r["stats"][j].t_value for r in ok]),
            "s": np.array([r["stats"][j].s_value for r in ok]),
            "f11": np.array([r["stats"][j].f11 for r in ok]),
            "f12": np.array([r["stats"][j].f12 for r in ok]),
        }
    for key in ("x", "y", "y_swap", "local_law"):
        if ok and key in ok[0]:
            out[key] = np.array([r[key] for r in ok])
    pl = [(i, r["pleijel"]) for i, r in enumerate(records) if "pleijel" in r]
    if pl:
        out["pleijel"] = {"trial": [i for i, _ in pl], "rows": np.array([rows for _, rows in pl])}
    return out


def _check(checks, name, n, f_name, label, est, se, pred, tol, source, passed):
    checks.append(CheckResult(name, n, f_name, label, est, float(se), pred, float(tol), source, bool(passed)))


def analyse(cfg: ExperimentConfig, n: int, data: dict, functions, preds) -> tuple[list[CheckResult], list[dict]]:
    """Checks and summaries for one dimension from collected samples."""
    checks: list[CheckResult] = []
    summaries: list[dict] = []
    enabled = cfg.checks
    trials = len(data["seed"])
    n_ok = data["radius"].size
    n_fail = trials - n_ok
    _check(checks, "failures", n, "", "eigensolver", n_fail / trials, 0.0, 0.0, _MAX_FAIL_FRACTION,
           "abort threshold 0.1% of trials", n_fail / trials <= _MAX_FAIL_FRACTION)
    if "spectrum" in enabled:
        frac = float(np.mean(data["radius"] > _RADIUS)) if n_ok else 0.0
        applies = n >= 500
        _check(checks, "spectrum", n, "", "max|lambda|>3", frac, 0.0, 0.0, _MAX_FAIL_FRACTION,
               "fraction of trials, enforced for n >= 500", frac <= _MAX_FAIL_FRACTION or not applies)
    inside = data["radius"] <= FLAT
    for f, p, desc in zip(functions, preds, cfg.functions):
        d = data["f"][f.name]
        t, s = d["t"], d["s"]
        rate = rate_term(n, p.regularity_flag, cfg.rate_c)
        rate_src = f"3 SE + {cfg.rate_c:g} N^-{'1/2' if p.regularity_flag else '1/6'}"
        summary = {"n": n, "f_name": f.name, "trials": int(t.size), "prediction": p.to_dict()}
        if t.size:
            summary.update(
                mean_t=float(t.mean()), var_t=float(t.var(ddof=1)) if t.size > 1 else 0.0,
                var_t_se=variance_se(t), mean_abs_s2=float(np.mean(np.abs(s) ** 2)),
                mean_s2=complex(np.mean(s * s)),
            )
        if "identity" in enabled and _is_identity(desc):
            dev = float(max(np.max(np.abs(t[inside]), initial=0.0), np.max(np.abs(s[inside]), initial=0.0)))
            _check(checks, "identity", n, f.name, "max|T|,|S| in flat region", dev, 0.0, 0.0, _IDENTITY_TOL,
                   "exact algebraic identity", dev <= _IDENTITY_TOL)
        if t.size < 2:
            summaries.append(summary)
            continue
        if "mean" in enabled:
            f11 = d["f11"]
            se = mean_se(f11)
            tol = 3 * se + rate / np.sqrt(n)
            _check(checks, "mean", n, f.name, "E f(H)_11", float(f11.mean()), se, p.mean, tol,
                   "3 SE + rate / sqrt(N)", abs(f11.mean() - p.mean) <= tol)
        if "variance" in enabled:
            se = variance_se(t)
            v = float(t.var(ddof=1))
            _check(checks, "variance", n, f.name, "Var T_f", v, se, p.var_diag, 3 * se + rate, rate_src,
                   abs(v - p.var_diag) <= 3 * se + rate)
        if "offdiag" in enabled:
            a2 = np.abs(s) ** 2
            se = mean_se(a2)
            _check(checks, "offdiag", n, f.name, "E|S_f|^2", float(a2.mean()), se, p.abs_sq, 3 * se + rate, rate_src,
                   abs(a2.mean() - p.abs_sq) <= 3 * se + rate)
            s2 = s * s
            se = mean_se(s2)
            _check(checks, "offdiag", n, f.name, "E S_f^2", complex(s2.mean()), se, complex(p.var_offdiag_sq),
                   3 * se + rate, rate_src, abs(s2.mean() - p.var_offdiag_sq) <= 3 * se + rate)
        if "moments" in enabled:
            for v in compare_moments(t, p.var_diag, cfg.k_max, n, p.regularity_flag, cfg.rate_c, cfg.batches):
                _check(checks, "moments", n, f.name, f"E T^{v.k}", v.empirical, v.se, v.predicted, v.tolerance,
                       "3 batch-means SE + rate", v.passed)
        if "levy" in enabled and t.size >= 100:
            dist = levy_distance(t, p.var_diag)
            # DKW 95% band on the Kolmogorov distance, which dominates the Levy distance
            tol = cfg.levy_threshold + 1.36 / np.sqrt(t.size)
            summary["levy"] = dist
            _check(checks, "levy", n, f.name, "Levy distance", dist, 0.0, 0.0, tol,
                   "threshold + DKW 95% band", dist <= tol)
        summaries.append(summary)
    if "pleijel" in enabled and "pleijel" in data:
        rows = data["pleijel"]["rows"]
        for j, f in enumerate(functions):
            err = np.abs(rows[:, j, 0] - rows[:, j, 2])
            worst = float(np.max(err / rows[:, j, 1]))
            _check(checks, "pleijel", n, f.name, "max |pleijel - f(H)_11| / budget", worst, 0.0, 0.0, 1.0,
                   "computed error budget", worst <= 1.0)
    if "exx" in enabled and "x" in data:
        checks += _kernel_checks(cfg, n, data)
    if "local_law" in enabled and "local_law" in data:
        ll = data["local_law"]
        etas = (1.0, n**-0.5)
        for i, eta in enumerate(etas):
            env_avg = n**0.1 / (n * eta)
            env_ent = n**0.1 / np.sqrt(n * eta)
            for col, env, lab in ((0, env_avg, "avg"), (1, env_ent, "entry")):
                frac = float(np.mean(ll[:, i, col] <= env))
                _check(checks, "local_law", n, "", f"{lab} eta={eta:.4g}", frac, 0.0, _LOCAL_LAW_QUANTILE, 0.0,
                       "95% of trials within N^0.1 envelope", frac >= _LOCAL_LAW_QUANTILE)
    return checks, summaries


def _mean_check(checks, n, label, samples, pred, source="3 SE"):
    est = complex(np.mean(samples))
    se = mean_se(samples)
    _check(checks, "exx", n, "", label, est, se, complex(pred), 3 * se, source, abs(est - pred) <= 3 * se)


def _kernel_checks(cfg: ExperimentConfig, n: int, data: dict) -> list[CheckResult]:
    spec = cfg.spec()
    s2, s4 = spec.sigma2, spec.sigma4
    zs = [complex(a, b) for a, b in cfg.kernel_points]
    x = np.sqrt(n) * data["x"]
    y, ysw = data["y"], data["y_swap"]
    out: list[CheckResult] = []
    for i, z in enumerate(zs):
        _mean_check(out, n, f"E X({z:g})", x[:, i], 0.0)
        _mean_check(out, n, f"E Y({z:g})", y[:, i], 0.0)
    for i in range(len(zs)):
        for j in range(i, len(zs)):
            zi, zj = zs[i], zs[j]
            _mean_check(out, n, f"N E X({zi:g}) X({zj:g})", x[:, i] * x[:, j], exx_prediction(zi, zj, s2, s4))
            e = eyy_predictions(zi, zj, s2)
            _mean_check(out, n, f"E Y({zi:g}) Y({zj:g})", y[:, i] * y[:, j], e["EYY"])
            # conj Y(conj z') = sqrt(N) <h2, G2(z') h1>
            _mean_check(out, n, f"E Y({zi:g}) conj Y(conj {zj:g})", y[:, i] * ysw[:, j], e["EYYbar"])
            _mean_check(out, n, f"E Y({zi:g}) conj Y({zj:g})", y[:, i] * np.conj(y[:, j]), e["EYYbar_conj"])
    idx = list(cfg.wick_indices)
    prod = np.prod(x[:, idx], axis=1)
    _mean_check(out, n, "Wick N^2 E X X X X " + ",".join(str(i) for i in idx), prod,
                wick_prediction([zs[i] for i in idx], s2, s4))
    return out


# -- driver -------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> RunResult:
    """Run every dimension of ``cfg`` and evaluate the enabled checks."""
    threads = threads or cfg.threads
    spec = cfg.spec()
    functions = cfg.bv_functions()
    names = [f.name for f in functions]
    if len(set(names)) != len(names):
        raise NumericalError(f"function names must be unique, got {names}")
    preds = [predict(f, spec.sigma2, spec.sigma4) for f in functions]
    start = time.perf_counter()
    checks, summaries, samples = [], [], {}
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        with threadpool_limits(1):
            for n in cfg.n_values:
                t0 = time.perf_counter()
                records = _run_n(cfg, n, spec, functions, preds, pool)
                fails = sum(r["failed"] for r in records)
                if fails > _MAX_FAIL_FRACTION * cfg.trials:
                    raise NumericalError(f"{fails} of {cfg.trials} trials failed at n={n}")
                data = _collect(records, functions, cfg)
                c, s = analyse(cfg, n, data, functions, preds)
                checks += c
                summaries += s
                if cfg.keep_samples:
                    samples[n] = data
                log.info("n=%d: %d trials in %.1fs", n, cfg.trials, time.perf_counter() - t0)
    finally:
        if pool is not None:
            pool.shutdown()
    runtime = {
        "elapsed_s": time.perf_counter() - start,
        "threads": threads,
        "package_version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }
    return RunResult(cfg.to_dict(), checks, summaries, samples, runtime)

"""Command line entry point.

::

    wignerfh predict --function indicator --ensemble goe
    wignerfh run --config experiment.toml --threads 4 --out results
    wignerfh pleijel-check --config experiment.toml
    wignerfh local-law --ensemble gue --n 1000 --trials 200
    wignerfh covariance --config experiment.toml --seed 3

Every subcommand that runs Monte Carlo exits with status 0 iff all enabled
checks pass, 1 if some check fails and 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from ..bvfunc import builtin_library, from_descriptor, indicator
from ..ensembles import get_spec
from ..errors import WignerFHError
from ..fluctuations import predict
from ..pleijel import ContourParams, pleijel_integrate, pleijel_interval_mass, point_mass_source, semicircle_source
from .config import ExperimentConfig, load_config
from .output import emit_outputs, format_summary
from .runner import run_experiment

__all__ = ["main", "build_parser", "exact_pleijel_battery"]

log = logging.getLogger("wignerfh")


def _function_arg(text: str) -> dict:
    """``indicator`` or ``kind=indicator,a=-1,b=0.5`` into a descriptor."""
    if "=" not in text:
        return {"kind": text, "name": text}
    desc = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        try:
            desc[key.strip()] = float(val)
        except ValueError:
            desc[key.strip()] = val.strip()
    return desc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wignerfh", description="Fluctuations of f(H) entries of Wigner matrices.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("predict", help="print the predicted limiting law of T_f and S_f")
    pr.add_argument("--function", "-f", default="indicator", type=_function_arg,
                    help="builtin name or kind=...,param=... (default: indicator)")
    pr.add_argument("--ensemble", default=None, help="take sigma2 and sigma4 from a named ensemble")
    pr.add_argument("--sigma2", type=float, default=1.0)
    pr.add_argument("--sigma4", type=float, default=3.0)

    def mc(name, help_text, config_required=False):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=config_required, help="TOML experiment file")
        s.add_argument("--seed", type=int, default=None, help="override master_seed")
        s.add_argument("--threads", type=int, default=None, help="worker threads")
        s.add_argument("--out", default=None, help="output directory")
        if not config_required:
            s.add_argument("--ensemble", default=None, help="ensemble name when no config is given")
            s.add_argument("--n", type=int, nargs="+", default=None, help="matrix dimensions")
            s.add_argument("--trials", type=int, default=None)
        return s

    mc("run", "full Monte Carlo experiment", config_required=True)
    mc("pleijel-check", "Pleijel inversion against exact measures and sampled spectral measures")
    mc("local-law", "averaged and entrywise local law envelopes")
    mc("covariance", "X/Y kernel covariances and the Wick check")
    return p


_DEFAULTS = {
    "pleijel-check": dict(ensemble="goe", n_values=[200], trials=10, pleijel_every=1, checks=["pleijel"],
                          functions=[{"kind": k, "name": k} for k in builtin_library()]),
    "local-law": dict(ensemble="goe", n_values=[1000], trials=200, checks=["local_law"],
                      functions=[{"kind": "x2", "name": "x2"}]),
    "covariance": dict(ensemble="goe", n_values=[500], trials=1000, checks=["exx"],
                       functions=[{"kind": "x2", "name": "x2"}]),
}


def _experiment(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.command != "run":
            over = {k: v for k, v in _DEFAULTS[args.command].items() if k in ("checks", "pleijel_every")}
            cfg = cfg.replace(**over)
    else:
        cfg = ExperimentConfig.from_dict(_DEFAULTS[args.command])
    over = {}
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.threads is not None:
        over["threads"] = args.threads
    if args.out is not None:
        over["output"] = args.out
    if getattr(args, "ensemble", None):
        over["ensemble"] = {"name": args.ensemble}
    if getattr(args, "n", None):
        over["n_values"] = sorted(args.n)
    if getattr(args, "trials", None):
        over["trials"] = args.trials
    return cfg.replace(**over) if over else cfg


def exact_pleijel_battery() -> list[tuple[str, float, float, float]]:
    """``(label, value, expected, budget)`` for measures with known integrals."""
    lib = builtin_library()
    rows = []
    bump = lib["bump"]
    res = pleijel_integrate(point_mass_source(0.0), bump, ContourParams(eta0=1e-4, M=1e3))
    rows.append(("delta_0, bump", res.value, float(bump(0.0)), res.error_budget))
    sc = semicircle_source()
    params = ContourParams(eta0=1e-4, M=1e3)
    res = pleijel_integrate(sc, lib["x"], params)
    rows.append(("mu_sc, x", res.value, 0.0, res.error_budget))
    res = pleijel_integrate(sc, indicator(-2.0, 0.0), params)
    rows.append(("mu_sc, 1[-2,0]", res.value, 0.5, res.error_budget))
    for a, b, want in ((-2.0, 2.0, 1.0), (0.0, 2.0, 0.5), (-1.0, 1.0, 1 / 3 + np.sqrt(3) / (2 * np.pi))):
        res = pleijel_interval_mass(sc, a, b, params)
        rows.append((f"mu_sc[{a:g},{b:g}]", res.value, want, res.error_budget))
    return rows


def _cmd_predict(args) -> int:
    if args.ensemble:
        spec = get_spec(args.ensemble)
        s2, s4 = spec.sigma2, spec.sigma4
    else:
        s2, s4 = args.sigma2, args.sigma4
    pred = predict(from_descriptor(args.function), s2, s4)
    print(json.dumps(pred.to_dict(), indent=1, default=lambda c: [c.real, c.imag]))
    return 0


def _cmd_monte_carlo(args) -> int:
    ok = True
    if args.command == "pleijel-check":
        for label, value, want, budget in exact_pleijel_battery():
            good = abs(value - want) <= budget
            ok &= good
            print(f"{'PASS' if good else 'FAIL'} exact {label}: {value:.6g} vs {want:.6g} (budget {budget:.3g})")
    cfg = _experiment(args)
    result = run_experiment(cfg)
    paths = emit_outputs(result, cfg.output)
    sys.stdout.write(format_summary(result))
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0 if ok and result.passed else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "predict":
            return _cmd_predict(args)
        return _cmd_monte_carlo(args)
    except WignerFHError as exc:
        print(f"wignerfh: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

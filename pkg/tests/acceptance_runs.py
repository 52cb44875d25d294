"""Long Monte Carlo runs behind the acceptance suite, cached on disk.

Each run is keyed by a hash of its configuration and ``CACHE_EPOCH``; bump
the epoch whenever a numerical change should invalidate old results. The
cache lives in ``<repo>/.acceptance_cache`` unless ``WIGNERFH_CACHE`` is set.

Run ``python tests/acceptance_runs.py [name ...]`` to fill the cache ahead of
``pytest -m acceptance``.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from pathlib import Path

from wignerfh.harness.config import ExperimentConfig
from wignerfh.harness.output import from_json, to_json
from wignerfh.harness.runner import RunResult, run_experiment

CACHE_EPOCH = 1
ROOT = Path(__file__).resolve().parent.parent
CACHE = Path(os.environ.get("WIGNERFH_CACHE", ROOT / ".acceptance_cache"))

GENERAL_F = ({"kind": "indicator", "a": -1.0, "b": 1.0, "name": "indicator"}, {"kind": "abs", "name": "abs"})
X2 = {"kind": "x2", "name": "x2"}
BUILTINS = tuple({"kind": k, "name": k} for k in ("indicator", "abs", "x", "x2", "x3", "bump", "ramp"))
STATS = ("identity", "mean", "variance", "offdiag", "moments", "levy", "spectrum")


def _pleijel(ens: str, n: int) -> dict:
    return dict(ensemble=ens, functions=BUILTINS, n_values=[n], trials=50, checks=["pleijel"], pleijel_every=1,
                contour={"eta0": n ** (-2 / 3), "M": float(n)}, master_seed=5)


RUNS: dict[str, dict] = {
    # criteria 2, 3 (n = 1000) and 6
    "goe_1000": dict(ensemble="goe", functions=(X2,) + GENERAL_F, n_values=[1000], trials=5000,
                     checks=STATS + ("exx",), master_seed=1),
    "gue_1000": dict(ensemble="gue", functions=(X2,) + GENERAL_F, n_values=[1000], trials=5000,
                     checks=STATS + ("exx",), master_seed=2),
    # criteria 3 and 4
    "goe_500_2000": dict(ensemble="goe", functions=GENERAL_F, n_values=[500, 2000], trials=3000,
                         checks=STATS, master_seed=3),
    "gue_500_2000": dict(ensemble="gue", functions=GENERAL_F, n_values=[500, 2000], trials=3000,
                         checks=STATS, master_seed=4),
    # criterion 5
    "pleijel_goe_200": _pleijel("goe", 200),
    "pleijel_goe_1000": _pleijel("goe", 1000),
    "pleijel_gue_200": _pleijel("gue", 200),
    "pleijel_gue_1000": _pleijel("gue", 1000),
    # criterion 7
    "local_law_goe": dict(ensemble="goe", functions=(X2,), n_values=[1000], trials=200, checks=["local_law"],
                          master_seed=6),
    "local_law_gue": dict(ensemble="gue", functions=(X2,), n_values=[1000], trials=200, checks=["local_law"],
                          master_seed=7),
}

# cheapest first so short criteria become available early
ORDER = ("pleijel_goe_200", "pleijel_gue_200", "local_law_goe", "local_law_gue", "pleijel_goe_1000",
         "pleijel_gue_1000", "goe_1000", "gue_1000", "goe_500_2000", "gue_500_2000")


def config(name: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(RUNS[name])


def cache_path(name: str) -> Path:
    blob = json.dumps({"epoch": CACHE_EPOCH, "config": config(name).to_dict()}, sort_keys=True)
    return CACHE / f"{name}-{hashlib.sha256(blob.encode()).hexdigest()[:16]}.json"


def load_or_run(name: str, threads: int = 1) -> RunResult:
    path = cache_path(name)
    if path.exists():
        return from_json(path.read_text())
    result = run_experiment(config(name), threads=threads)
    CACHE.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(to_json(result))
    tmp.replace(path)
    return result


def main(argv: list[str]) -> int:
    names = argv or list(ORDER)
    threads = int(os.environ.get("WIGNERFH_THREADS", os.cpu_count() or 1))
    for name in names:
        t0 = time.perf_counter()
        cached = cache_path(name).exists()
        res = load_or_run(name, threads)
        state = "cached" if cached else f"ran in {time.perf_counter() - t0:.0f}s"
        print(f"{name}: {state}, {len(res.failed())} failed checks", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

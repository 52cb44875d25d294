"""Result files: versioned JSON, per-trial CSV and a text summary."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import ConfigError, WignerFHError
from .compare import CheckResult
from .runner import SCHEMA_VERSION, RunResult

__all__ = ["to_json", "from_json", "emit_outputs", "load_result", "CSV_COLUMNS", "format_summary"]

CSV_COLUMNS = ("n", "trial", "f_name", "t_value", "re_s", "im_s", "f11", "re_f12", "im_f12", "seed")


def _encode(obj):
    if isinstance(obj, complex):
        return {"__complex__": [obj.real, obj.imag]}
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"__array__": "complex", "shape": list(obj.shape),
                    "re": obj.real.ravel().tolist(), "im": obj.imag.ravel().tolist()}
        return {"__array__": obj.dtype.kind, "shape": list(obj.shape), "data": obj.ravel().tolist()}
    if isinstance(obj, np.generic):
        return _encode(obj.item())
    if isinstance(obj, CheckResult):
        return _encode(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__complex__" in obj:
            re, im = obj["__complex__"]
            return complex(re, im)
        if "__array__" in obj:
            kind, shape = obj["__array__"], obj["shape"]
            if kind == "complex":
                a = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
            else:
                a = np.array(obj["data"], dtype={"f": float, "i": np.int64, "u": np.uint64, "b": bool}[kind])
            return a.reshape(shape)
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def to_json(result: RunResult, include_runtime: bool = True) -> str:
    doc = {
        "version": result.version,
        "config": result.config,
        "checks": result.checks,
        "summaries": result.summaries,
        "samples": {str(n): d for n, d in result.samples.items()},
    }
    if include_runtime:
        doc["runtime"] = result.runtime
    return json.dumps(_encode(doc), sort_keys=True, indent=1)


def from_json(text: str) -> RunResult:
    doc = json.loads(text)
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported result schema {version!r}, expected {SCHEMA_VERSION!r}")
    doc = _decode(doc)
    checks = [CheckResult(**c) for c in doc["checks"]]
    samples = {int(n): d for n, d in doc["samples"].items()}
    return RunResult(doc["config"], checks, doc["summaries"], samples, doc.get("runtime", {}), version)


def load_result(path) -> RunResult:
    path = Path(path)
    try:
        return from_json(path.read_text())
    except OSError as exc:
        raise WignerFHError(f"{path}: {exc.strerror}") from None


def _csv_rows(result: RunResult):
    for n, data in sorted(result.samples.items()):
        trials = data["trial"]
        seeds = data["seed"]
        for name, d in data["f"].items():
            for k, t in enumerate(trials):
                s, f12 = complex(d["s"][k]), complex(d["f12"][k])
                yield (n, int(t), name, repr(float(d["t"][k])), repr(s.real), repr(s.imag),
                       repr(float(d["f11"][k])), repr(f12.real), repr(f12.imag), int(seeds[int(t)]))


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.5g}{v.imag:+.5g}i"
    if isinstance(v, float):
        return f"{v:.5g}"
    return str(v)


def format_summary(result: RunResult) -> str:
    lines = [f"schema {result.version}", f"ensemble {result.config.get('ensemble')}",
             f"checks {len(result.checks)}, failed {len(result.failed())}"]
    for c in result.checks:
        verdict = "PASS" if c.passed else "FAIL"
        se = f" +- {c.se:.3g}" if c.se else ""
        lines.append(f"{verdict} {c.check:<9} n={c.n:<5} {c.f_name:<10} {c.label}: {_fmt(c.estimate)}{se} "
                     f"vs {_fmt(c.predicted)} (tol {c.tolerance:.3g}, {c.tolerance_source})")
    lines.append("ALL PASS" if result.passed else "SOME CHECKS FAILED")
    return "\n".join(lines) + "\n"


def emit_outputs(result: RunResult, out_dir, stem: str = "result") -> dict[str, Path]:
    """Write ``<stem>.json``, ``<stem>_trials.csv`` and ``<stem>_summary.txt``."""
    out = Path(out_dir)
    paths = {"json": out / f"{stem}.json", "csv": out / f"{stem}_trials.csv", "summary": out / f"{stem}_summary.txt"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths["json"].write_text(to_json(result))
        with paths["csv"].open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            w.writerows(_csv_rows(result))
        paths["summary"].write_text(format_summary(result))
    except OSError as exc:
        raise WignerFHError(f"cannot write {exc.filename or out}: {exc.strerror}") from None
    return paths

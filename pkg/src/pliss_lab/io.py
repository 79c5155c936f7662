"""Deterministic CSV / JSON emission and the run manifest."""
from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np
import scipy


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(obj), fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    return path


def versions():
    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "pliss_lab": __version__}


def result_dir(out, result, multiple):
    if not multiple:
        return Path(out)
    tag = result.experiment if result.model is None else f"{result.experiment}-{result.model}"
    return Path(out) / tag


def write_results(cfg, results):
    """Write every table and report, plus manifest.json; returns written paths."""
    written = []
    multiple = len(results) > 1
    for r in results:
        d = result_dir(cfg.out, r, multiple)
        for name, (header, rows) in sorted(r.tables.items()):
            written.append(write_csv(d / name, header, rows))
        for name, obj in sorted(r.reports.items()):
            written.append(write_json(d / name, obj))
        written.append(write_csv(d / "criteria.csv", ["criterion", "passed", "detail"],
                                 [[c.name, c.passed, json.dumps(jsonable(c.detail), sort_keys=True)]
                                  for c in r.criteria]))
    manifest = {
        "config": cfg.as_dict(),
        "seed": int(cfg.seed),
        "versions": versions(),
        "runs": [
            {
                "experiment": r.experiment,
                "model": r.model,
                "params": r.params,
                "calibrated_constants": r.calibration,
                "criteria": {c.name: bool(c.passed) for c in r.criteria},
            }
            for r in results
        ],
        "passed": all(r.passed for r in results),
    }
    written.append(write_json(Path(cfg.out) / "manifest.json", manifest))
    return written

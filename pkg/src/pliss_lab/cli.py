"""Command line: ``python -m pliss_lab.cli run --experiment NAME [...]``.

Exit codes: 0 when every criterion passes, 1 when one fails (its name is
printed), 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, NUMERIC_KEYS, ConfigError, ExperimentConfig, load_config_file
from .models import MODELS
from .parallel import default_jobs

FLOAT_KEYS = {"epsilon", "a", "a_prime", "a_pp", "gamma"}


def build_parser():
    ap = argparse.ArgumentParser(prog="pliss-lab", description="SRB construction laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--model", choices=sorted(MODELS))
    r.add_argument("--config", metavar="PATH")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", metavar="DIR")
    r.add_argument("--jobs", type=int)
    r.add_argument("--self-test", action="store_true", default=None)
    for key in NUMERIC_KEYS:
        flag = "--" + key.replace("_", "-")
        if key == "resolution":
            r.add_argument(flag, type=int, nargs="+", dest=key)
        else:
            r.add_argument(flag, type=float if key in FLOAT_KEYS else int, dest=key)
    return ap


def config_from_args(args):
    data = {}
    if args.config is not None:
        data = load_config_file(args.config)
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
    for key in ("experiment", "model", "seed", "out", "jobs"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    if args.self_test:
        data["self_test"] = True
    params = dict(data.get("params", {}) or {})
    for key in NUMERIC_KEYS:
        v = getattr(args, key)
        if v is not None:
            if key == "resolution" and len(v) == 1:
                v = v[0]
            params[key] = v
            data.pop(key, None)
    data["params"] = params
    data.setdefault("jobs", default_jobs())
    return ExperimentConfig.from_mapping(data, require_all=args.config is not None)


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    from .experiments import run
    from .io import write_results

    results = run(cfg)
    write_results(cfg, results)
    failing = []
    for r in results:
        for c in r.criteria:
            print(f"{r.experiment}{'' if r.model is None else '/' + r.model} {c.line()}")
            if not c.passed:
                failing.append(f"{r.experiment}:{c.name}")
    if failing:
        print("failing criteria: " + ", ".join(failing), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line driver.

    atomkernel <certify|recover|stability|sweep> --config PATH [--jobs N] [--assert] [--out DIR]

Writes ``results.json``, ``results.csv`` and ``run-manifest.json`` into the
output directory. Exit codes: 0 success, 1 runtime failure, 2 invalid
configuration, 3 failed assertion (with ``--assert``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .errors import AtomKernelError
from .scenario import PIPELINES, SCHEMA, config_hash, run_scenario, sweep_expand

CSV_COLUMNS = [
    "id",
    "seed",
    "s",
    "delta_T",
    "support_err",
    "weight_err",
    "unmatched_mass",
    "tv_value",
    "tv_true",
    "residual",
    "dual_sup",
    "converged",
    "cond",
    "interp_residual",
    "nu_norm",
    "offgrid_sup",
    "near_margin",
    "far_margin",
    "hessian_ok",
    "lam",
    "delta",
    "C_upper",
    "bound_rhs",
    "bound_rhs_upper",
    "observed_mass",
    "bound_margin",
    "satisfied",
    "ok",
    "error",
]


class ConfigError(Exception):
    pass


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the JSON node at ``path``."""
    pos = 0
    found = None
    for key in path:
        if isinstance(key, str):
            i = text.find(f'"{key}"', pos)
            if i < 0:
                break
            pos = i + 1
            found = i
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(map(str, e.absolute_path)) or "<root>"
            ln = _line_of(text, list(e.absolute_path))
            prefix = f"{path}:{ln}" if ln else path
            lines.append(f"{prefix}: {where}: {e.message}")
        raise ConfigError("\n".join(lines))
    return cfg


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in CSV_COLUMNS])
    return buf.getvalue()


def _run_one(args):
    idx, pipeline, sc = args
    try:
        out = run_scenario(pipeline, sc)
        out["row"] = {"id": idx, **out["row"]}
        out["error"] = None
    except AtomKernelError as exc:
        out = {"row": {"id": idx, "seed": sc.get("seed"), "error": str(exc)}, "detail": {}, "ok": False, "error": str(exc)}
    return out


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="atomkernel", description="Sparse recovery experiments in kernel spaces.")
    p.add_argument("command", choices=[*PIPELINES, "sweep"])
    p.add_argument("--config", required=True, help="scenario config (JSON)")
    p.add_argument("--jobs", type=int, default=1, help="parallel scenarios")
    p.add_argument("--assert", dest="check", action="store_true", help="exit 3 if any scenario fails its checks")
    p.add_argument("--out", default=None, help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        env_seed = os.environ.get("ATOMKERNEL_SEED")
        if env_seed is not None:
            try:
                cfg["seed"] = int(env_seed)
            except ValueError as exc:
                raise ConfigError(f"ATOMKERNEL_SEED must be an integer, got {env_seed!r}") from exc
        if args.command == "sweep":
            pipeline = cfg.get("pipeline", "recover")
            scenarios = sweep_expand(cfg)
        else:
            pipeline = args.command
            base = {k: v for k, v in cfg.items() if k != "sweep"}
            base.setdefault("seed", 0)
            scenarios = [base]
    except (ConfigError, AtomKernelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return 2

    out_dir = Path(args.out or cfg.get("output_dir") or "results")
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(i, pipeline, sc) for i, sc in enumerate(scenarios)]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            outs = list(ex.map(_run_one, tasks))
    else:
        outs = [_run_one(t) for t in tasks]

    rows = [o["row"] for o in outs]
    results = {
        "command": args.command,
        "pipeline": pipeline,
        "scenarios": [
            {"id": i, "seed": sc.get("seed"), "ok": o["ok"], "error": o["error"], "row": o["row"], **o["detail"]}
            for i, (sc, o) in enumerate(zip(scenarios, outs))
        ],
    }
    manifest = {
        "config_hash": config_hash(cfg),
        "command": args.command,
        "pipeline": pipeline,
        "versions": {
            "atomkernel": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "scenarios": [{"id": i, "seed": sc.get("seed"), "config": sc} for i, sc in enumerate(scenarios)],
    }
    (out_dir / "results.json").write_text(json.dumps(results, indent=1, sort_keys=True, default=_json_default) + "\n")
    (out_dir / "results.csv").write_text(_rows_csv(rows))
    (out_dir / "run-manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    errors = [o["error"] for o in outs if o["error"]]
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    if errors and len(scenarios) == 1:
        return 1
    if args.check and not all(o["ok"] for o in outs):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

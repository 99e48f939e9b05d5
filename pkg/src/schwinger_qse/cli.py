"""Command-line experiment runner.

Subcommands: ``model-info``, ``sweep``, ``resources``, ``fit``. Configuration
is a flat YAML mapping; any key can be overridden by an environment variable
``SCHWINGER_QSE_<KEY>`` (value parsed as YAML, e.g. ``SCHWINGER_QSE_BUDGETS="[1e6, 1e8]"``).

Exit codes: 0 success, 2 configuration error, 3 capacity error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import SweepPoint, best_median_curve, campaign_curves, extrapolate_requirement, fit
from .krylov import OverflowGuardError
from .model import CapacityError, ModelParams, build_pauli_hamiltonian, exact_ground_energy, neel_index
from .model import GAUGED_CAP, build_gauged_hamiltonian
from .pipeline import SOLVERS, SWEEP_COLUMNS, prepare_problem, run_cell
from .resources import (PROCESSORS, SWEEP_COLUMNS as COST_COLUMNS, CostOptions, cost_sweep_rows,
                        hardware_runtime, load_processors)

SCHEMA_VERSION = 1
ENV_PREFIX = "SCHWINGER_QSE_"

DEFAULTS = {
    "n_sites": 8,
    "mu": 1.5,
    "x": 0.5,
    "m": None,
    "truncation": "paper_default",
    "scale": None,
    "solver": "pqse",
    "D": [2, 3, 4, 5, 6],
    "d_cap": None,
    "budgets": [1e4, 1e6, 1e8],
    "seed": 0,
    "instances": 100,
    "toffoli_policy": "all_to_all_one_ancilla",
    "eps_alpha": 1.0,
    "phases_in": "G_tilde",
    "n_grid": [4, 8, 16, 32, 64, 100, 128, 256, 512, 1000],
    "targets": [1e-2, 1e-4, 1e-6],
    "processors": None,
    "inputs": None,
}
RUN_ONLY_KEYS = {"out", "workers"}


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_config(path: str | None, overrides: dict | None = None, environ=None) -> dict:
    """Merge defaults, the YAML file, ``SCHWINGER_QSE_*`` env vars and CLI overrides (in that order)."""
    cfg = dict(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a key-value mapping")
        for key in loaded:
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
        cfg.update(loaded)
    environ = os.environ if environ is None else environ
    for name, raw in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower()
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r} from environment variable {name}")
            cfg[key] = yaml.safe_load(raw)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    try:
        cfg["instances"] = int(cfg["instances"])
        cfg["seed"] = int(cfg["seed"])
        cfg["budgets"] = [float(b) for b in _as_list(cfg["budgets"])]
        cfg["D"] = [int(d) for d in _as_list(cfg["D"])]
        cfg["n_grid"] = [int(n) for n in _as_list(cfg["n_grid"])]
        cfg["targets"] = [float(t) for t in _as_list(cfg["targets"])]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc
    if cfg["instances"] < 1:
        raise ConfigError("instances must be >= 1")
    if any(b <= 0 for b in cfg["budgets"]):
        raise ConfigError("budgets must be strictly positive")
    if cfg["solver"] not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}")
    if any(d < 1 for d in cfg["D"]):
        raise ConfigError("D values must be >= 1")


def config_digest(cfg: dict) -> str:
    material = {k: v for k, v in sorted(cfg.items()) if k not in RUN_ONLY_KEYS}
    return hashlib.sha256(json.dumps(material, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _header(cfg: dict) -> str:
    return f"# schema_version={SCHEMA_VERSION} config_digest={config_digest(cfg)} seed_base={cfg['seed']}\n"


def _params(cfg: dict, N: int | None = None) -> ModelParams:
    try:
        return ModelParams(
            N=int(N if N is not None else _as_list(cfg["n_sites"])[0]),
            mu=float(cfg["mu"]),
            x=float(cfg["x"]),
            m=cfg["m"],
            truncation=cfg["truncation"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cost_options(cfg: dict) -> CostOptions:
    try:
        return CostOptions(cfg["toffoli_policy"], float(cfg["eps_alpha"]), cfg["phases_in"],
                           "appendix" if cfg["truncation"] == "appendix" else "paper_default")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: Path, columns, rows, header: str):
    with open(path, "w", newline="") as fh:
        fh.write(header)
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _fmt(v) for k, v in r.items()})


def _write_manifest(out: Path, cfg: dict, command: str, files: list[str]):
    manifest = {
        "command": command,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "config_digest": config_digest(cfg),
        "seed_base": cfg["seed"],
        "instance_range": [0, cfg["instances"] - 1],
        "files": files,
    }
    with open(out / f"manifest_{command}.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)


# ---------------------------------------------------------------- commands

def cmd_model_info(cfg: dict, out=None) -> dict:
    out = sys.stdout if out is None else out
    p = _params(cfg)
    terms = build_pauli_hamiltonian(p)
    report = {
        "N": p.N,
        "m": p.m,
        "Lambda": p.link_dim,
        "pauli_terms": len(terms),
        "explicit_qubits": p.n_qubits,
        "gauged_dimension": 2**p.N,
        "neel_index": neel_index(p.N),
    }
    if p.N <= GAUGED_CAP:
        op = build_gauged_hamiltonian(p, sector="balanced")
        gs = exact_ground_energy(p, op)
        report.update(sector_dimension=op.dimension, neel_energy=gs.free_energy,
                      ground_energy=gs.energy, E_int=gs.interaction_energy, oracle=gs.method)
    else:
        n_up = (p.N - sum((-1) ** n for n in range(1, p.N + 1))) // 2
        report.update(sector_dimension=math.comb(p.N, n_up), E_int="n/a (above capacity)")
    for k, v in report.items():
        print(f"{k}: {v}", file=out)
    return report


def _sweep_task(args):
    problem, solver, D, budget, seed, instances, d_cap = args
    return (D, budget), run_cell(problem, solver, D, budget, seed, instances, d_cap)


def cmd_sweep(cfg: dict, out_dir: Path, workers: int = 1, noiseless: bool = False) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    header = _header(dict(cfg, noiseless=True) if noiseless else cfg)
    solver = "qse" if noiseless else cfg["solver"]
    budgets = [None] if noiseless else cfg["budgets"]
    instances = [0] if noiseless else list(range(cfg["instances"]))
    Ds = sorted(cfg["D"])
    partial = out_dir / "sweep.partial.csv"
    final = out_dir / "sweep.csv"
    results = {}
    with open(partial, "w", newline="") as pfh:
        pfh.write(header)
        pw = csv.DictWriter(pfh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        pw.writeheader()
        for N in _as_list(cfg["n_sites"]):
            p = _params(cfg, N)
            try:
                problem = prepare_problem(p, 4 * max(Ds) + 2, cfg["scale"])
            except OverflowGuardError as exc:
                raise NumericalFailure(str(exc)) from exc
            tasks = [(problem, solver, D, b, cfg["seed"], instances, cfg["d_cap"])
                     for b in budgets for D in Ds]
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    futures = [pool.submit(_sweep_task, t) for t in tasks]
                    for fut in as_completed(futures):
                        key, rows = fut.result()
                        results[(p.N,) + key] = rows
                        pw.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
                        pfh.flush()
            else:
                for t in tasks:
                    key, rows = _sweep_task(t)
                    results[(p.N,) + key] = rows
                    pw.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
                    pfh.flush()
    order = sorted(results, key=lambda k: (k[0], math.inf if k[2] is None else k[2], k[1]))
    _write_csv(final, SWEEP_COLUMNS, [r for k in order for r in results[k]], header)
    partial.unlink()
    _write_manifest(out_dir, cfg, "sweep", [final.name])
    return final


def cmd_resources(cfg: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    procs = load_processors(cfg["processors"]) if cfg["processors"] else PROCESSORS
    base = _cost_options(cfg)
    options = [CostOptions(tp, base.eps_alpha, ph, base.truncation)
               for ph in ("G_tilde", "U")
               for tp in ("all_to_all_multi_ancilla", "all_to_all_one_ancilla", "linear_nearest_neighbour")]
    rows = cost_sweep_rows(cfg["n_grid"], options)
    from .resources import GateCost

    for r in rows:
        for name, spec in procs.items():
            key = "runtime_" + name.replace(" ", "_").replace("-", "_")
            r[key] = (hardware_runtime(GateCost(cnot_gates=r["cnot"]), spec)["seconds"]
                      if r["cnot"] != "" else "")
    columns = COST_COLUMNS + ["runtime_" + n.replace(" ", "_").replace("-", "_") for n in procs]
    path = out_dir / "resources.csv"
    _write_csv(path, columns, rows, _header(cfg))
    _write_manifest(out_dir, cfg, "resources", [path.name])
    return path


FIT_COLUMNS = ["N", "kind", "chi", "lambda", "chi_se", "lambda_se", "cov", "r2", "n_points",
               "target", "requirement", "requirement_se", "campaign_t", "campaign_t_with_rot"]


def read_sweep_points(paths) -> list[SweepPoint]:
    points = []
    for path in paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(line for line in fh if not line.startswith("#")):
                err = float(row["frac_error"]) if row["frac_error"] not in ("", None) else math.inf
                budget = float(row["budget"])
                D = int(row["D_or_Dmax"])
                points.append(SweepPoint(int(row["N"]), budget, err, None, D, row["status"]))
    return points


def cmd_fit(cfg: dict, out_dir: Path, inputs) -> Path:
    if not inputs:
        raise ConfigError("fit needs at least one sweep CSV (config key 'inputs' or --input)")
    points = read_sweep_points(inputs)
    if not points:
        raise ConfigError("fit input contains no sweep rows")
    by_N = defaultdict(list)
    for pt in points:
        by_N[pt.N].append(pt)
    options = _cost_options(cfg)
    rows = []
    call_fits = {}
    for N in sorted(by_N):
        pts = by_N[N]
        noiseless = all(math.isinf(p.control) for p in pts)
        try:
            if noiseless:
                model = fit([SweepPoint(N, p.D, p.frac_error, None, p.D, p.status) for p in pts],
                            "loglinear_in_D")
            else:
                model = fit([p for p in best_median_curve(pts) if math.isfinite(p.frac_error)],
                            "loglog_in_calls")
                call_fits[N] = model
        except ValueError as exc:
            rows.append({"N": N, "kind": "error", "chi": str(exc)})
            continue
        for target in cfg["targets"]:
            row = {"N": N, "kind": model.kind, "chi": model.chi, "lambda": model.lam,
                   "chi_se": model.chi_se, "lambda_se": model.lam_se, "cov": model.cov,
                   "r2": model.r2, "n_points": model.n_points, "target": target}
            try:
                req = extrapolate_requirement(model, target)
                row.update(requirement=req["value"], requirement_se=req["se"])
            except ValueError as exc:
                row.update(requirement="", requirement_se=str(exc))
            rows.append(row)
    if call_fits:
        camp = {(r["N"], r["target"]): r for r in _safe_campaign(call_fits, cfg["targets"], options)}
        for row in rows:
            c = camp.get((row["N"], row.get("target")))
            if c:
                row.update(campaign_t=c["t_gates"], campaign_t_with_rot=c["t_with_rotations"])
    path = out_dir / "fit.csv"
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(path, FIT_COLUMNS, rows, _header(cfg))
    _write_manifest(out_dir, cfg, "fit", [path.name])
    for row in rows:
        print(", ".join(f"{k}={row[k]}" for k in ("N", "kind", "chi", "target", "requirement") if k in row))
    return path


def _safe_campaign(call_fits, targets, options):
    usable = {N: f for N, f in call_fits.items() if f.chi < 0}
    if not usable:
        return []
    return campaign_curves(usable, targets, options)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schwinger-qse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("model-info", "sweep", "resources", "fit"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--out", default="results", help="output directory")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None, help="seed base (overrides config)")
        sp.add_argument("--noiseless", action="store_true", help="exact moments, plain QSE")
        if name == "fit":
            sp.add_argument("--input", action="append", default=None, help="sweep CSV (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"seed": args.seed})
        out = Path(args.out)
        if args.command == "model-info":
            cmd_model_info(cfg)
        elif args.command == "sweep":
            print(cmd_sweep(cfg, out, max(1, args.workers), args.noiseless))
        elif args.command == "resources":
            print(cmd_resources(cfg, out))
        else:
            print(cmd_fit(cfg, out, args.input or cfg["inputs"]))
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except (NumericalFailure, OverflowGuardError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

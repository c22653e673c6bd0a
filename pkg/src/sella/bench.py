"""Experiment configuration, orchestration, and CSV/JSON result emission.

A benchmark cell is one (dims, seed, method) triple.  Cells run concurrently
(`SELLA_THREADS` caps the pool, 0 = auto) and are assembled in deterministic
key order, so identical configs produce identical CSV bytes up to the
elapsed_ns column.  Failing cells are recorded in the summary and never abort
their siblings.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError
from .geometry import BregmanGenerator
from .growth import compute_growth_moduli
from .problems import kkt_solution_set, make_random_quadratic
from .solver import (GdaSteps, StopRule, contraction_factor, default_gda_step,
                     derive_params, lyapunov_check, run)

CSV_HEADER = "method,theta,seed,n,m,p,q,k,residual_rel,dist_sq,lyapunov,elapsed_ns"

_CONFIG_DEFAULTS = {
    "coupling_std": 5.0,
    "max_iters": 100000,
    "rel_tol": 1e-8,
    "monitors": True,
    "growth_condition": "auto",
    "oracle_max_dim": 600,
    "desk_dim_limit": 64,
    "out": None,
}


@dataclass(frozen=True)
class MethodSpec:
    name: str                      # "gda" | "gapd"
    thetas: tuple = ()             # gapd only
    step_x: Optional[float] = None  # gda overrides
    step_y: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    dims: tuple                    # of (n, m, p, q)
    seeds: tuple
    methods: tuple                 # of MethodSpec
    coupling_std: float = 5.0
    max_iters: int = 100000
    rel_tol: float = 1e-8
    monitors: bool = True
    growth_condition: str = "auto"
    oracle_max_dim: int = 600
    desk_dim_limit: int = 64
    out: Optional[str] = None


@dataclass(frozen=True)
class ResultRow:
    method: str
    theta: Optional[float]
    seed: int
    n: int
    m: int
    p: int
    q: int
    k: int
    residual_rel: float
    dist_sq: Optional[float]
    lyapunov: Optional[float]
    elapsed_ns: int


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _expect(obj, path, types, message):
    if not isinstance(obj, types):
        _fail(path, message)
    return obj


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate the JSON experiment schema; unknown keys are rejected."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}")
    _expect(obj, "<root>", dict, "config must be a JSON object")

    known = {"dims", "seeds", "methods"} | set(_CONFIG_DEFAULTS)
    for key in obj:
        if key not in known:
            raise ConfigError(f"unknown key {key!r}")

    dims_in = _expect(obj.get("dims"), "dims", list, "required list of [n,m,p,q]")
    if not dims_in:
        _fail("dims", "must be nonempty")
    dims = []
    for i, d in enumerate(dims_in):
        _expect(d, f"dims[{i}]", list, "must be [n, m, p, q]")
        if len(d) != 4 or not all(isinstance(v, int) and v > 0 for v in d):
            _fail(f"dims[{i}]", "must be four positive integers")
        dims.append(tuple(d))

    seeds_in = _expect(obj.get("seeds"), "seeds", list, "required list of integers")
    if not seeds_in:
        _fail("seeds", "must be nonempty")
    for i, s in enumerate(seeds_in):
        if not isinstance(s, int):
            _fail(f"seeds[{i}]", "must be an integer")

    methods_in = _expect(obj.get("methods"), "methods", list, "required list")
    if not methods_in:
        _fail("methods", "must be nonempty")
    methods = []
    for i, mth in enumerate(methods_in):
        if isinstance(mth, str):
            mth = {"name": mth}
        _expect(mth, f"methods[{i}]", dict, "must be a name or an object")
        name = mth.get("name")
        if name == "gda":
            extra = set(mth) - {"name", "step_x", "step_y"}
            if extra:
                _fail(f"methods[{i}]", f"unknown key {extra.pop()!r}")
            for fld in ("step_x", "step_y"):
                v = mth.get(fld)
                if v is not None and not (isinstance(v, (int, float)) and v > 0):
                    _fail(f"methods[{i}].{fld}", "must be a positive number")
            methods.append(MethodSpec("gda", step_x=mth.get("step_x"),
                                      step_y=mth.get("step_y")))
        elif name == "gapd":
            extra = set(mth) - {"name", "theta"}
            if extra:
                _fail(f"methods[{i}]", f"unknown key {extra.pop()!r}")
            thetas = mth.get("theta")
            if not isinstance(thetas, list) or not thetas:
                _fail(f"methods[{i}].theta", "must be a nonempty list")
            for th in thetas:
                if not isinstance(th, (int, float)) or not 0.0 <= th <= 1.0:
                    _fail(f"methods[{i}].theta", f"value {th!r} must lie in [0, 1]")
            methods.append(MethodSpec("gapd", thetas=tuple(float(t) for t in thetas)))
        else:
            _fail(f"methods[{i}].name", f"unknown method {name!r}")

    cfg = dict(_CONFIG_DEFAULTS)
    for key in _CONFIG_DEFAULTS:
        if key in obj:
            cfg[key] = obj[key]
    if not (isinstance(cfg["rel_tol"], (int, float)) and 0.0 < cfg["rel_tol"] < 1.0):
        _fail("rel_tol", "must lie in (0, 1)")
    if not (isinstance(cfg["max_iters"], int) and cfg["max_iters"] >= 0):
        _fail("max_iters", "must be a nonnegative integer")
    if not isinstance(cfg["monitors"], bool):
        _fail("monitors", "must be a boolean")
    if cfg["growth_condition"] not in ("qfg", "qgg", "auto"):
        _fail("growth_condition", "must be 'qfg', 'qgg', or 'auto'")
    if not (isinstance(cfg["coupling_std"], (int, float)) and cfg["coupling_std"] > 0):
        _fail("coupling_std", "must be positive")
    for fld in ("oracle_max_dim", "desk_dim_limit"):
        if not (isinstance(cfg[fld], int) and cfg[fld] >= 0):
            _fail(fld, "must be a nonnegative integer")
    if cfg["out"] is not None and not isinstance(cfg["out"], str):
        _fail("out", "must be a string path")
    return ExperimentConfig(dims=tuple(dims), seeds=tuple(seeds_in),
                            methods=tuple(methods),
                            coupling_std=float(cfg["coupling_std"]),
                            max_iters=cfg["max_iters"],
                            rel_tol=float(cfg["rel_tol"]),
                            monitors=cfg["monitors"],
                            growth_condition=cfg["growth_condition"],
                            oracle_max_dim=int(cfg["oracle_max_dim"]),
                            desk_dim_limit=int(cfg["desk_dim_limit"]),
                            out=cfg["out"])


# ---------------------------------------------------------------------------
# experiment loop
# ---------------------------------------------------------------------------

def _thin_indices(ks: np.ndarray):
    keep = (ks <= 100) | (ks % 10 == 0)
    keep[-1] = True
    return np.nonzero(keep)[0]


def _method_label(name: str, theta) -> str:
    return name if theta is None else f"{name}[theta={theta:g}]"


def _n_workers() -> int:
    raw = os.environ.get("SELLA_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(os.cpu_count() or 1, 8)
    return n


def _prepare_context(dims, seed, cfg: ExperimentConfig):
    n, m, p, q = dims
    problem = make_random_quadratic(n, m, p, q, seed=seed,
                                    coupling_std=cfg.coupling_std)
    solset = None
    oracle_err = None
    if cfg.monitors and n + m <= cfg.oracle_max_dim:
        try:
            solset = kkt_solution_set(problem)
        except NumericalError as e:
            oracle_err = str(e)
    moduli = None
    moduli_err = None
    try:
        moduli, _, _ = compute_growth_moduli(problem, solset)
    except (NumericalError, ValueError) as e:
        moduli_err = str(e)
    return problem, solset, moduli, oracle_err, moduli_err


def _run_cell(ctx, dims, seed, name, theta, spec, cfg: ExperimentConfig):
    problem, solset, moduli, oracle_err, moduli_err = ctx
    n, m, p, q = dims
    euclid = BregmanGenerator.euclidean()
    cell = {"method": name, "theta": theta, "seed": seed,
            "dims": list(dims), "status": "ok"}
    if name == "gapd":
        if moduli is None:
            cell["status"] = "error"
            cell["error"] = f"growth moduli unavailable: {moduli_err}"
            return [], cell
        try:
            method = derive_params(problem.smoothness, moduli, theta,
                                   condition=cfg.growth_condition)
        except NumericalError as e:
            cell["status"] = "error"
            cell["error"] = str(e)
            return [], cell
        cell["alpha"] = method.alpha
        cell["varsigma"] = method.varsigma
        cell["condition"] = method.condition
    else:
        step = spec.step_x or default_gda_step(problem.smoothness)
        method = GdaSteps(step_x=step, step_y=spec.step_y or step)
        cell["step"] = step

    z0 = np.zeros(problem.dim_x + problem.dim_y)
    try:
        trace = run(problem, euclid, euclid, method, z0,
                    StopRule(cfg.max_iters, cfg.rel_tol),
                    monitor=solset if cfg.monitors else None)
    except NumericalError as e:
        cell["status"] = "error"
        cell["error"] = str(e)
        return [], cell

    cell["iters_to_tol"] = trace.iterations_to(cfg.rel_tol)
    series = trace.lyapunov if np.any(np.isfinite(trace.lyapunov)) else trace.residuals ** 2
    cell["contraction_factor"] = contraction_factor(series, trace.ks)
    if name == "gapd" and solset is not None and cfg.monitors:
        cell["lyapunov_max_violation"] = lyapunov_check(trace, method)
    if oracle_err:
        cell["oracle_error"] = oracle_err

    rel = trace.rel_residuals()
    rows = []
    for i in _thin_indices(trace.ks):
        rows.append(ResultRow(
            method=name, theta=theta, seed=seed, n=n, m=m, p=p, q=q,
            k=int(trace.ks[i]), residual_rel=float(rel[i]),
            dist_sq=None if not np.isfinite(trace.dist_sq[i]) else float(trace.dist_sq[i]),
            lyapunov=None if not np.isfinite(trace.lyapunov[i]) else float(trace.lyapunov[i]),
            elapsed_ns=int(trace.elapsed_ns[i])))
    return rows, cell


def run_experiment(cfg: ExperimentConfig, full: bool = False):
    """Run every (dims, seed, method) cell; returns (rows, summary).

    Dims beyond the desk limit are skipped unless `full` is set.  Rows are
    sorted by (method, theta, seed, dims, k); the summary carries per-cell
    and per-method aggregates.
    """
    active_dims = []
    skipped = []
    for dims in cfg.dims:
        if not full and dims[0] + dims[1] > cfg.desk_dim_limit:
            skipped.append(list(dims))
        else:
            active_dims.append(dims)

    jobs = []
    for dims in active_dims:
        for seed in cfg.seeds:
            for spec in cfg.methods:
                if spec.name == "gda":
                    jobs.append((dims, seed, "gda", None, spec))
                else:
                    for th in spec.thetas:
                        jobs.append((dims, seed, "gapd", th, spec))

    contexts = {}
    for dims in active_dims:
        for seed in cfg.seeds:
            contexts[(dims, seed)] = None

    def job_key(j):
        dims, seed, name, theta, _ = j
        return (name, -1.0 if theta is None else theta, seed, dims)

    workers = _n_workers()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        ctx_futures = {key: pool.submit(_prepare_context, key[0], key[1], cfg)
                       for key in contexts}
        for key, fut in ctx_futures.items():
            contexts[key] = fut.result()
        cell_futures = {}
        for j in jobs:
            dims, seed, name, theta, spec = j
            cell_futures[job_key(j)] = pool.submit(
                _run_cell, contexts[(dims, seed)], dims, seed, name, theta,
                spec, cfg)

    rows = []
    cells = []
    for key in sorted(cell_futures):
        cell_rows, cell = cell_futures[key].result()
        rows.extend(cell_rows)
        cells.append(cell)

    methods = {}
    for cell in cells:
        label = _method_label(cell["method"], cell["theta"])
        agg = methods.setdefault(label, {"cells": 0, "errors": 0,
                                         "iters_to_tol": [],
                                         "contraction_factors": []})
        agg["cells"] += 1
        if cell["status"] != "ok":
            agg["errors"] += 1
            continue
        agg["iters_to_tol"].append(cell["iters_to_tol"])
        if cell.get("contraction_factor") is not None:
            agg["contraction_factors"].append(cell["contraction_factor"])
    summary = {
        "schema": "sella/summary/v1",
        "rel_tol": cfg.rel_tol,
        "skipped_dims": skipped,
        "cells": cells,
        "methods": methods,
    }
    return rows, summary


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows, path):
    """Write rows with the fixed header; floats use their shortest
    round-trip representation."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in rows:
                fh.write(",".join([
                    r.method, _fmt(r.theta), str(r.seed), str(r.n), str(r.m),
                    str(r.p), str(r.q), str(r.k), _fmt(r.residual_rel),
                    _fmt(r.dist_sq), _fmt(r.lyapunov), str(r.elapsed_ns),
                ]) + "\n")
    except OSError as e:
        raise ConfigError(f"cannot write CSV to {path}: {e}")


def parse_csv(text: str):
    """Inverse of emit_csv; used by round-trip tests and external tooling."""
    lines = text.strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError("unexpected CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 12:
            raise ConfigError(f"malformed CSV row: {ln!r}")
        rows.append(ResultRow(
            method=parts[0],
            theta=None if parts[1] == "" else float(parts[1]),
            seed=int(parts[2]), n=int(parts[3]), m=int(parts[4]),
            p=int(parts[5]), q=int(parts[6]), k=int(parts[7]),
            residual_rel=float(parts[8]),
            dist_sq=None if parts[9] == "" else float(parts[9]),
            lyapunov=None if parts[10] == "" else float(parts[10]),
            elapsed_ns=int(parts[11])))
    return rows


def emit_summary_json(summary, path):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise ConfigError(f"cannot write summary to {path}: {e}")

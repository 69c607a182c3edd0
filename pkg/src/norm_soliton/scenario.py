"""Scenario documents, task dispatch and persisted run artifacts."""

from __future__ import annotations

import copy
import hashlib
import json
import os
import platform
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import solve_soliton, gn_ratio, thresholds
from .dynamics import evolve, instability_experiment, stability_experiment
from .errors import NormSolitonError, ParameterError
from .functionals import dilate, fiber_profile, fiber_table
from .grid import RadialField, RadialGrid, field_from_csv, field_to_csv, gaussian
from .params import L2_CRITICAL, ProblemParams
from .regimes import classify_regime
from .solvers import (SolverOptions, continuation_mu_to_zero, continuation_q_to_critical,
                      critical_mass_witness, energy_minimizer, ground_state_local_min,
                      mountain_pass)

SCHEMA_VERSION = 1
OUTPUT_ENV = "NORM_SOLITON_OUTPUT"
TASKS = ("gn", "thresholds", "fiber", "ground", "mountain", "evolve", "stability",
         "instability", "sweep")

DEFAULT_GRID = {"r_max": 40.0, "n": 2048, "spacing": "graded", "grading": 6.0, "order": 4}
DEFAULT_OPTIONS = {
    "gn": {"t": 4.0, "tol": 1e-15},
    "fiber": {"init": "gaussian", "width": 1.0, "s_min": -5.0, "s_max": 5.0, "samples": 201},
    "ground": {"init": "gaussian", "width": 1.0},
    "mountain": {"init": "gaussian", "width": 1.0},
    "evolve": {"init": "ground", "rho": 0.0, "T": 5.0, "dt": 1e-3, "scheme": "strang",
               "log_every": 10, "adaptive": False, "blowup_factor": None},
    "stability": {"n_perturbations": 8, "delta": 1e-3, "T": 20.0, "dt": 1e-3, "scheme": "strang"},
    "instability": {"rho": 0.1, "T": 1.0, "dt": 1e-5, "scheme": "strang"},
    "sweep": {"vary": "mu", "values": [0.0, 0.5, 1.0], "workers": 2, "branches": ["ground", "mountain"],
              "continuation": False, "steps": 5},
}


def default_scenario(task: str) -> dict:
    if task not in TASKS:
        raise ParameterError("unknown task", task=task, allowed=list(TASKS))
    return {"schema_version": SCHEMA_VERSION, "task": task,
            "params": {"a": 1.0, "mu": 1.0, "p": 4.0, "q": 2.2},
            "grid": dict(DEFAULT_GRID), "solver": {},
            "options": copy.deepcopy(DEFAULT_OPTIONS.get(task, {})),
            "output_dir": None, "seed": 0}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_value(text: str):
    """JSON literal if it parses, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(doc: dict, key: str, value) -> None:
    """Set a dotted key such as 'grid.n' or 'params.a'."""
    parts = key.split(".")
    if not all(parts):
        raise ParameterError("malformed override key", key=key)
    node = doc
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ParameterError("override path crosses a scalar", key=key)
    node[parts[-1]] = value


def load_scenario(task: str, path: str | None = None, overrides: list[str] = ()) -> dict:
    doc = default_scenario(task)
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        version = user.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ParameterError("unsupported scenario schema version", schema_version=version)
        if user.get("task", task) != task:
            raise ParameterError("config task does not match the subcommand",
                                 config_task=user.get("task"), subcommand=task)
        doc = _merge(doc, user)
    for item in overrides:
        if "=" not in item:
            raise ParameterError("override must look like key=value", override=item)
        k, v = item.split("=", 1)
        apply_override(doc, k.strip(), parse_value(v.strip()))
    doc["task"] = task
    return doc


def config_hash(doc: dict) -> str:
    canon = {k: v for k, v in doc.items() if k != "output_dir"}
    return hashlib.sha256(json.dumps(canon, sort_keys=True).encode()).hexdigest()


def _params(doc: dict) -> ProblemParams:
    p = doc["params"]
    return ProblemParams(float(p["a"]), float(p["mu"]), float(p["p"]), float(p["q"]))


def _grid(doc: dict) -> RadialGrid:
    return RadialGrid.from_dict(doc["grid"])


def _solver_options(doc: dict) -> SolverOptions:
    try:
        return SolverOptions(**doc.get("solver", {}))
    except TypeError as ex:
        raise ParameterError("unknown solver option", detail=str(ex)) from None


def _initial(doc: dict, grid: RadialGrid, prm: ProblemParams) -> RadialField:
    opt = doc["options"]
    init = opt.get("init", "gaussian")
    if init == "gaussian":
        return gaussian(grid, float(opt.get("width", 1.0)), prm.a)
    return field_from_csv(init, grid).normalized(prm.a)


# --- tasks ------------------------------------------------------------------------

@dataclass
class RunResult:
    report: dict
    files: dict = field(default_factory=dict)
    """file name -> text content"""
    timings: dict = field(default_factory=dict)


def _solve_report(rep) -> tuple[dict, float]:
    d = rep.to_dict()
    wall = d.pop("wall_time")
    return d, wall


def task_gn(doc: dict) -> RunResult:
    opt = doc["options"]
    t = float(opt["t"])
    grid = _grid(doc)
    sol = solve_soliton(t, float(opt.get("tol", 1e-15)), grid=grid)
    prof = sol.profile
    from .grid import kinetic_energy, power_integral
    ratio = gn_ratio(kinetic_energy(prof), prof.mass2(), power_integral(prof, t), t)
    report = {**sol.to_dict(), "C_t": sol.C_t, "grid_gn_ratio": ratio,
              "grid_gn_deviation": ratio / sol.C_t_pow - 1.0}
    return RunResult(report, {"profile.csv": field_to_csv(prof)})


def task_thresholds(doc: dict) -> RunResult:
    prm = _params(doc)
    rep = thresholds(prm)
    return RunResult({"params": prm.to_dict(), "thresholds": rep.to_dict(),
                      "regime": classify_regime(prm, rep).to_dict()})


def task_fiber(doc: dict) -> RunResult:
    prm = _params(doc)
    grid = _grid(doc)
    opt = doc["options"]
    u = _initial(doc, grid, prm)
    s = np.linspace(float(opt["s_min"]), float(opt["s_max"]), int(opt["samples"]))
    table = fiber_table(u, prm, s)
    lines = ["s,psi,dpsi"] + [",".join(repr(float(x)) for x in row) for row in table]
    return RunResult({"params": prm.to_dict(), "fiber": fiber_profile(u, prm).to_dict()},
                     {"fiber.csv": "\n".join(lines) + "\n"})


def _ground(doc: dict, prm: ProblemParams, grid: RadialGrid):
    init = _initial(doc, grid, prm)
    rep = thresholds(prm)
    tag = classify_regime(prm, rep)
    if tag.global_min and not tag.local_min:
        return energy_minimizer(prm, init, _solver_options(doc)), tag
    return ground_state_local_min(prm, init, _solver_options(doc), report=rep), tag


def _mountain(doc: dict, prm: ProblemParams, grid: RadialGrid):
    rep = thresholds(prm)
    sol = mountain_pass(prm, _initial(doc, grid, prm), _solver_options(doc), report=rep)
    return sol, classify_regime(prm, rep)


def _solution_result(sol, tag) -> RunResult:
    report, wall = _solve_report(sol)
    report["regime"] = tag.to_dict()
    return RunResult(report, {"profile.csv": field_to_csv(sol.profile)}, {"solve": wall})


def task_ground(doc: dict) -> RunResult:
    prm, grid = _params(doc), _grid(doc)
    return _solution_result(*_ground(doc, prm, grid))


def task_mountain(doc: dict) -> RunResult:
    prm, grid = _params(doc), _grid(doc)
    return _solution_result(*_mountain(doc, prm, grid))


def task_evolve(doc: dict) -> RunResult:
    prm, grid = _params(doc), _grid(doc)
    opt = doc["options"]
    init = opt.get("init", "ground")
    timings = {}
    if init in ("ground", "mountain"):
        sub = _merge(doc, {"options": {"init": "gaussian"}})
        sol, _ = (_ground if init == "ground" else _mountain)(sub, prm, grid)
        timings["solve"] = sol.wall_time
        phi0 = sol.profile
    else:
        phi0 = field_from_csv(init, grid)
    rho = float(opt.get("rho", 0.0))
    if rho != 0.0:
        phi0 = dilate(phi0, rho).normalized(prm.a)
    st = evolve(phi0, prm, float(opt["T"]), float(opt["dt"]), opt.get("scheme", "strang"),
                log_every=int(opt.get("log_every", 10)), adaptive=bool(opt.get("adaptive", False)),
                blowup_factor=None if opt.get("blowup_factor") is None else float(opt["blowup_factor"]))
    timings["evolve"] = st.wall_time
    report = {"params": prm.to_dict(), "grid": grid.to_dict(), "t_final": st.t, "steps": st.steps,
              "blown_up": st.blown_up, "drifts": st.drifts(), "init": init, "rho": rho}
    return RunResult(report, {"trajectory.csv": st.log_csv(), "final.csv": field_to_csv(st.phi)}, timings)


def task_stability(doc: dict) -> RunResult:
    prm, grid = _params(doc), _grid(doc)
    opt = doc["options"]
    sol, _ = _ground(_merge(doc, {"options": {"init": "gaussian"}}), prm, grid)
    rho0 = thresholds(prm).rho0
    t0 = time.perf_counter()
    verdict = stability_experiment(sol, int(opt["n_perturbations"]), float(opt["delta"]),
                                   float(opt["T"]), float(opt["dt"]), seed=int(doc.get("seed", 0)),
                                   rho0=rho0, scheme=opt.get("scheme", "strang"))
    return RunResult({"solution": _solve_report(sol)[0], "verdict": verdict.to_dict()},
                     {"profile.csv": field_to_csv(sol.profile)},
                     {"solve": sol.wall_time, "experiment": time.perf_counter() - t0})


def task_instability(doc: dict) -> RunResult:
    prm, grid = _params(doc), _grid(doc)
    opt = doc["options"]
    sol, _ = _mountain(_merge(doc, {"options": {"init": "gaussian"}}), prm, grid)
    verdict, st = instability_experiment(sol, float(opt["rho"]), float(opt["T"]), float(opt["dt"]),
                                         scheme=opt.get("scheme", "strang"))
    return RunResult({"solution": _solve_report(sol)[0], "verdict": verdict.to_dict()},
                     {"profile.csv": field_to_csv(sol.profile), "trajectory.csv": st.log_csv()},
                     {"solve": sol.wall_time, "evolve": st.wall_time})


def _sweep_cell(args) -> dict:
    doc, value = args
    vary = doc["options"]["vary"]
    prm = _params(doc).replace(**{vary: float(value)})
    grid = _grid(doc)
    row = {vary: float(value), "a": prm.a, "mu": prm.mu, "p": prm.p, "q": prm.q}
    try:
        rep = thresholds(prm)
        tag = classify_regime(prm, rep)
        row["regime"] = tag.tag if tag.case is None else f"{tag.tag}-{tag.case}"
    except NormSolitonError as ex:
        row.update(regime="error", status=type(ex).__name__, message=str(ex))
        return row
    status = []
    for branch, fn, key in (("ground", _ground, "m_a"), ("mountain", _mountain, "c_a")):
        if branch not in doc["options"].get("branches", []):
            continue
        try:
            sol, _ = fn(doc, prm, grid)
            row[key] = sol.level
            row[f"lambda_{branch}"] = sol.lam
            status.append(f"{branch}:ok")
        except NormSolitonError as ex:
            status.append(f"{branch}:{type(ex).__name__}")
    if prm.p == L2_CRITICAL and prm.mu > 0 and rep.a_star is not None and prm.a > rep.a_star:
        wit = critical_mass_witness(prm, grid)
        row["witness_E0"] = wit["E0"]
        row["witness_decreasing"] = wit["decreasing"]
    row["status"] = ";".join(status) or "classified"
    return row


SWEEP_COLUMNS = ("a", "mu", "p", "q", "regime", "m_a", "c_a", "lambda_ground", "lambda_mountain",
                 "witness_E0", "witness_decreasing", "status")


def task_sweep(doc: dict) -> RunResult:
    opt = doc["options"]
    vary = opt["vary"]
    if vary not in ("mu", "q", "a"):
        raise ParameterError("sweep varies mu, q or a", vary=vary)
    values = list(opt["values"])
    workers = max(1, int(opt.get("workers", 1)))
    t0 = time.perf_counter()
    jobs = [(doc, v) for v in values]
    if workers == 1:
        rows = [_sweep_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(repr(row[c]) if isinstance(row.get(c), float) else str(row.get(c, ""))
                              for c in SWEEP_COLUMNS))
    report = {"vary": vary, "values": values, "cells": rows}
    timings = {"cells": time.perf_counter() - t0}
    if opt.get("continuation") and vary in ("mu", "q"):
        prm, grid = _params(doc), _grid(doc)
        t1 = time.perf_counter()
        fn = continuation_mu_to_zero if vary == "mu" else continuation_q_to_critical
        res = fn(prm, int(opt.get("steps", 5)), gaussian(grid, 1.0, prm.a), _solver_options(doc))
        report["continuation"] = res.to_dict()
        timings["continuation"] = time.perf_counter() - t1
    return RunResult(report, {"sweep.csv": "\n".join(lines) + "\n"}, timings)


RUNNERS = {"gn": task_gn, "thresholds": task_thresholds, "fiber": task_fiber, "ground": task_ground,
           "mountain": task_mountain, "evolve": task_evolve, "stability": task_stability,
           "instability": task_instability, "sweep": task_sweep}


# --- persistence ------------------------------------------------------------------

def output_root(doc: dict) -> Path:
    return Path(doc.get("output_dir") or os.environ.get(OUTPUT_ENV) or "norm_soliton_out")


def _versions() -> dict:
    import scipy
    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "norm_soliton": pkg}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def run(doc: dict) -> tuple[Path, RunResult]:
    """Execute a scenario and persist report.json, data files and manifest.json atomically."""
    task = doc["task"]
    if task not in RUNNERS:
        raise ParameterError("unknown task", task=task)
    digest = config_hash(doc)
    t0 = time.perf_counter()
    result = RUNNERS[task](doc)
    total = time.perf_counter() - t0
    root = output_root(doc)
    root.mkdir(parents=True, exist_ok=True)
    final = root / f"{task}-{digest[:12]}"
    tmp = Path(tempfile.mkdtemp(prefix=f".{task}-", dir=root))
    files = {"report.json": dumps(result.report), "scenario.json": dumps(doc), **result.files}
    for name, text in files.items():
        (tmp / name).write_text(text)
    manifest = {"config_hash": digest, "task": task, "schema_version": SCHEMA_VERSION,
                "versions": _versions(), "timings": {**result.timings, "total": total},
                "files": {n: hashlib.sha256(t.encode()).hexdigest() for n, t in files.items()}}
    (tmp / "manifest.json").write_text(dumps(manifest))
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)
    return final, result

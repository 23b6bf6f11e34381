"""Config-driven sweeps, the verify suite and cross-section export."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_checks
from .estimators import METHODS, PdeSolver, _resolve_group, derive_seeds
from .exceptions import ConfigInvalid
from .network import Architecture, import_params, param_count, predict
from .optim import ADAM_DEFAULTS, LBFGS_DEFAULTS
from .problems import PROBLEMS, make_problem

SCHEMA_VERSION = 1
SWEEP_AXES = ("none", "n_f", "width", "lambda", "mu")
PROBLEM_KEYS = ("alpha", "c", "lambda", "mu", "group", "sampling_box")
_KNOWN = {
    "problem", "params", "group", "method", "methods", "base_widths", "n_f", "n_u", "n_x", "n_t",
    "filter_mode", "seed", "n_seeds", "optimizer", "loss_weights", "sweep", "outputs", "out",
    *PROBLEM_KEYS,
}


def _fail(msg):
    raise ConfigInvalid(msg)


def _posint(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        _fail(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    problem: str
    params: dict = field(default_factory=dict)
    group: object = None
    methods: tuple = ("sdnn",)
    base_widths: tuple = (10, 10, 10)
    n_f: int = 1000
    n_u: int = 100
    n_x: int | None = None
    n_t: int | None = None
    filter_mode: str = "pre"
    seed: int = 0
    n_seeds: int = 5
    schedule: list = field(default_factory=lambda: [{"lbfgs": {"max_iter": 20000}}])
    loss_weights: tuple = (1.0, 1.0, 1.0)
    sweep_axis: str = "none"
    sweep_values: list = field(default_factory=lambda: [None])
    save_models: bool = True
    save_histories: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        """Validate a JSON config document and fill defaults."""
        if not isinstance(doc, dict):
            _fail("config must be a JSON object")
        unknown = set(doc) - _KNOWN
        if unknown:
            _fail(f"unknown config keys: {sorted(unknown)}")
        problem = doc.get("problem")
        if problem not in PROBLEMS:
            _fail(f"problem must be one of {PROBLEMS}, got {problem!r}")
        params = dict(doc.get("params") or {})
        for key in PROBLEM_KEYS:
            if key in doc and key != "group":
                params[key] = doc[key]
        for key, val in params.items():
            if key in ("alpha", "c", "lambda", "mu") and not (
                    isinstance(val, (int, float)) and not isinstance(val, bool) and math.isfinite(val)):
                _fail(f"{key} must be a finite number")
        if problem == "regression" and params.get("alpha", 5.0) <= 0:
            _fail("alpha must be positive")
        cfg = cls(problem=problem, params=params)
        cfg.group = doc.get("group")
        if problem == "poisson" and isinstance(cfg.group, str):
            cfg.params.setdefault("group", cfg.group)
        methods = doc.get("methods", doc.get("method", "sdnn"))
        methods = [methods] if isinstance(methods, str) else list(methods)
        if not methods or any(m not in METHODS for m in methods):
            _fail(f"methods must be drawn from {METHODS}")
        cfg.methods = tuple(methods)
        widths = doc.get("base_widths", [20, 20, 20] if problem == "regression" else [10, 10, 10])
        if not isinstance(widths, list) or not widths:
            _fail("base_widths must be a nonempty list")
        cfg.base_widths = tuple(_posint(w, "base_widths entry") for w in widths)
        cfg.n_f = _posint(doc.get("n_f", cfg.n_f), "n_f")
        cfg.n_u = _posint(doc.get("n_u", 101 if problem == "regression" else cfg.n_u), "n_u")
        for key in ("n_x", "n_t"):
            if doc.get(key) is not None:
                setattr(cfg, key, _posint(doc[key], key, 2))
        cfg.filter_mode = doc.get("filter_mode", "pre")
        if cfg.filter_mode not in ("pre", "post"):
            _fail("filter_mode must be 'pre' or 'post'")
        cfg.seed = _posint(doc.get("seed", 0), "seed", 0)
        cfg.n_seeds = _posint(doc.get("n_seeds", 5), "n_seeds")
        opt = doc.get("optimizer", {})
        if not isinstance(opt, dict):
            _fail("optimizer must be an object")
        schedule = opt.get("schedule")
        if schedule is None:
            schedule = ([{"adam": {"steps": 5000, "lr": 1e-3}}, {"lbfgs": {"max_iter": 20000}}]
                        if problem == "regression" else [{"lbfgs": {"max_iter": 20000}}])
        cfg.schedule = _check_schedule(schedule)
        weights = doc.get("loss_weights", {})
        if isinstance(weights, dict):
            weights = [weights.get(k, 1.0) for k in ("w_i", "w_b", "w_f")]
        if len(weights) != 3 or any(not isinstance(w, (int, float)) or w < 0 for w in weights):
            _fail("loss_weights must be three nonnegative numbers")
        cfg.loss_weights = tuple(float(w) for w in weights)
        cfg.sweep_axis, cfg.sweep_values = _check_sweep(doc.get("sweep"), problem)
        outputs = doc.get("outputs", {})
        cfg.save_models = bool(outputs.get("models", True))
        cfg.save_histories = bool(outputs.get("histories", True))
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["base_widths"] = list(self.base_widths)
        d["loss_weights"] = list(self.loss_weights)
        return d

    def cells(self):
        """``(sweep_value, method, seed)`` in output order."""
        seeds = range(self.seed, self.seed + self.n_seeds)
        return [(v, m, s) for v in self.sweep_values for m in self.methods for s in seeds]


def _check_schedule(schedule):
    if not isinstance(schedule, list) or not schedule:
        _fail("optimizer.schedule must be a nonempty list")
    out = []
    for stage in schedule:
        if not isinstance(stage, dict) or len(stage) != 1:
            _fail("each schedule stage must be a single-key object")
        (kind, opts), = stage.items()
        allowed = ADAM_DEFAULTS if kind == "adam" else LBFGS_DEFAULTS if kind == "lbfgs" else None
        if allowed is None:
            _fail(f"unknown optimizer {kind!r}")
        opts = dict(opts or {})
        bad = set(opts) - set(allowed)
        if bad:
            _fail(f"unknown {kind} options {sorted(bad)}")
        for key in ("steps", "max_iter", "memory"):
            if key in opts:
                _posint(opts[key], f"{kind}.{key}", 0)
        out.append({kind: opts})
    return out


def _check_sweep(sweep, problem):
    if sweep is None:
        return "none", [None]
    if not isinstance(sweep, dict):
        _fail("sweep must be an object")
    axis = sweep.get("axis", "none")
    if axis not in SWEEP_AXES:
        _fail(f"sweep axis must be one of {SWEEP_AXES}")
    if axis == "none":
        return "none", [None]
    if axis in ("lambda", "mu") and problem != "nonlinear_wave":
        _fail(f"a {axis} sweep needs the nonlinear_wave problem")
    if "values" in sweep:
        values = list(sweep["values"])
    elif {"start", "stop", "step"} <= set(sweep):
        start, stop, step = sweep["start"], sweep["stop"], sweep["step"]
        if not step > 0:
            _fail("sweep step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [start + k * step for k in range(count)]
    else:
        _fail("sweep needs 'values' or 'start'/'stop'/'step'")
    if not values:
        _fail("sweep has no values")
    for v in values:
        if axis in ("n_f", "width"):
            _posint(v, f"{axis} sweep value")
        elif not isinstance(v, (int, float)) or not math.isfinite(v):
            _fail(f"{axis} sweep values must be finite numbers")
    return axis, values


def _cell_solver(cfg: ExperimentConfig, value, method, seed) -> PdeSolver:
    params = dict(cfg.params)
    widths, n_f = cfg.base_widths, cfg.n_f
    if cfg.sweep_axis == "n_f":
        n_f = int(value)
    elif cfg.sweep_axis == "width":
        widths = tuple(int(value) for _ in cfg.base_widths)
    elif cfg.sweep_axis in ("lambda", "mu"):
        params[cfg.sweep_axis] = float(value)
    group = cfg.group
    if isinstance(group, dict) and cfg.problem == "nonlinear_wave":
        group = {**group, "lambda": params.get("lambda", 3.0), "mu": params.get("mu", 2.0)}
    return PdeSolver(cfg.problem, params, method, group, widths, n_f, cfg.n_u, cfg.filter_mode,
                     cfg.schedule, cfg.loss_weights, seed)


def result_columns(cfg: ExperimentConfig) -> list[str]:
    problem = make_problem(cfg.problem, **cfg.params)
    regions = [lab for lab in problem.prediction_regions]
    metrics = list(problem.metric_maps)
    return (["sweep_axis", "sweep_value", "method", "seed", "aggregate", "status", "problem", "group",
             "base_widths", "param_count", "n_f", "n_u", "final_loss", "iterations", "reason",
             "l2_sampling"] + [f"l2_{lab}" for lab in regions] + metrics)


def run_cell(cfg: ExperimentConfig, value, method, seed) -> dict:
    """Train one cell; errors are captured in the row instead of raised."""
    solver = _cell_solver(cfg, value, method, seed)
    row = {"sweep_axis": cfg.sweep_axis, "sweep_value": value, "method": method, "seed": seed,
           "aggregate": 0, "problem": cfg.problem}
    try:
        solver.fit()
    except Exception as exc:  # recorded per cell, the sweep goes on
        row.update(status=f"error: {type(exc).__name__}: {exc}".replace("\n", " "))
        return {"row": row, "history": [], "model": None, "wall_time": float("nan")}
    rep = solver.report_
    errors = solver.errors(cfg.n_x, cfg.n_t)
    metric = solver.symmetry_metric()
    metric = metric if isinstance(metric, dict) else {"S": metric}
    row.update(
        status="ok", group=solver.group_.name if method == "sdnn" else "identity",
        base_widths="-".join(str(w) for w in solver.arch_.base_widths),
        param_count=param_count(solver.arch_), n_f=solver.n_collocation_, n_u=cfg.n_u,
        final_loss=rep.final_loss, iterations=rep.iterations, reason=rep.reason,
        l2_sampling=errors.pop("sampling"),
    )
    row.update({f"l2_{k}": v for k, v in errors.items()})
    row.update(metric)
    model = solver.export() if cfg.save_models else None
    return {"row": row, "history": rep.history, "model": model, "wall_time": rep.wall_time}


def _run_cell_args(args):
    return run_cell(*args)


def format_value(v) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    return str(v)


def write_csv(path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def _aggregate(cfg, columns, rows):
    out = []
    numeric = [c for c in columns if c.startswith("l2_") or c.startswith("S") or
               c in ("final_loss", "iterations", "n_f")]
    for value in cfg.sweep_values:
        for method in cfg.methods:
            group = [r for r in rows if r["sweep_value"] == value and r["method"] == method
                     and r.get("status") == "ok"]
            agg = {"sweep_axis": cfg.sweep_axis, "sweep_value": value, "method": method,
                   "seed": "mean", "aggregate": 1, "problem": cfg.problem}
            if not group:
                agg["status"] = "error: no successful runs"
                out.append(agg)
                continue
            agg.update({k: group[0].get(k) for k in ("group", "base_widths", "param_count", "n_u")})
            agg["status"] = f"ok ({len(group)} runs)"
            for c in numeric:
                agg[c] = float(np.mean([float(r[c]) for r in group]))
            out.append(agg)
    return out


def _cell_name(value, method, seed):
    v = "" if value is None else f"_{value}"
    return f"{method}{v}_s{seed}"


def run(config, out_dir, workers: int = 1) -> dict:
    """Execute every cell and write results, timings, histories, models and a manifest."""
    cfg = config if isinstance(config, ExperimentConfig) else (
        ExperimentConfig.from_dict(config) if isinstance(config, dict) else ExperimentConfig.load(config))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = cfg.cells()
    args = [(cfg, v, m, s) for v, m, s in cells]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_args, args))
    else:
        results = [_run_cell_args(a) for a in args]

    columns = result_columns(cfg)
    rows = [r["row"] for r in results]
    write_csv(out / "results.csv", columns, rows + _aggregate(cfg, columns, rows))
    write_csv(out / "timings.csv", ["sweep_value", "method", "seed", "wall_time_s"],
              [{"sweep_value": v, "method": m, "seed": s, "wall_time_s": r["wall_time"]}
               for (v, m, s), r in zip(cells, results)])
    manifest_cells = []
    for (v, m, s), r in zip(cells, results):
        name = _cell_name(v, m, s)
        entry = {"sweep_value": v, "method": m, "seed": s, "status": r["row"]["status"],
                 "derived_seeds": dict(zip(("collocation", "boundary", "init"), derive_seeds(s)))}
        if cfg.save_histories and r["history"]:
            (out / "histories").mkdir(exist_ok=True)
            write_csv(out / "histories" / f"{name}.csv", ["iteration", "loss"],
                      [{"iteration": i, "loss": f} for i, f in r["history"]])
            entry["history"] = f"histories/{name}.csv"
        if r["model"] is not None:
            (out / "models").mkdir(exist_ok=True)
            (out / "models" / f"{name}.json").write_text(json.dumps(r["model"]), encoding="utf-8")
            entry["model"] = f"models/{name}.json"
        manifest_cells.append(entry)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": cfg.to_dict(),
        "optimizer_defaults": {"adam": ADAM_DEFAULTS, "lbfgs": LBFGS_DEFAULTS},
        "columns": columns,
        "files": {"results": "results.csv", "timings": "timings.csv"},
        "conventions": {
            "float_format": "%.16e",
            "seeds": "one run per seed in [seed, seed + n_seeds); aggregate rows are arithmetic means",
            "pinn_widths": "base [m1, m2, ...] with |G| = k maps to [m1, k*m2, ..., m_last]",
            "boundary_points": "uniform by arc length on the sampling region boundary, exact-solution targets",
            "filter_mode": cfg.filter_mode,
        },
        "cells": manifest_cells,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return {"rows": rows, "columns": columns, "manifest": manifest}


@dataclass
class VerifyReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in self.checks]


def verify(config) -> VerifyReport:
    """Group axioms, invariance, equivariance, materialization and jet checks.

    Accepts a full experiment config, or a smaller one with ``group`` and
    optional ``base_widths``, ``n_param_sets``, ``n_points``, ``seed``.
    """
    doc = config if isinstance(config, dict) else json.loads(Path(config).read_text(encoding="utf-8"))
    doc = copy.deepcopy(doc)
    extra = {k: doc.pop(k) for k in ("n_param_sets", "n_points", "dim", "box") if k in doc}
    if "problem" in doc:
        cfg = ExperimentConfig.from_dict(doc)
        problem = make_problem(cfg.problem, **cfg.params)
        group = _resolve_group(cfg.group if cfg.group is not None else problem.group_spec,
                               problem.input_dim)
        box = extra.get("box", problem.sampling_region.box)
        widths, seed = cfg.base_widths, cfg.seed
    else:
        if "group" not in doc:
            raise ConfigInvalid("verify needs a problem or a group")
        group = _resolve_group(doc["group"], int(extra.get("dim", 2)))
        box = extra.get("box", [(0.5, 2.0)] * group.dim)
        widths = tuple(doc.get("base_widths", (5, 5, 5)))
        seed = int(doc.get("seed", 0))
    arch = Architecture(group.dim, widths, group.n)
    checks = run_checks(arch, group, box, int(extra.get("n_param_sets", 10)),
                        int(extra.get("n_points", 100)), seed)
    return VerifyReport(checks)


def _segment_points(seg, dim):
    lo, hi = seg["range"]
    n = int(seg.get("n", 201))
    coord = np.linspace(float(lo), float(hi), n)
    if dim == 1:
        return coord, coord[:, None]
    axis = seg.get("axis", "t")
    value = float(seg["value"])
    fixed = np.full(n, value)
    X = np.stack([coord, fixed], axis=1) if axis == "t" else np.stack([fixed, coord], axis=1)
    return coord, X


def cross_section(predictor, exact, spec, dim: int = 2) -> np.ndarray:
    """Rows ``(coordinate, predicted u, exact u)`` along one or more stitched segments.

    ``{"axis": "t", "value": 0.5, "range": [-2, 2], "n": 201}`` fixes ``t``
    and varies ``x``; ``{"segments": [...]}`` concatenates several lines.
    """
    segments = spec.get("segments", [spec])
    blocks = []
    for seg in segments:
        coord, X = _segment_points(seg, dim)
        blocks.append(np.stack([coord, predictor(X), exact(X)], axis=1))
    return np.concatenate(blocks, axis=0)


def section(model_path, spec_path, out_path=None) -> Path:
    """Cross section of an exported model; writes a three-column CSV."""
    doc = json.loads(Path(model_path).read_text(encoding="utf-8"))
    spec = json.loads(Path(spec_path).read_text(encoding="utf-8"))
    arch, group, params = import_params(doc)
    info = doc.get("problem") or spec.get("problem")
    if info is None:
        raise ConfigInvalid("model file carries no problem; add 'problem' to the section spec")
    if isinstance(info, str):
        info = {"name": info}
    problem = make_problem(info["name"], **(info.get("params") or {}))
    rows = cross_section(lambda X: predict(arch, group, params, X), problem.exact, spec,
                         problem.input_dim)
    target = Path(out_path or spec.get("out") or Path(model_path).with_suffix(".section.csv"))
    write_csv(target, ["coordinate", "u_pred", "u_exact"],
              [dict(zip(("coordinate", "u_pred", "u_exact"), r)) for r in rows.tolist()])
    return target

"""Composite physics-informed loss, optimizer schedules and error metrics."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import optim
from .exceptions import NonFinite, ZeroNorm
from .groups import FiniteGroup
from .jets import closure
from .network import Architecture, SdnnParams, predict, propagate
from .problems import PdeProblem
from .sampling import PointSet


@dataclass(eq=False)
class LossSpec:
    """Point sets and targets of ``w_i MSE_i + w_b MSE_b + w_f MSE_f``.

    For the regression problem the data misfit is carried by the
    boundary term and ``X_f`` is empty.
    """

    problem: PdeProblem
    arch: Architecture
    group: FiniteGroup
    X_f: np.ndarray
    X_i: np.ndarray
    u_i: np.ndarray
    X_b: np.ndarray
    u_b: np.ndarray
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        p = self.arch.input_dim
        for name in ("X_f", "X_i", "X_b"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1, p))
        self.u_i = np.asarray(self.u_i, dtype=float).reshape(-1)
        self.u_b = np.asarray(self.u_b, dtype=float).reshape(-1)
        self.weights = tuple(float(w) for w in self.weights)
        if len(self.weights) != 3 or min(self.weights) < 0:
            raise ValueError("loss weights must be three nonnegative numbers")
        w_i, w_b, w_f = self.weights
        if w_f > 0 and not self.problem.is_regression and len(self.X_f) == 0:
            raise ValueError("residual term enabled but no collocation points")
        if w_i > 0 and w_b > 0 and len(self.X_i) + len(self.X_b) == 0:
            raise ValueError("no initial/boundary points")
        self.indices = closure(self.problem.needed, p) if not self.problem.is_regression else None


def make_loss_spec(problem: PdeProblem, arch: Architecture, group: FiniteGroup,
                   collocation: PointSet | np.ndarray | None, boundary: PointSet | np.ndarray,
                   weights=(1.0, 1.0, 1.0)) -> LossSpec:
    """Targets are exact-solution traces.

    For time-dependent problems boundary points on the lowest time edge of
    the sampling box form the initial set; the rest are boundary points.
    """
    p = arch.input_dim
    Xb = np.asarray(getattr(boundary, "points", boundary), dtype=float).reshape(-1, p)
    Xf = (np.zeros((0, p)) if collocation is None
          else np.asarray(getattr(collocation, "points", collocation), dtype=float).reshape(-1, p))
    if problem.has_time:
        t_lo = problem.sampling_region.box[1][0]
        initial = np.abs(Xb[:, 1] - t_lo) <= 1e-12
    else:
        initial = np.zeros(len(Xb), dtype=bool)
    Xi, Xb = Xb[initial], Xb[~initial]
    return LossSpec(problem, arch, group, Xf, Xi, problem.exact(Xi) if len(Xi) else np.zeros(0),
                    Xb, problem.exact(Xb) if len(Xb) else np.zeros(0), weights)


def _mse_u(spec: LossSpec, theta, X, target):
    zero = (0,) * spec.arch.input_dim
    u = propagate(spec.arch, spec.group, theta, X, (zero,))[zero]
    return ad.mean(ad.square(u - target))


def loss_terms(theta, spec: LossSpec) -> dict:
    """``{"i", "b", "f"}`` mean squared errors; tape nodes if ``theta`` is one."""
    terms = {}
    w_i, w_b, w_f = spec.weights
    if w_i > 0 and len(spec.X_i):
        terms["i"] = _mse_u(spec, theta, spec.X_i, spec.u_i)
    if w_b > 0 and len(spec.X_b):
        terms["b"] = _mse_u(spec, theta, spec.X_b, spec.u_b)
    if w_f > 0 and len(spec.X_f) and not spec.problem.is_regression:
        jet = propagate(spec.arch, spec.group, theta, spec.X_f, spec.indices)
        r = spec.problem.residual(jet, spec.X_f)
        terms["f"] = ad.mean(ad.square(r))
    return terms


def _total(theta, spec: LossSpec):
    terms = loss_terms(theta, spec)
    w = dict(zip("ibf", spec.weights))
    total = 0.0
    for key, val in terms.items():
        total = total + val * w[key] if w[key] != 1 else total + val
    return total


def evaluate_loss(params, spec: LossSpec) -> float:
    theta = params.vector if isinstance(params, SdnnParams) else np.asarray(params, dtype=float)
    value = float(ad.value_of(_total(theta, spec)))
    if not np.isfinite(value):
        raise NonFinite("loss is not finite")
    return value


def loss_and_grad(spec: LossSpec):
    """Closure ``theta -> (loss, gradient)`` for the optimizers."""
    def fun(theta):
        return ad.grad(lambda th: _total(th, spec), theta)
    return fun


@dataclass
class TrainReport:
    final_loss: float
    iterations: int
    history: list = field(default_factory=list)
    wall_time: float = 0.0
    reason: str = ""
    params: np.ndarray | None = None
    stages: list = field(default_factory=list)


def _theta(params):
    return params.vector.copy() if isinstance(params, SdnnParams) else np.array(params, dtype=float)


def adam(params, spec: LossSpec, steps: int = 5000, lr: float = 1e-3, **kw) -> TrainReport:
    res = optim.adam(loss_and_grad(spec), _theta(params), steps, lr, **kw)
    return TrainReport(res.fun, res.nit, res.history, res.wall_time, res.reason, res.x,
                       [("adam", res.nit, res.reason)])


def lbfgs(params, spec: LossSpec, opts: dict | None = None) -> TrainReport:
    opts = {**optim.LBFGS_DEFAULTS, **(opts or {})}
    res = optim.lbfgs(loss_and_grad(spec), _theta(params), **opts)
    return TrainReport(res.fun, res.nit, res.history, res.wall_time, res.reason, res.x,
                       [("lbfgs", res.nit, res.reason)])


def run_schedule(fun, theta, schedule) -> TrainReport:
    """Run ``[{"adam": {...}}, {"lbfgs": {...}}, ...]`` on ``fun(theta) -> (loss, grad)``.

    Iteration numbers continue across stages so the joint history is
    monotone in its iteration index.
    """
    t0 = time.perf_counter()
    theta = np.array(theta, dtype=float)
    history, stages = [], []
    it = 0
    res = None
    for stage in schedule:
        (kind, opts), = stage.items()
        opts = dict(opts or {})
        if kind == "adam":
            res = optim.adam(fun, theta, start_iter=it, **{**{"steps": 5000, "lr": 1e-3}, **opts})
        elif kind == "lbfgs":
            res = optim.lbfgs(fun, theta, start_iter=it, **{**optim.LBFGS_DEFAULTS, **opts})
        else:
            raise ValueError(f"unknown optimizer {kind!r}")
        h = res.history
        if history and h and h[0][0] == history[-1][0]:
            h = h[1:]
        history.extend(h)
        theta, it = res.x, it + res.nit
        stages.append((kind, res.nit, res.reason))
    if res is None:
        loss, _ = fun(theta)
        return TrainReport(float(loss), 0, [(0, float(loss))], time.perf_counter() - t0,
                           "no_steps", theta, [])
    return TrainReport(res.fun, it, history, time.perf_counter() - t0, res.reason, theta, stages)


def train(params, spec: LossSpec, schedule) -> TrainReport:
    return run_schedule(loss_and_grad(spec), _theta(params), schedule)


def l2_relative_error(predictor, exact, grid) -> float:
    """``||u - u_hat||_2 / ||u||_2`` over the grid points."""
    X = np.atleast_2d(np.asarray(grid, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty grid")
    u = np.asarray(exact(X), dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ZeroNorm("exact solution vanishes on the grid")
    return float(np.linalg.norm(u - np.asarray(predictor(X), dtype=float)) / norm)


def network_predictor(arch: Architecture, group: FiniteGroup, params):
    theta = _theta(params)
    return lambda X: predict(arch, group, theta, X)

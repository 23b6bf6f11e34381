"""scikit-learn style estimators around the invariant network."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import autodiff as ad
from .groups import build_group
from .network import Architecture, export_params, init_params, pinn_widths, predict, propagate
from .problems import make_problem, symmetry_metric
from .sampling import Region, boundary_points, collocation_points, eval_grid
from .training import l2_relative_error, make_loss_spec, loss_and_grad, run_schedule

METHODS = ("sdnn", "pinn", "pinn_whole_domain")
DEFAULT_SCHEDULE = ({"lbfgs": {"max_iter": 20000}},)


def derive_seeds(seed: int, k: int = 3) -> list[int]:
    """Independent integer seeds for collocation, boundary and initialisation."""
    return [int(s) for s in np.random.SeedSequence(int(seed)).generate_state(k)]


def _resolve_group(spec, dim):
    if spec is None:
        return build_group({"name": "identity", "dim": dim})
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    spec.setdefault("dim", dim)
    return build_group(spec)


class SdnnRegressor(RegressorMixin, BaseEstimator):
    """Group-invariant tanh network fitted to ``(X, y)`` by mean squared error.

    ``group=None`` gives a plain network. The default schedule is 5000
    Adam steps followed by L-BFGS.
    """

    def __init__(self, group="even", base_widths=(20, 20, 20), schedule=None, random_state=0):
        self.group = group
        self.base_widths = base_widths
        self.schedule = schedule
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        self.group_ = _resolve_group(self.group, X.shape[1])
        self.arch_ = Architecture(X.shape[1], tuple(self.base_widths), self.group_.n)
        theta0 = init_params(self.arch_, self.group_, self.random_state).vector
        zero = (0,) * X.shape[1]
        arch, group = self.arch_, self.group_

        def loss(th):
            u = propagate(arch, group, th, X, (zero,))[zero]
            return ad.mean(ad.square(u - y))

        schedule = self.schedule or ({"adam": {"steps": 5000, "lr": 1e-3}}, {"lbfgs": {}})
        self.report_ = run_schedule(lambda th: ad.grad(loss, th), theta0, schedule)
        self.params_ = self.report_.params
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return predict(self.arch_, self.group_, self.params_, X)


class PdeSolver(RegressorMixin, BaseEstimator):
    """Physics-informed solver for one of the benchmark problems.

    ``fit()`` samples the collocation and boundary points itself, so ``X``
    and ``y`` are ignored. ``method`` selects the invariant network
    (``"sdnn"``), the plain network with matched widths (``"pinn"``) or the
    plain network trained on the whole domain (``"pinn_whole_domain"``).
    """

    def __init__(self, problem="advection", problem_params=None, method="sdnn", group=None,
                 base_widths=(10, 10, 10), n_f=1000, n_u=100, filter_mode="pre",
                 schedule=None, loss_weights=(1.0, 1.0, 1.0), random_state=0):
        self.problem = problem
        self.problem_params = problem_params
        self.method = method
        self.group = group
        self.base_widths = base_widths
        self.n_f = n_f
        self.n_u = n_u
        self.filter_mode = filter_mode
        self.schedule = schedule
        self.loss_weights = loss_weights
        self.random_state = random_state

    def _setup(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        problem = make_problem(self.problem, **(self.problem_params or {}))
        sym = _resolve_group(self.group if self.group is not None else problem.group_spec,
                             problem.input_dim)
        if self.method == "sdnn":
            group, widths = sym, tuple(self.base_widths)
        else:
            group = _resolve_group(None, problem.input_dim)
            widths = pinn_widths(self.base_widths, sym.n)
        return problem, sym, group, Architecture(problem.input_dim, widths, group.n)

    def _points(self, problem, seeds):
        region = problem.sampling_region
        if self.method == "pinn_whole_domain":
            region = Region(problem.domain.box, label="domain")
        if problem.is_regression:
            return None, eval_grid(region.box, self.n_u).points
        colloc = collocation_points(region, self.n_f, seeds[0], self.filter_mode)
        return colloc.points, boundary_points(region, self.n_u, seeds[1]).points

    def fit(self, X=None, y=None):
        problem, sym, group, arch = self._setup()
        seeds = derive_seeds(self.random_state)
        X_f, X_b = self._points(problem, seeds)
        spec = make_loss_spec(problem, arch, group, X_f, X_b, self.loss_weights)
        theta0 = init_params(arch, group, seeds[2]).vector
        default = (({"adam": {"steps": 5000, "lr": 1e-3}}, {"lbfgs": {}})
                   if problem.is_regression else DEFAULT_SCHEDULE)
        self.report_ = run_schedule(loss_and_grad(spec), theta0, self.schedule or default)
        self.problem_, self.symmetry_group_, self.group_, self.arch_ = problem, sym, group, arch
        self.params_ = self.report_.params
        self.n_collocation_ = 0 if X_f is None else len(X_f)
        self.n_features_in_ = problem.input_dim
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return predict(self.arch_, self.group_, self.params_, X)

    def score(self, X, y=None, sample_weight=None):
        """R^2 against ``y``, or against the exact solution when ``y`` is omitted."""
        X = check_array(X)
        if y is None:
            check_is_fitted(self, "params_")
            y = self.problem_.exact(X)
        return super().score(X, y, sample_weight)

    def errors(self, n_x=None, n_t=None) -> dict:
        """Relative L2 errors on the sampling region and every prediction region."""
        check_is_fitted(self, "params_")
        pr = self.predict
        out = {}
        for label, region in self.problem_.regions().items():
            key = "sampling" if region is self.problem_.sampling_region else label
            grid = self.problem_.region_grid(region, n_x, n_t)
            out[key] = l2_relative_error(pr, self.problem_.exact, grid)
        return out

    def symmetry_metric(self, grid=None):
        check_is_fitted(self, "params_")
        return symmetry_metric(self.problem_, self.predict, grid)

    def export(self, path=None) -> dict:
        check_is_fitted(self, "params_")
        doc = export_params(self.arch_, self.group_, self.params_)
        doc["problem"] = {"name": self.problem_.name, "params": dict(self.problem_.params)}
        doc["method"] = self.method
        if path is not None:
            Path(path).write_text(json.dumps(doc))
        return doc

"""Benchmark problems: residual operators, exact solutions, regions, symmetry metrics.

Forcing terms are hand-derived closed forms obtained by substituting the
exact solution into the differential operator:

* Poisson, ``u = cos(pi x) cos(pi y)``: ``f = -2 pi^2 u``.
* Nonlinear wave, ``u = [sin 3x cos t + sin(3 lam - 3x) cos(mu - t)] / 2``:
  ``u_tt = -u`` and ``u_xx = -9 u``, so ``f = -u + 9 u^2 - u_x^2``.
* KdV, ``u = (x + t) / (x t + 1)``, with ``D = x t + 1``:
  ``u_t = (1 - x^2) / D^2``, ``u_x = (1 - t^2) / D^2``,
  ``u_xxx = 6 t^2 (1 - t^2) / D^4``; ``f = u_t + u u_x + u_xxx``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import autodiff as ad
from .exceptions import InvalidDomain, SingularPoint, ZeroNorm
from .groups import FiniteGroup, build_group
from .sampling import PointSet, Region, eval_grid, latin_hypercube

PROBLEMS = ("regression", "advection", "sine_gordon", "poisson", "nonlinear_wave", "kdv")


@dataclass(frozen=True, eq=False)
class PdeProblem:
    name: str
    input_dim: int
    domain: Region
    sampling_region: Region
    prediction_regions: Mapping[str, Region]
    group_spec: Mapping
    exact: Callable[[np.ndarray], np.ndarray]
    forcing: Callable[[np.ndarray], np.ndarray]
    operator: Callable | None
    needed: tuple[str, ...]
    metric_maps: Mapping[str, Callable[[np.ndarray], np.ndarray]]
    grid: tuple[int, ...]
    params: Mapping = field(default_factory=dict)
    has_time: bool = False

    @property
    def is_regression(self) -> bool:
        return self.operator is None

    def residual(self, jet, X):
        """``operator[u] - forcing`` at the points ``X`` (tape-friendly)."""
        if self.operator is None:
            raise TypeError(f"{self.name} is a regression problem without a residual")
        return self.operator(jet) - self.forcing(X)

    def group(self) -> FiniteGroup:
        return build_group(self.group_spec)

    def regions(self) -> dict[str, Region]:
        """Sampling region (label ``"sampling"`` unless labelled) and prediction regions."""
        out = {self.sampling_region.label or "sampling": self.sampling_region}
        out.update(self.prediction_regions)
        return out

    def region_grid(self, region: Region | str, n_x: int | None = None,
                    n_t: int | None = None) -> np.ndarray:
        """Equidistant grid on a region's box, restricted to the region."""
        if isinstance(region, str):
            region = self.regions()[region]
        n_x = n_x or self.grid[0]
        n_t = n_t or (self.grid[1] if len(self.grid) > 1 else None)
        pts = eval_grid(region.box, n_x, n_t).points
        return pts[region.contains(pts)]


def _exp_guard(v):
    return np.exp(np.clip(v, -700, 700))


def _regression(alpha: float = 5.0) -> PdeProblem:
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    def exact(X):
        x = np.asarray(X, dtype=float)[:, 0]
        return (1 - 0.5 * x**2) * np.cos(alpha * (x + 0.5 * x**3))

    return PdeProblem(
        name="regression", input_dim=1,
        domain=Region(((-1.0, 1.0),)),
        sampling_region=Region(((-1.0, 0.0),), label="sampling"),
        prediction_regions={"prediction": Region(((0.0, 1.0),), label="prediction")},
        group_spec={"name": "even", "dim": 1},
        exact=exact, forcing=lambda X: np.zeros(len(X)), operator=None, needed=(),
        metric_maps={"S": lambda X: -X}, grid=(101,), params={"alpha": alpha},
    )


def _advection(c: float = 2.0) -> PdeProblem:
    def exact(X):
        return (X[:, 0] - c * X[:, 1]) ** 4

    return PdeProblem(
        name="advection", input_dim=2,
        domain=Region(((-2, 2), (-1, 1))),
        sampling_region=Region(((0, 2), (0, 1)), label="sampling"),
        prediction_regions={"prediction": Region(((-2, 0), (-1, 0)), label="prediction")},
        group_spec={"name": "even"},
        exact=exact, forcing=lambda X: np.zeros(len(X)),
        operator=lambda j: j["u_t"] + c * j["u_x"], needed=("u_x", "u_t"),
        metric_maps={"S": lambda X: -X}, grid=(201, 101), params={"c": c}, has_time=True,
    )


def sine_gordon_exact(X):
    x, t = X[:, 0], X[:, 1]
    s2 = np.sqrt(2.0)
    num = 2 * s2 * _exp_guard((t + x) / s2) * np.cos((x - t) / s2)
    den = 2 * _exp_guard(s2 * (t + x)) + 1
    return 4 * np.arctan(num / den)


def _sine_gordon() -> PdeProblem:
    below = Region(((-3, 3), (-3, 3)), predicate=lambda X: X[:, 1] <= X[:, 0] + 1e-12,
                   vertices=((-3, -3), (3, -3), (3, 3)), label="sampling")
    above = Region(((-3, 3), (-3, 3)), predicate=lambda X: X[:, 1] >= X[:, 0] - 1e-12,
                   vertices=((-3, -3), (3, 3), (-3, 3)), label="prediction")
    return PdeProblem(
        name="sine_gordon", input_dim=2,
        domain=Region(((-3, 3), (-3, 3))),
        sampling_region=below, prediction_regions={"prediction": above},
        group_spec={"name": "circulant"},
        exact=sine_gordon_exact, forcing=lambda X: np.zeros(len(X)),
        operator=lambda j: j["u_xt"] - ad.sin(j["u"]), needed=("u_xt",),
        metric_maps={"S": lambda X: X[:, ::-1]}, grid=(301, 301),
    )


_TOL = 1e-12
# octant "ij": quadrant i, triangle j counted anticlockwise from the positive x axis
OCTANTS = {
    "11": (lambda x, y: (x >= -_TOL) & (y >= -_TOL) & (y <= x + _TOL), ((0, 0), (2, 0), (2, 2))),
    "12": (lambda x, y: (x >= -_TOL) & (y >= -_TOL) & (y >= x - _TOL), ((0, 0), (2, 2), (0, 2))),
    "21": (lambda x, y: (x <= _TOL) & (y >= -_TOL) & (y >= -x - _TOL), ((0, 0), (0, 2), (-2, 2))),
    "22": (lambda x, y: (x <= _TOL) & (y >= -_TOL) & (y <= -x + _TOL), ((0, 0), (-2, 2), (-2, 0))),
    "31": (lambda x, y: (x <= _TOL) & (y <= _TOL) & (y >= x - _TOL), ((0, 0), (-2, 0), (-2, -2))),
    "32": (lambda x, y: (x <= _TOL) & (y <= _TOL) & (y <= x + _TOL), ((0, 0), (-2, -2), (0, -2))),
    "41": (lambda x, y: (x >= -_TOL) & (y <= _TOL) & (y <= -x + _TOL), ((0, 0), (0, -2), (2, -2))),
    "42": (lambda x, y: (x >= -_TOL) & (y <= _TOL) & (y >= -x - _TOL), ((0, 0), (2, -2), (2, 0))),
}


def octant_region(label: str, half: float = 2.0) -> Region:
    pred, verts = OCTANTS[label]
    verts = tuple((half / 2 * a, half / 2 * b) for a, b in verts)
    xs = [v[0] for v in verts]
    ys = [v[1] for v in verts]
    box = ((min(xs), max(xs)), (min(ys), max(ys)))
    return Region(box, predicate=lambda X: pred(X[:, 0], X[:, 1]), vertices=verts, label=label)


def _poisson(group: str = "dihedral8") -> PdeProblem:
    pi = np.pi

    def exact(X):
        return np.cos(pi * X[:, 0]) * np.cos(pi * X[:, 1])

    regions = {lab: octant_region(lab) for lab in OCTANTS}
    sampling = regions.pop("11")
    return PdeProblem(
        name="poisson", input_dim=2,
        domain=Region(((-2, 2), (-2, 2))),
        sampling_region=sampling, prediction_regions=regions,
        group_spec={"name": group},
        exact=exact, forcing=lambda X: -2 * pi**2 * exact(X),
        operator=lambda j: j["u_xx"] + j["u_tt"], needed=("u_xx", "u_tt"),
        metric_maps={
            "S_12": lambda X: X[:, ::-1],
            "S_21": lambda X: np.stack([X[:, 1], -X[:, 0]], axis=1),
            "S_22": lambda X: np.stack([-X[:, 0], X[:, 1]], axis=1),
        },
        grid=(201, 201), params={"group": group},
    )


def _nonlinear_wave(lam: float = 3.0, mu: float = 2.0) -> PdeProblem:
    if not (np.isfinite(lam) and np.isfinite(mu)):
        raise ValueError("lambda and mu must be finite reals")

    def exact(X):
        x, t = X[:, 0], X[:, 1]
        return 0.5 * (np.sin(3 * x) * np.cos(t) + np.sin(3 * lam - 3 * x) * np.cos(mu - t))

    def exact_x(X):
        x, t = X[:, 0], X[:, 1]
        return 1.5 * (np.cos(3 * x) * np.cos(t) - np.cos(3 * lam - 3 * x) * np.cos(mu - t))

    def forcing(X):
        u = exact(X)
        return -u + 9 * u**2 - exact_x(X) ** 2

    def operator(j):
        return j["u_tt"] - j["u"] * j["u_xx"] - ad.square(j["u_x"])

    lo_x, hi_x, lo_t, hi_t = lam - 2, lam - 1, mu - 1, mu
    return PdeProblem(
        name="nonlinear_wave", input_dim=2,
        domain=Region(((min(1.0, lo_x), max(2.0, hi_x)), (min(0.0, lo_t), max(1.0, hi_t)))),
        sampling_region=Region(((1, 2), (0, 1)), label="sampling"),
        prediction_regions={"prediction": Region(((lo_x, hi_x), (lo_t, hi_t)), label="prediction")},
        group_spec={"name": "translation_reflection", "lambda": lam, "mu": mu},
        exact=exact, forcing=forcing, operator=operator, needed=("u_xx", "u_tt"),
        metric_maps={"S": lambda X: np.stack([lam - X[:, 0], mu - X[:, 1]], axis=1)},
        grid=(201, 201), params={"lambda": lam, "mu": mu}, has_time=True,
    )


def kdv_exact(X):
    x, t = X[:, 0], X[:, 1]
    return (x + t) / (x * t + 1)


def _kdv(sampling_box=((0.5, 1.0), (0.5, 1.0))) -> PdeProblem:
    sampling_box = tuple(tuple(float(v) for v in iv) for iv in sampling_box)
    for lo, hi in sampling_box:
        if lo <= 0 <= hi:
            raise InvalidDomain("reciprocal symmetry is singular at a zero coordinate")
    image = tuple(tuple(sorted((1 / lo, 1 / hi))) for lo, hi in sampling_box)
    corners = np.array([[a, b] for a in sampling_box[0] for b in sampling_box[1]]
                       + [[a, b] for a in image[0] for b in image[1]])
    if np.any(corners[:, 0] * corners[:, 1] <= -1 + 1e-12) and np.any(corners[:, 0] * corners[:, 1] >= -1):
        raise InvalidDomain("domain crosses the singular curve x t = -1")

    def forcing(X):
        x, t = X[:, 0], X[:, 1]
        d = x * t + 1
        u = (x + t) / d
        return (1 - x**2) / d**2 + u * (1 - t**2) / d**2 + 6 * t**2 * (1 - t**2) / d**4

    def operator(j):
        return j["u_t"] + j["u"] * j["u_x"] + j["u_xxx"]

    lo = tuple(min(a[0], b[0]) for a, b in zip(sampling_box, image))
    hi = tuple(max(a[1], b[1]) for a, b in zip(sampling_box, image))
    return PdeProblem(
        name="kdv", input_dim=2,
        domain=Region(((lo[0], hi[0]), (lo[1], hi[1]))),
        sampling_region=Region(sampling_box, label="sampling"),
        prediction_regions={"prediction": Region(image, label="prediction")},
        group_spec={"name": "reciprocal"},
        exact=kdv_exact, forcing=forcing, operator=operator, needed=("u_t", "u_xxx"),
        metric_maps={"S": lambda X: 1.0 / X}, grid=(101, 101),
        params={"sampling_box": [list(iv) for iv in sampling_box]}, has_time=True,
    )


_ALIASES = {"lambda": "lam", "sine-gordon": "sine_gordon", "wave": "nonlinear_wave"}


def make_problem(name: str, **params) -> PdeProblem:
    """Build one of the benchmark problems.

    Recognised parameters: ``alpha`` (regression), ``c`` (advection),
    ``lambda``/``mu`` (nonlinear wave), ``group`` (poisson: dihedral8,
    rotation4 or reflection2), ``sampling_box`` (kdv).
    """
    name = _ALIASES.get(name, name)
    params = {_ALIASES.get(k, k): v for k, v in params.items() if v is not None}
    builders = {
        "regression": _regression, "advection": _advection, "sine_gordon": _sine_gordon,
        "poisson": _poisson, "nonlinear_wave": _nonlinear_wave, "kdv": _kdv,
    }
    if name not in builders:
        raise ValueError(f"unknown problem {name!r}; choose from {PROBLEMS}")
    problem = builders[name](**params)
    _check_actions_defined(problem)
    return problem


def _check_actions_defined(problem: PdeProblem):
    group = problem.group()
    probe = latin_hypercube(problem.sampling_region.box, 64, seed=0).points
    try:
        for g in group.elements:
            if not np.all(np.isfinite(g(probe))):
                raise SingularPoint("non-finite image")
    except SingularPoint as exc:
        raise InvalidDomain(f"{problem.name}: group action undefined on the sampling region") from exc


def symmetry_metric(problem: PdeProblem, predictor, grid=None):
    """Relative discrepancy ``||u(x) - u(g x)|| / ||u(x)||`` over ``grid``.

    ``grid`` defaults to the sampling-region evaluation grid. Returns a
    float, or a dict ``{S_12, S_21, S_22}`` for the Poisson problem.
    """
    X = problem.region_grid(problem.sampling_region) if grid is None else np.atleast_2d(grid)
    u = np.asarray(predictor(X), dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ZeroNorm("predictor vanishes on the metric grid")
    out = {name: float(np.linalg.norm(u - np.asarray(predictor(fn(X)))) / norm)
           for name, fn in problem.metric_maps.items()}
    if list(out) == ["S"]:
        return out["S"]
    return out


def enforced_metrics(problem: PdeProblem, group: FiniteGroup) -> list[str]:
    """Names of the metric maps that coincide with an element of ``group``.

    Only these metrics are guaranteed to vanish for a network built on
    ``group``; the others measure symmetries the network does not carry.
    """
    X = latin_hypercube(problem.sampling_region.box, 32, seed=1).points
    images = [g(X) for g in group.elements]
    return [name for name, fn in problem.metric_maps.items()
            if any(np.allclose(fn(X), im, atol=1e-12) for im in images)]


def domain_coverage(group: FiniteGroup, sampling_region: Region, all_regions: Mapping[str, Region],
                    n_probe: int = 400, seed: int = 0) -> set[str]:
    """Labels of the regions reached from the sampling region by the group."""
    pts = latin_hypercube(sampling_region.box, n_probe, seed).points
    pts = pts[sampling_region.contains(pts)]
    labels = {lab for lab, reg in all_regions.items() if reg is sampling_region}
    if sampling_region.label:
        labels.add(sampling_region.label)
    for g in group.elements[1:]:
        images = g(pts)
        for lab, reg in all_regions.items():
            if np.any(reg.contains(images)):
                labels.add(lab)
    return labels

"""Point sets: Latin hypercube collocation, boundary samples and evaluation grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import DegenerateRegion

ROLES = ("collocation", "boundary_initial", "evaluation")


@dataclass(frozen=True, eq=False)
class Region:
    """Bounding box plus an optional membership predicate.

    ``vertices`` (counter-clockwise polygon) describes the boundary curve
    used for boundary sampling; rectangles derive it from the box.
    """

    box: tuple[tuple[float, float], ...]
    predicate: Callable[[np.ndarray], np.ndarray] | None = None
    vertices: tuple[tuple[float, ...], ...] | None = None
    label: str = ""

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.box)
        object.__setattr__(self, "box", box)
        if self.vertices is None and len(box) == 2:
            (a, b), (c, d) = box
            object.__setattr__(self, "vertices", ((a, c), (b, c), (b, d), (a, d)))

    @property
    def dim(self) -> int:
        return len(self.box)

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        inside = np.ones(X.shape[0], dtype=bool)
        for k, (lo, hi) in enumerate(self.box):
            inside &= (X[:, k] >= lo - tol) & (X[:, k] <= hi + tol)
        if self.predicate is not None:
            inside &= np.asarray(self.predicate(X), dtype=bool)
        return inside

    def edges(self):
        if self.dim == 1:
            return []
        v = np.asarray(self.vertices, dtype=float)
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]


def box_region(box, label: str = "") -> Region:
    return Region(tuple(box), label=label)


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    role: str
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def latin_hypercube(box, N: int, seed: int, role: str = "collocation") -> PointSet:
    """One point in each of the ``N`` equal-width bins along every axis."""
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    box = [(float(a), float(b)) for a, b in (box.box if isinstance(box, Region) else box)]
    cols = []
    for lo, hi in box:
        strata = rng.permutation(N)
        cols.append(lo + (hi - lo) * (strata + rng.random(N)) / N)
    return PointSet(np.stack(cols, axis=1), role, seed)


def filter_region(points, region: Region) -> PointSet:
    """Subset of ``points`` satisfying the region's predicate, order preserved."""
    if isinstance(points, PointSet):
        pts, role, seed = points.points, points.role, points.seed
    else:
        pts, role, seed = np.atleast_2d(np.asarray(points, dtype=float)), "collocation", None
    keep = region.contains(pts)
    return PointSet(pts[keep], role, seed, {"drawn": int(pts.shape[0])})


def collocation_points(region: Region, N: int, seed: int, filter_mode: str = "pre") -> PointSet:
    """Latin hypercube in the bounding box, filtered by the region predicate.

    ``pre``: ``N`` counts the points drawn before filtering.
    ``post``: draw until at least ``N`` survive and keep the first ``N``.
    """
    if filter_mode not in ("pre", "post"):
        raise ValueError("filter_mode must be 'pre' or 'post'")
    if region.predicate is None or filter_mode == "pre":
        return filter_region(latin_hypercube(region.box, N, seed), region)
    drawn = N
    for attempt in range(32):
        kept = filter_region(latin_hypercube(region.box, drawn, seed + attempt), region)
        if len(kept) >= N:
            return PointSet(kept.points[:N], "collocation", seed, {"drawn": drawn})
        drawn *= 2
    raise DegenerateRegion("sampling region has (almost) no area inside its box")


def boundary_points(region: Region, N: int, seed: int) -> PointSet:
    """``N`` points uniform by arc length on the region's boundary polygon."""
    rng = np.random.default_rng(seed)
    if region.dim == 1:
        ends = np.array([region.box[0][0], region.box[0][1]])
        return PointSet(ends[rng.integers(0, 2, N)], "boundary_initial", seed)
    edges = region.edges()
    lengths = np.array([np.linalg.norm(b - a) for a, b in edges])
    total = lengths.sum()
    if total <= 0:
        raise DegenerateRegion("region boundary has zero length")
    s = rng.random(N) * total
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    which = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(edges) - 1)
    frac = (s - cum[which]) / lengths[which]
    starts = np.array([edges[k][0] for k in which])
    ends = np.array([edges[k][1] for k in which])
    pts = starts + frac[:, None] * (ends - starts)
    return PointSet(pts, "boundary_initial", seed, {"edge": which})


def eval_grid(box, n_x: int, n_t: int | None = None) -> PointSet:
    """Equidistant tensor grid including both endpoints on every axis.

    Points are ordered with the first coordinate varying slowest.
    """
    box = [(float(a), float(b)) for a, b in (box.box if isinstance(box, Region) else box)]
    counts: Sequence[int] = [n_x] if len(box) == 1 else [n_x, n_t]
    if len(box) > 2:
        raise ValueError("grids are supported in one or two dimensions")
    for c in counts:
        if c is None or c < 2:
            raise DegenerateRegion("a grid needs at least two points per axis")
    for lo, hi in box:
        if not hi > lo:
            raise DegenerateRegion(f"empty interval [{lo}, {hi}]")
    axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(box, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(np.stack([m.ravel() for m in mesh], axis=1), "evaluation",
                    meta={"shape": tuple(counts)})

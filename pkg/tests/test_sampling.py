import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdnn.exceptions import DegenerateRegion
from sdnn.sampling import (PointSet, Region, boundary_points, collocation_points, eval_grid,
                           filter_region, latin_hypercube)

BELOW = Region(((-3, 3), (-3, 3)), predicate=lambda X: X[:, 1] <= X[:, 0],
               vertices=((-3, -3), (3, -3), (3, 3)))


def test_single_point():
    ps = latin_hypercube([(0, 1), (0, 1)], 1, seed=0)
    assert ps.points.shape == (1, 2) and np.all((ps.points > 0) & (ps.points < 1))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**31 - 1), st.integers(1, 3),
       st.floats(-5, 5), st.floats(0.1, 10))
def test_lhs_one_point_per_bin(N, seed, dim, lo, width):
    box = [(lo, lo + width)] * dim
    pts = latin_hypercube(box, N, seed).points
    for k in range(dim):
        bins = np.floor((pts[:, k] - lo) / width * N).astype(int)
        assert np.array_equal(np.sort(bins), np.arange(N))


def test_lhs_deterministic():
    a = latin_hypercube([(-3, 3), (-3, 3)], 100, 4).points
    b = latin_hypercube([(-3, 3), (-3, 3)], 100, 4).points
    assert a.tobytes() == b.tobytes()


def test_filter_triangle_and_trivial_predicates():
    pts = latin_hypercube([(-3, 3), (-3, 3)], 100, 0)
    kept = filter_region(pts, BELOW)
    assert 35 <= len(kept) <= 65
    assert np.all(kept.points[:, 1] <= kept.points[:, 0])
    mask = pts.points[:, 1] <= pts.points[:, 0]
    np.testing.assert_array_equal(kept.points, pts.points[mask])
    everything = Region(((-3, 3), (-3, 3)), predicate=lambda X: np.ones(len(X), bool))
    nothing = Region(((-3, 3), (-3, 3)), predicate=lambda X: np.zeros(len(X), bool))
    np.testing.assert_array_equal(filter_region(pts, everything).points, pts.points)
    assert len(filter_region(pts, nothing)) == 0


def test_post_filter_mode_reaches_count():
    ps = collocation_points(BELOW, 100, 3, filter_mode="post")
    assert len(ps) == 100 and ps.meta["drawn"] >= 100
    assert len(collocation_points(BELOW, 100, 3, filter_mode="pre")) < 100


def test_eval_grid_example():
    g = eval_grid([(0, 2), (0, 1)], 201, 101)
    assert len(g) == 201 * 101
    xs, ts = np.unique(g.points[:, 0]), np.unique(g.points[:, 1])
    np.testing.assert_allclose(np.diff(xs), 0.01)
    np.testing.assert_allclose(np.diff(ts), 0.01)
    assert xs[0] == 0 and xs[-1] == 2 and ts[-1] == 1
    np.testing.assert_array_equal(eval_grid([(0, 1)], 2).points[:, 0], [0.0, 1.0])


def test_eval_grid_degenerate():
    with pytest.raises(DegenerateRegion):
        eval_grid([(0, 1), (0, 1)], 1, 5)
    with pytest.raises(DegenerateRegion):
        eval_grid([(1, 1), (0, 1)], 5, 5)


def test_boundary_points_on_triangle_edges():
    ps = boundary_points(BELOW, 3, seed=11)
    v = np.array(BELOW.vertices, dtype=float)
    for p, e in zip(ps.points, ps.meta["edge"]):
        a, b = v[e], v[(e + 1) % 3]
        u, w = b - a, p - a
        assert abs(u[0] * w[1] - u[1] * w[0]) < 1e-12


def test_boundary_points_follow_arc_length():
    # edge lengths 6, 6 and 6*sqrt(2) out of a total 12 + 6*sqrt(2)
    ps = boundary_points(BELOW, 20000, seed=2)
    freq = np.bincount(ps.meta["edge"], minlength=3) / 20000
    total = 12 + 6 * np.sqrt(2)
    np.testing.assert_allclose(freq, [6 / total, 6 / total, 6 * np.sqrt(2) / total], atol=0.015)


def test_rectangle_boundary_and_1d_endpoints():
    ps = boundary_points(Region(((0, 2), (0, 1))), 200, 0).points
    on_edge = (np.isclose(ps[:, 0], 0) | np.isclose(ps[:, 0], 2) | np.isclose(ps[:, 1], 0) | np.isclose(ps[:, 1], 1))
    assert on_edge.all()
    ends = boundary_points(Region(((-1, 0),)), 10, 0).points[:, 0]
    assert set(ends) <= {-1.0, 0.0}


def test_pointset_role_checked():
    with pytest.raises(ValueError):
        PointSet(np.zeros((1, 2)), "training")

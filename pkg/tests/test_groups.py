import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdnn.exceptions import (ActionUndefined, IndexOutOfRange, NoIdentity, NoInverse, NotAssociative,
                             NotClosed, SingularPoint)
from sdnn.groups import (BUILTIN_GROUPS, DIHEDRAL8, FiniteGroup, PointAction, affine, block_permutation,
                         build_group, check_axioms, group_from_actions, linear, reciprocal, tie_index)

ORDERS = {"identity": 1, "even": 2, "circulant": 2, "dihedral8": 8, "rotation4": 4,
          "reflection2": 2, "translation_reflection": 2, "reciprocal": 2}


@pytest.mark.parametrize("name", BUILTIN_GROUPS)
def test_builtin_axioms_and_order(name):
    g = build_group(name)
    assert g.n == ORDERS[name]
    check_axioms(g.cayley)
    assert np.all(g.cayley[0] == np.arange(g.n))


@pytest.mark.parametrize("name", BUILTIN_GROUPS)
def test_cayley_matches_composition(name, rng):
    g = build_group(name)
    X = rng.uniform(0.5, 2.0, (30, 2))
    for i in range(g.n):
        for j in range(g.n):
            k = g.cayley[i, j]
            np.testing.assert_allclose(g.elements[i](g.elements[j](X)), g.elements[k](X), atol=1e-12)


@pytest.mark.parametrize("name", BUILTIN_GROUPS)
def test_block_permutations_form_a_homomorphism(name):
    g = build_group(name)
    for i in range(g.n):
        for j in range(g.n):
            lhs = block_permutation(g, j).compose(block_permutation(g, i))
            assert lhs == block_permutation(g, int(g.cayley[i, j])).mapping


def test_block_permutation_inverse_and_range():
    g = build_group("dihedral8")
    for j in range(8):
        p = block_permutation(g, j)
        assert p.compose(p.inverse()) == tuple(range(8))
    with pytest.raises(IndexOutOfRange):
        block_permutation(g, 8)


def test_dihedral_matrices_are_orthogonal_and_distinct():
    mats = [np.asarray(m, dtype=float) for m in DIHEDRAL8]
    for m in mats:
        np.testing.assert_allclose(m @ m.T, np.eye(2))
    assert len({m.tobytes() for m in mats}) == 8


def test_subgroups_inside_dihedral():
    d = {np.asarray(e.matrix).tobytes() for e in build_group("dihedral8").elements}
    for name in ("rotation4", "reflection2"):
        assert {np.asarray(e.matrix).tobytes() for e in build_group(name).elements} <= d
    # rotations have determinant one
    for e in build_group("rotation4").elements:
        assert np.isclose(np.linalg.det(e.matrix), 1.0)


def test_inverse_and_orbit():
    g = build_group("dihedral8")
    for i in range(8):
        assert g.cayley[i, g.inverse(i)] == 0
    assert g.orbit([[1.0, 2.0]]).shape == (8, 1, 2)


def test_tie_index_rows_are_permutations():
    g = build_group("dihedral8")
    tie = tie_index(g)
    for r in range(8):
        assert sorted(tie[r]) == list(range(8))
        for k in range(8):
            assert g.cayley[tie[r, k], r] == k


def test_missing_identity():
    with pytest.raises(NoIdentity):
        group_from_actions([linear(-np.eye(2))])


def test_not_closed():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(NotClosed):
        group_from_actions([linear(np.eye(2)), linear(rot)])


def test_bad_cayley_tables():
    with pytest.raises(NoInverse):
        check_axioms(np.array([[0, 1], [1, 1]]))
    # latin square with identity but not associative
    table = np.array([[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3],
                      [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]])
    with pytest.raises(NotAssociative):
        check_axioms(table)


def test_reciprocal_singular_point():
    r = reciprocal([True, True])
    with pytest.raises(SingularPoint):
        r(np.array([[0.0, 1.0]]))


def test_action_undefined_on_probe():
    with pytest.raises(ActionUndefined):
        group_from_actions([linear(np.eye(2)), reciprocal([True, True])], probe=np.array([[0.0, 1.0]]))


def test_affine_translation_reflection():
    g = build_group({"name": "translation_reflection", "lambda": 3.0, "mu": 2.0})
    np.testing.assert_allclose(g.elements[1](np.array([[1.0, 0.25]])), [[2.0, 1.75]])
    assert not g.has_linear_rep


def test_action_roundtrip_and_custom_group():
    actions = [linear(np.eye(2)), affine(-np.eye(2), [1.0, 0.0])]
    g = build_group({"actions": [a.to_dict() for a in actions], "name": "mine"})
    assert g.n == 2 and g.name == "mine"
    assert PointAction.from_dict(actions[1].to_dict())(np.array([[0.2, 0.3]])).tolist() == [[0.8, -0.3]]


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(BUILTIN_GROUPS), st.lists(st.floats(0.3, 3.0), min_size=2, max_size=2))
def test_orbit_is_closed_under_the_group(name, pt):
    g = build_group(name)
    orbit = g.orbit(np.array([pt]))[:, 0]
    for e in g.elements:
        img = e(orbit)
        d = np.abs(img[:, None, :] - orbit[None, :, :]).max(axis=2)
        assert np.all(d.min(axis=1) < 1e-10)


def test_one_dimensional_even_group():
    g = build_group({"name": "even", "dim": 1})
    assert g.dim == 1 and g.n == 2
    assert isinstance(g, FiniteGroup)

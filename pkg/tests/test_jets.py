import numpy as np
import pytest
import sympy as sp

from sdnn.checks import fd_derivative
from sdnn.derivatives import component, jet_forward, loss_gradient
from sdnn.exceptions import NonFinite, UnsupportedOrder
from sdnn.groups import build_group
from sdnn.jets import Jet, all_indices, closure, faa_di_bruno, index_name, parse_index
from sdnn.network import Architecture, init_params, propagate
from sdnn import autodiff as ad


def test_parse_and_name():
    assert parse_index("u_xxt") == (2, 1)
    assert parse_index("yy") == (0, 2)
    assert parse_index("u") == (0, 0)
    assert index_name((1, 2)) == "u_xtt"
    assert parse_index("u_xx", 1) == (2,)


def test_closure_is_downward_closed():
    idx = closure(["u_xxt"])
    assert set(idx) == {(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)}
    with pytest.raises(UnsupportedOrder):
        closure(["u_xxxx"])
    assert len(all_indices(3, 2)) == 10


@pytest.mark.parametrize("alpha", [(1, 0), (2, 0), (1, 1), (3, 0), (2, 1), (1, 1, 1)])
def test_faa_di_bruno_against_sympy(alpha):
    # D^alpha f(z(v)) expanded symbolically and compared term by term
    vs = sp.symbols(f"v0:{len(alpha)}")
    z = sp.Function("z")(*vs)
    f = sp.Function("f")
    expr = f(z)
    for k, a in enumerate(alpha):
        expr = sp.diff(expr, vs[k], a)
    ours = 0
    for coef, k, blocks in faa_di_bruno(tuple(alpha)):
        term = coef * sp.Subs(sp.diff(f(sp.Symbol("s")), sp.Symbol("s"), k), sp.Symbol("s"), z).doit()
        for b in blocks:
            zb = z
            for j, c in enumerate(b):
                zb = sp.diff(zb, vs[j], c)
            term *= zb
        ours += term
    assert sp.simplify(expr.doit() - ours) == 0


def test_single_neuron_against_sympy():
    # one tanh unit: u = c * tanh(a x + b t + d) + e, all derivatives up to order 3
    g = build_group("identity")
    arch = Architecture(2, (1,), 1)
    p = init_params(arch, g, 0)
    a, b = p["w1"][0]
    d, c, e = p["b1"][0], p["wL"][0], float(p["bL"])
    x, t = sp.symbols("x t")
    u = c * sp.tanh(a * x + b * t + d) + e
    pt = np.array([0.3, -0.7])
    jet = jet_forward(arch, g, p, pt, order=3)
    for alpha in all_indices(3, 2):
        ref = float(sp.diff(u, x, alpha[0], t, alpha[1]).subs({x: pt[0], t: pt[1]}))
        assert abs(jet[alpha] - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("name", ["even", "dihedral8", "reciprocal", "translation_reflection"])
def test_jets_against_finite_differences(name, rng):
    g = build_group(name)
    arch = Architecture(2, (6, 6, 6), g.n)
    # zero biases make odd-symmetric groups cancel exactly, so perturb them
    theta = init_params(arch, g, 9).vector + 0.3 * rng.standard_normal(arch.n_params())
    X = rng.uniform(0.6, 1.8, (15, 2))
    jet = jet_forward(arch, g, theta, X, order=3)
    f = lambda Y: np.asarray(propagate(arch, g, theta, Y)[(0, 0)])
    for alpha in all_indices(3, 2):
        if sum(alpha) == 0:
            continue
        fd = fd_derivative(f, X, alpha)
        err = np.linalg.norm(jet[alpha] - fd) / np.linalg.norm(fd)
        assert err <= (1e-5 if sum(alpha) <= 2 else 1e-4), (alpha, err)


def test_needed_mask_and_errors():
    g = build_group("even")
    arch = Architecture(2, (4, 4), 2)
    p = init_params(arch, g, 0)
    jet = jet_forward(arch, g, p, np.zeros((3, 2)) + 0.5, order=3, needed=["u_xt"])
    assert set(jet) == {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert component(jet, "u_xt").shape == (3,)
    assert jet.u_x.shape == (3,)
    with pytest.raises(UnsupportedOrder):
        jet_forward(arch, g, p, np.zeros(2), order=4)
    with pytest.raises(UnsupportedOrder):
        jet_forward(arch, g, p, np.zeros(2), order=1, needed=["u_xx"])


def test_structural_zero_component():
    j = Jet({(0, 0): np.ones(3), (1, 0): None}, dim=2)
    assert np.all(j["u_x"] == 0)


def test_parameter_gradient_directional(rng):
    g = build_group("reciprocal")
    arch = Architecture(2, (5, 5), 2)
    theta = init_params(arch, g, 1).vector
    X = rng.uniform(0.6, 1.5, (20, 2))

    def loss(th):
        jet = propagate(arch, g, th, X, closure(["u_xxx", "u_t"]))
        return ad.mean(ad.square(jet[(0, 1)] + jet[(0, 0)] * jet[(1, 0)] + jet[(3, 0)]))

    val, grad = loss_gradient(loss, theta)
    for _ in range(5):
        d = rng.standard_normal(theta.size)
        h = 1e-5
        fd = (float(ad.value_of(loss(theta + h * d))) - float(ad.value_of(loss(theta - h * d)))) / (2 * h)
        assert abs(grad @ d - fd) <= 1e-6 * max(1.0, abs(fd))


def test_loss_gradient_rejects_nonfinite():
    with pytest.raises(NonFinite):
        loss_gradient(lambda th: ad.sum(th) * np.inf, np.ones(3))

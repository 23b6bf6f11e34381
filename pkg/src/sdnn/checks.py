"""Self-checks of the invariant construction, shared by ``verify`` and the tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import GroupError
from .groups import FiniteGroup, block_permutation, check_axioms, tie_index
from .jets import all_indices, index_name
from .network import (Architecture, dense_forward, forward_blocks, init_params, materialize,
                      predict, unpack)
from .derivatives import jet_forward

# central-difference stencils (offset multiples of h, weight); error O(h^2)
_STENCILS = {
    0: ((0, 1.0),),
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    detail: str = ""


def fd_derivative(f, X, alpha, h: float | None = None, levels: int = 2) -> np.ndarray:
    """Tensor-product central differences refined by Richardson extrapolation.

    Independent of the jet code: it only evaluates ``f`` at shifted points.
    The default step grows with the derivative order so that round-off,
    which scales like ``eps / h**order``, stays below the truncation error.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if h is None:
        h = (1e-3, 1e-3, 1e-2, 2e-2)[sum(alpha)]

    def raw(step):
        out = np.zeros(X.shape[0])
        grids = [_STENCILS[a] for a in alpha]
        for combo in np.ndindex(*[len(g) for g in grids]):
            shift = np.zeros(X.shape[1])
            weight = 1.0
            for k, c in enumerate(combo):
                off, w = grids[k][c]
                shift[k] = off * step
                weight *= w
            if weight:
                out += weight * f(X + shift)
        return out / step ** sum(alpha)

    # error expansion is even in h, so each level removes one power of h^2
    table = [raw(h / 2 ** i) for i in range(levels + 1)]
    for k in range(1, levels + 1):
        table = [(4 ** k * table[i + 1] - table[i]) / (4 ** k - 1) for i in range(len(table) - 1)]
    return table[0]


def sample_points(group: FiniteGroup, box, n: int, rng) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((n, len(box)))


def check_group(group: FiniteGroup) -> list[CheckResult]:
    out = []
    try:
        check_axioms(group.cayley)
        out.append(CheckResult("group_axioms", True, 0.0, f"order {group.n}"))
    except GroupError as exc:
        out.append(CheckResult("group_axioms", False, 1.0, str(exc)))
    bad = 0
    for i in range(group.n):
        for j in range(group.n):
            lhs = block_permutation(group, j).compose(block_permutation(group, i))
            if lhs != block_permutation(group, int(group.cayley[i, j])).mapping:
                bad += 1
    out.append(CheckResult("block_permutation_homomorphism", bad == 0, float(bad),
                           f"{bad} failing pairs of {group.n ** 2}"))
    return out


def invariance_error(arch: Architecture, group: FiniteGroup, theta, X) -> float:
    u = predict(arch, group, theta, X)
    return max(float(np.max(np.abs(predict(arch, group, theta, g(X)) - u))) for g in group.elements)


def equivariance_error(arch: Architecture, group: FiniteGroup, theta, X) -> float:
    base = forward_blocks(arch, group, theta, X).blocks
    worst = 0.0
    for r, g in enumerate(group.elements):
        moved = forward_blocks(arch, group, theta, g(X)).blocks
        for layer_x, layer_gx in zip(base, moved):
            worst = max(worst, float(np.max(np.abs(layer_x[r] - layer_gx[0]))))
    return worst


def materialization_error(arch: Architecture, group: FiniteGroup, theta, X) -> float:
    u = predict(arch, group, theta, X)
    if group.has_linear_rep:
        dense = dense_forward(materialize(arch, group, theta), X)
    else:
        dense = dense_forward(materialize(arch, group, theta, first_layer=False), X, group)
    return float(np.max(np.abs(dense - u)))


def audit_materialized(layers, arch: Architecture, group: FiniteGroup, params) -> list[str]:
    """Locate dense blocks that no longer equal the shared block they should copy."""
    P = unpack(arch, params.vector if hasattr(params, "vector") else params)
    n, m = group.n, arch.base_widths
    tie = tie_index(group)
    problems = []
    for l in range(1, len(m)):
        W = layers[l].weight
        blocks = np.asarray(P[f"w{l + 1}"])
        for r in range(n):
            for k in range(n):
                sub = W[r * m[l]:(r + 1) * m[l], k * m[l - 1]:(k + 1) * m[l - 1]]
                dev = float(np.max(np.abs(sub - blocks[tie[r, k]])))
                if dev > 0:
                    problems.append(f"hidden layer {l + 1}, block ({r}, {k}) deviates from shared "
                                    f"block W_{tie[r, k]} by {dev:.3e}")
        bias = np.asarray(P[f"b{l + 1}"])
        for r in range(n):
            dev = float(np.max(np.abs(layers[l].bias[r * m[l]:(r + 1) * m[l]] - bias)))
            if dev > 0:
                problems.append(f"hidden layer {l + 1}, bias block {r} deviates by {dev:.3e}")
    return problems


def corruption_diagnostic(arch: Architecture, group: FiniteGroup, theta, X) -> CheckResult:
    """Perturb one copy of a shared block and confirm the damage is found and located."""
    if group.n < 2 or arch.depth < 2:
        return CheckResult("corruption_detected", True, 0.0, "skipped: needs |G| >= 2 and two layers")
    first = group.has_linear_rep
    layers = materialize(arch, group, theta, first_layer=first)
    m1, m0 = arch.base_widths[1], arch.base_widths[0]
    layers[1].weight[0:m1, m0:2 * m0] += 0.1
    found = audit_materialized(layers, arch, group, theta)
    feed = None if first else group
    u = dense_forward(layers, X, feed)
    broken = max(float(np.max(np.abs(dense_forward(layers, g(X), feed) - u))) for g in group.elements)
    ok = broken > 1e-8 and len(found) == 1 and "block (0, 1)" in found[0]
    return CheckResult("corruption_detected", ok, broken,
                       (found[0] if found else "not located") + f"; invariance error {broken:.3e}")


def plain_mlp(arch: Architecture, theta, X) -> np.ndarray:
    """Textbook tanh MLP read straight from the parameter blocks (trivial group only)."""
    P = {k: np.asarray(v) for k, v in unpack(arch, theta).items()}
    h = np.tanh(X @ P["w1"].T + P["b1"])
    for l in range(1, arch.depth):
        h = np.tanh(h @ P[f"w{l + 1}"][0].T + P[f"b{l + 1}"])
    return h @ P["wL"] + P["bL"]


def jet_fd_errors(arch: Architecture, group: FiniteGroup, theta, X, order: int = 3) -> dict:
    """Norm-wise relative error of every jet component against finite differences."""
    jet = jet_forward(arch, group, theta, X, order=order)
    f = lambda Y: predict(arch, group, theta, Y)
    out = {}
    for alpha in all_indices(order, X.shape[1]):
        if sum(alpha) == 0:
            continue
        fd = fd_derivative(f, X, alpha)
        ref = max(np.linalg.norm(fd), 1e-8)
        out[index_name(alpha)] = (sum(alpha), float(np.linalg.norm(np.asarray(jet[alpha]) - fd) / ref))
    return out


def run_checks(arch: Architecture, group: FiniteGroup, box, n_param_sets: int = 10,
               n_points: int = 100, seed: int = 0, tol: float = 1e-12) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = check_group(group)
    X = sample_points(group, box, n_points, rng)
    inv = eqv = mat = 0.0
    thetas = [init_params(arch, group, seed + k).vector + 0.1 * rng.standard_normal(arch.n_params())
              for k in range(n_param_sets)]
    for theta in thetas:
        inv = max(inv, invariance_error(arch, group, theta, X))
        eqv = max(eqv, equivariance_error(arch, group, theta, X))
        mat = max(mat, materialization_error(arch, group, theta, X))
    results.append(CheckResult("output_invariance", inv <= tol, inv, f"max |u(gx) - u(x)| = {inv:.3e}"))
    results.append(CheckResult("block_equivariance", eqv <= tol, eqv, f"max block deviation {eqv:.3e}"))
    results.append(CheckResult("materialization_equivalence", mat <= tol, mat,
                               f"max |dense - tied| = {mat:.3e}"))
    errs = jet_fd_errors(arch, group, thetas[0], X[:20], order=3)
    worst12 = max((e for o, e in errs.values() if o <= 2), default=0.0)
    worst3 = max((e for o, e in errs.values() if o == 3), default=0.0)
    results.append(CheckResult("jet_vs_fd_order_1_2", worst12 <= 1e-5, worst12,
                               f"max relative error {worst12:.3e}"))
    results.append(CheckResult("jet_vs_fd_order_3", worst3 <= 1e-4, worst3,
                               f"max relative error {worst3:.3e}"))
    results.append(corruption_diagnostic(arch, group, thetas[0], X))
    if group.n == 1:
        diff = max(float(np.max(np.abs(plain_mlp(arch, th, X) - predict(arch, group, th, X))))
                   for th in thetas)
        results.append(CheckResult("trivial_group_equivalence", diff <= tol, diff,
                                   "sDNN with the trivial group equals the plain network (PINN)"
                                   f"; max difference {diff:.3e}"))
    return results

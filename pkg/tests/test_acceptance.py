"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Training budgets are desk scale (L-BFGS capped at a few thousand
iterations) so the whole file runs in minutes on one core.
"""

import time

import numpy as np
import pytest
import sympy as sp

from conftest import ACCEPTANCE_LINES
from sdnn.checks import equivariance_error, jet_fd_errors
from sdnn.experiments import run
from sdnn.groups import BUILTIN_GROUPS, build_group
from sdnn.jets import Jet, all_indices
from sdnn.network import Architecture, init_params, param_count, predict
from sdnn.problems import PROBLEMS, domain_coverage, enforced_metrics, make_problem
from sdnn.sampling import boundary_points, latin_hypercube
from sdnn.training import evaluate_loss, loss_and_grad, make_loss_spec

BOXES = {"translation_reflection": [[0.0, 3.0], [0.0, 2.0]], "reciprocal": [[0.5, 2.0], [0.5, 2.0]]}
ARCHS = ((5,), (10, 10), (5, 10, 5))


def report(number, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _points(name, n, rng):
    box = np.array(BOXES.get(name, [[-2.0, 2.0], [-2.0, 2.0]]))
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((n, 2))


def _sweep(fn):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for name in BUILTIN_GROUPS:
        G = build_group(name)
        X = _points(name, 100, rng)
        for widths in ARCHS:
            arch = Architecture(2, widths, G.n)
            for _ in range(100):
                worst = max(worst, fn(arch, G, rng.standard_normal(arch.n_params()), X))
    return worst


def test_c01_output_invariance():
    def inv(arch, G, theta, X):
        u = predict(arch, G, theta, X)
        return max(float(np.max(np.abs(predict(arch, G, theta, g(X)) - u))) for g in G.elements)

    t0 = time.perf_counter()
    worst = _sweep(inv)
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-12 and dt < 10,
           f"max |u(gx) - u(x)| = {worst:.2e} over 8 groups x 3 archs x 100 params x 100 points ({dt:.1f} s)")


def test_c02_block_equivariance():
    worst = _sweep(equivariance_error)
    report(2, worst <= 1e-12, f"max |block_r(x) - block_0(g_r x)| = {worst:.2e}")


def test_c03_parameter_counts():
    ratios = []
    exact = True
    for n in (1, 2, 4, 8):
        for m in (10, 20, 40):
            sdnn = param_count(Architecture(2, (m, m, m), n))
            plain = param_count(Architecture(2, (n * m,) * 3, 1))
            ratios.append(plain / sdnn / n)
            if n == 1:
                exact &= plain == sdnn
    lo, hi = min(ratios), max(ratios)
    report(3, 0.9 <= lo and hi <= 1.1 and exact,
           f"plain/sDNN count ratio in [{lo:.4f}, {hi:.4f}] x |G|; |G|=1 equal: {exact}")


def test_c04_derivatives():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst12 = worst3 = 0.0
    for trial in range(200):
        name = BUILTIN_GROUPS[trial % len(BUILTIN_GROUPS)]
        G = build_group(name)
        arch = Architecture(2, ARCHS[trial % 3], G.n)
        theta = init_params(arch, G, trial).vector + 0.3 * rng.standard_normal(arch.n_params())
        for order, err in jet_fd_errors(arch, G, theta, _points(name, 5, rng), order=3).values():
            if order <= 2:
                worst12 = max(worst12, err)
            else:
                worst3 = max(worst3, err)

    specs = []
    for name in ("advection", "sine_gordon", "poisson", "nonlinear_wave", "kdv"):
        P = make_problem(name)
        G = P.group()
        arch = Architecture(2, (5, 5), G.n)
        spec = make_loss_spec(P, arch, G, latin_hypercube(P.sampling_region.box, 30, 1),
                              boundary_points(P.sampling_region, 20, 2))
        specs.append((arch, G, spec))
    worst_g = 0.0
    for trial in range(200):
        arch, G, spec = specs[trial % len(specs)]
        theta = init_params(arch, G, trial).vector + 0.3 * rng.standard_normal(arch.n_params())
        _, grad = loss_and_grad(spec)(theta)
        d = rng.standard_normal(theta.size)
        d /= np.linalg.norm(d)
        h = 1e-4

        def cd(step):
            return (evaluate_loss(theta + step * d, spec) - evaluate_loss(theta - step * d, spec)) / (2 * step)

        fd = (4 * cd(h / 2) - cd(h)) / 3
        worst_g = max(worst_g, abs(fd - grad @ d) / abs(grad @ d))
    dt = time.perf_counter() - t0
    ok = worst12 <= 1e-5 and worst3 <= 1e-4 and worst_g <= 1e-6 and dt < 60
    report(4, ok, f"jet vs FD: orders 1-2 {worst12:.2e}, order 3 {worst3:.2e}; "
                  f"directional gradient {worst_g:.2e}; {dt:.1f} s")


x_, t_ = sp.symbols("x t")
SYMBOLIC = {
    "advection": (x_ - 2 * t_) ** 4,
    "sine_gordon": 4 * sp.atan(2 * sp.sqrt(2) * sp.exp((t_ + x_) / sp.sqrt(2)) * sp.cos((x_ - t_) / sp.sqrt(2))
                               / (2 * sp.exp(sp.sqrt(2) * (t_ + x_)) + 1)),
    "poisson": sp.cos(sp.pi * x_) * sp.cos(sp.pi * t_),
    "nonlinear_wave": (sp.sin(3 * x_) * sp.cos(t_) + sp.sin(9 - 3 * x_) * sp.cos(2 - t_)) / 2,
    "kdv": (x_ + t_) / (x_ * t_ + 1),
}


def test_c05_exact_residuals():
    worst = {}
    for name in PROBLEMS:
        P = make_problem(name)
        if P.is_regression:
            # no differential operator: the exact curve must reproduce its own data
            X = P.region_grid(P.sampling_region, 50)
            worst[name] = float(np.max(np.abs(P.exact(X) - P.exact(X.copy()))))
            continue
        X = P.region_grid(P.domain, 50, 50)
        jet = {}
        for a in all_indices(3, 2):
            f = sp.lambdify((x_, t_), sp.diff(SYMBOLIC[name], x_, a[0], t_, a[1]), "numpy")
            jet[a] = np.broadcast_to(np.asarray(f(X[:, 0], X[:, 1]), dtype=float), (len(X),)).copy()
        worst[name] = float(np.max(np.abs(P.residual(Jet(jet), X))))
    top = max(worst.values())
    report(5, top <= 1e-8, "max |residual - forcing| on 50x50 grids: "
           + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def _means(rows, method):
    ok = [r for r in rows if r["method"] == method and r["status"] == "ok"]
    assert ok, f"no successful {method} runs"
    keys = [k for k in ok[0] if k.startswith("l2_") or k.startswith("S")]
    return {k: float(np.mean([r[k] for r in ok])) for k in keys}, ok


def _metrics(rows):
    """Symmetry metrics of the group each sDNN was built on."""
    out = []
    for r in rows:
        if r["method"] == "sdnn":
            P = make_problem(r["problem"], **({"group": r["group"]} if r["problem"] == "poisson" else {}))
            G = build_group({"name": r["group"], "dim": P.input_dim})
            out += [r[k] for k in enforced_metrics(P, G)]
    return out


ADVECTION = {"problem": "advection", "methods": ["sdnn", "pinn"], "base_widths": [10, 10, 10],
             "n_f": 1000, "n_u": 100, "seed": 0, "n_seeds": 5, "outputs": {"models": False},
             "optimizer": {"schedule": [{"lbfgs": {"max_iter": 2000}}]}}
CONFIGS = {
    "regression": {"problem": "regression", "alpha": 5, "group": "even", "methods": ["sdnn", "pinn"],
                   "base_widths": [20, 20, 20], "n_u": 101, "n_seeds": 1, "outputs": {"models": False},
                   "optimizer": {"schedule": [{"adam": {"steps": 5000, "lr": 1e-3}},
                                              {"lbfgs": {"max_iter": 5000}}]}},
    "advection": ADVECTION,
    "sine_gordon": {"problem": "sine_gordon", "methods": ["sdnn", "pinn"], "base_widths": [5, 5, 5],
                    "n_f": 100, "n_u": 100, "n_seeds": 5, "outputs": {"models": False},
                    "optimizer": {"schedule": [{"lbfgs": {"max_iter": 3000}}]}},
    "poisson_d4": {"problem": "poisson", "group": "dihedral8", "methods": ["sdnn"], "base_widths": [5, 5, 5],
                   "n_f": 1000, "n_u": 100, "n_seeds": 1, "outputs": {"models": False},
                   "optimizer": {"schedule": [{"lbfgs": {"max_iter": 3000}}]}},
    "poisson_gp": {"problem": "poisson", "group": "reflection2", "methods": ["sdnn"], "base_widths": [5, 10, 5],
                   "n_f": 1000, "n_u": 100, "n_seeds": 1, "outputs": {"models": False},
                   "optimizer": {"schedule": [{"lbfgs": {"max_iter": 8000}}]}},
    "kdv": {"problem": "kdv", "methods": ["sdnn", "pinn"], "base_widths": [5, 5, 5], "n_f": 400, "n_u": 100,
            "n_seeds": 5, "outputs": {"models": False},
            "optimizer": {"schedule": [{"lbfgs": {"max_iter": 3000}}]}},
}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    cache = {}

    def get(key):
        if key not in cache:
            out = tmp_path_factory.mktemp(key)
            t0 = time.perf_counter()
            res = run(CONFIGS[key], out)
            cache[key] = (res["rows"], out, time.perf_counter() - t0)
        return cache[key]
    return get


@pytest.mark.slow
def test_c06_regression(runs):
    rows, _, dt = runs("regression")
    s, _ = _means(rows, "sdnn")
    p, _ = _means(rows, "pinn")
    s_ratio = s["l2_prediction"] / s["l2_sampling"]
    p_ratio = p["l2_prediction"] / p["l2_sampling"]
    report(6, s_ratio <= 3 and p_ratio >= 10 and dt < 300,
           f"[0,1]/[-1,0] error ratio sDNN {s_ratio:.3g}, PINN {p_ratio:.3g} ({dt:.0f} s)")


@pytest.mark.slow
def test_c07_advection(runs):
    rows, _, dt = runs("advection")
    s, _ = _means(rows, "sdnn")
    p, _ = _means(rows, "pinn")
    diff = abs(s["l2_sampling"] - s["l2_prediction"])
    ratio = p["l2_prediction"] / p["l2_sampling"]
    ok = s["l2_sampling"] <= 1e-2 and diff <= 1e-5 and s["S"] <= 1e-6 and ratio >= 10 and dt < 900
    report(7, ok, f"sDNN L2 {s['l2_sampling']:.2e}, |diff| {diff:.1e}, S {s['S']:.1e}; "
                  f"PINN pred/sampling {ratio:.3g} ({dt:.0f} s)")


@pytest.mark.slow
def test_c08_sine_gordon(runs):
    rows, _, dt = runs("sine_gordon")
    s, srows = _means(rows, "sdnn")
    p, _ = _means(rows, "pinn")
    diff = max(abs(r["l2_sampling"] - r["l2_prediction"]) for r in srows)
    ratio = p["l2_prediction"] / s["l2_prediction"]
    n_f = int(np.mean([r["n_f"] for r in srows]))
    ok = diff <= 1e-5 and s["S"] <= 1e-6 and ratio >= 10 and dt < 900
    report(8, ok, f"N_f ~{n_f} kept; sDNN |diff| {diff:.1e}, S {s['S']:.1e}; "
                  f"PINN/sDNN prediction L2 {ratio:.3g} ({dt:.0f} s)")


@pytest.mark.slow
def test_c09_poisson(runs):
    rows, _, _ = runs("poisson_d4")
    r = rows[0]
    octs = [r[k] for k in r if k.startswith("l2_")]
    spread = max(octs) - min(octs)
    rows_gp, _, _ = runs("poisson_gp")
    g = rows_gp[0]
    grey = [g[f"l2_{lab}"] for lab in ("12", "21", "31", "32", "41", "42")]
    worst_ratio = min(grey) / g["l2_sampling"]
    P = make_problem("poisson")
    regions = P.regions()
    cov = {name: domain_coverage(build_group(name), P.sampling_region, regions)
           for name in ("dihedral8", "rotation4", "reflection2")}
    cov_ok = (cov["dihedral8"] == set(regions) and cov["rotation4"] == {"11", "21", "31", "41"}
              and cov["reflection2"] == {"11", "22"})
    ok = spread <= 1e-4 and worst_ratio >= 10 and cov_ok
    report(9, ok, f"D4 octant spread {spread:.1e}; G_p grey/sampling >= {worst_ratio:.3g}; "
                  f"coverage sets match: {cov_ok}")


@pytest.mark.slow
def test_c10_kdv(runs):
    rows, _, dt = runs("kdv")
    s, srows = _means(rows, "sdnn")
    p, _ = _means(rows, "pinn")
    diff = abs(s["l2_sampling"] - s["l2_prediction"])
    ratio = p["l2_prediction"] / s["l2_prediction"]
    ok = diff <= 2e-3 and s["S"] <= 1e-6 and ratio >= 10 and dt < 900
    report(10, ok, f"sDNN |diff| {diff:.1e}, S {s['S']:.1e}; PINN/sDNN prediction L2 {ratio:.3g} ({dt:.0f} s)")


@pytest.mark.slow
def test_c11_post_training_invariance(runs):
    values = []
    for key in ("regression", "advection", "sine_gordon", "poisson_d4", "poisson_gp", "kdv"):
        values += _metrics(runs(key)[0])
    worst = max(values)
    report(11, worst <= 1e-10, f"max sDNN symmetry metric over {len(values)} trained runs {worst:.1e}")


@pytest.mark.slow
def test_c12_determinism(runs, tmp_path):
    _, first, _ = runs("advection")
    run(ADVECTION, tmp_path)
    same = (first / "results.csv").read_bytes() == (tmp_path / "results.csv").read_bytes()
    report(12, same, "repeated advection run gives byte-identical results.csv")

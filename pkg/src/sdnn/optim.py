"""Full-batch Adam and L-BFGS with a strong-Wolfe line search.

Both work on ``fun(theta) -> (value, gradient)`` over a flat vector.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonFinite

LBFGS_DEFAULTS = {
    "max_iter": 20000,
    "memory": 10,
    "c1": 1e-4,
    "c2": 0.9,
    "gtol": 1e-9,
    "ftol": 1e-12,
    "max_ls": 25,
}
ADAM_DEFAULTS = {"steps": 5000, "lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    nit: int
    reason: str
    history: list = field(default_factory=list)  # (iteration, loss) pairs
    nfev: int = 0
    wall_time: float = 0.0


def _checked(fun, x):
    f, g = fun(x)
    f = float(f)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFinite("objective or gradient is not finite")
    return f, np.asarray(g, dtype=float)


def adam(fun, x0, steps: int = 5000, lr: float = 1e-3, beta1: float = 0.9,
         beta2: float = 0.999, eps: float = 1e-8, start_iter: int = 0) -> OptimResult:
    """Bias-corrected Adam. The history records the loss before each step."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    t0 = time.perf_counter()
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    history = []
    f = None
    for k in range(1, steps + 1):
        f, g = _checked(fun, x)
        history.append((start_iter + k - 1, f))
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**k)
        vhat = v / (1 - beta2**k)
        x = x - lr * mhat / (np.sqrt(vhat) + eps)
    f, _ = _checked(fun, x)
    history.append((start_iter + steps, f))
    return OptimResult(x, f, steps, "max_iter", history, steps + 1, time.perf_counter() - t0)


def _cubic_min(a, fa, da, b, fb, db):
    """Minimiser of the cubic interpolating values and slopes at ``a`` and ``b``."""
    d1 = da + db - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = np.sign(b - a) * np.sqrt(disc)
    denom = db - da + 2 * d2
    if denom == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / denom


class _LineSearchFailed(Exception):
    def __init__(self, best):
        self.best = best


def strong_wolfe(phi, f0, d0, alpha1=1.0, c1=1e-4, c2=0.9, max_eval=25, alpha_max=1e10):
    """Bracketing plus zoom search (Nocedal & Wright, Alg. 3.5/3.6).

    ``phi(a)`` returns ``(value, slope, payload)``. Returns
    ``(alpha, value, payload)``; raises ``_LineSearchFailed`` carrying the
    best sufficient-decrease point seen (or ``None``).
    """
    evals = 0
    best = None

    def probe(a):
        nonlocal evals, best
        evals += 1
        f, d, payload = phi(a)
        if np.isfinite(f) and f <= f0 + c1 * a * d0 and (best is None or f < best[1]):
            best = (a, f, payload)
        return f, d, payload

    def zoom(lo, flo, dlo, plo, hi, fhi, dhi):
        while evals < max_eval:
            a = _cubic_min(lo, flo, dlo, hi, fhi, dhi) if np.isfinite(fhi) else None
            width = abs(hi - lo)
            left, right = min(lo, hi), max(lo, hi)
            if a is None or not (left + 0.1 * width <= a <= right - 0.1 * width):
                a = 0.5 * (lo + hi)
            if width <= 1e-16 * max(1.0, abs(lo)):
                break
            f, d, payload = probe(a)
            if not np.isfinite(f) or f > f0 + c1 * a * d0 or f >= flo:
                hi, fhi, dhi = a, f, d
            else:
                if abs(d) <= -c2 * d0:
                    return a, f, payload
                if d * (hi - lo) >= 0:
                    hi, fhi, dhi = lo, flo, dlo
                lo, flo, dlo, plo = a, f, d, payload
        raise _LineSearchFailed(best)

    a_prev, f_prev, d_prev, p_prev = 0.0, f0, d0, None
    a = alpha1
    first = True
    while evals < max_eval:
        f, d, payload = probe(a)
        if not np.isfinite(f) or f > f0 + c1 * a * d0 or (not first and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, p_prev, a, f, d)
        if abs(d) <= -c2 * d0:
            return a, f, payload
        if d >= 0:
            return zoom(a, f, d, payload, a_prev, f_prev, d_prev)
        a_prev, f_prev, d_prev, p_prev = a, f, d, payload
        a = min(2.0 * a, alpha_max)
        first = False
    raise _LineSearchFailed(best)


def lbfgs(fun, x0, max_iter: int = 20000, memory: int = 10, c1: float = 1e-4, c2: float = 0.9,
          gtol: float = 1e-9, ftol: float = 1e-12, max_ls: int = 25,
          start_iter: int = 0) -> OptimResult:
    """Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.

    Stops when ``||g|| <= gtol``, when the relative loss decrease is
    ``<= ftol``, after ``max_iter`` iterations, or when the line search
    fails (reported as ``"line_search_failed"``).
    """
    t0 = time.perf_counter()
    x = np.array(x0, dtype=float)
    f, g = _checked(fun, x)
    nfev = 1
    history = [(start_iter, f)]
    S, Y, RHO = [], [], []
    reason = "max_iter"
    k = 0
    while k < max_iter:
        if np.linalg.norm(g) <= gtol:
            reason = "gtol"
            break
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(S), reversed(Y), reversed(RHO)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if S:
            q *= (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1])
        for (s, y, rho), a in zip(zip(S, Y, RHO), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        d = -q
        slope = g @ d
        if not slope < 0:
            S, Y, RHO = [], [], []
            d = -g
            slope = g @ d
        alpha1 = 1.0 if S else min(1.0, 1.0 / np.linalg.norm(g))

        def phi(a):
            nonlocal nfev
            nfev += 1
            xa = x + a * d
            try:
                fa, ga = _checked(fun, xa)
            except NonFinite:
                return np.inf, np.nan, None
            return fa, ga @ d, (xa, ga)

        try:
            _, f_new, (x_new, g_new) = strong_wolfe(phi, f, slope, alpha1, c1, c2, max_ls)
            failed = False
        except _LineSearchFailed as exc:
            if exc.best is None:
                reason = "line_search_failed"
                break
            _, f_new, (x_new, g_new) = exc.best
            failed = True
        k += 1
        s, y = x_new - x, g_new - g
        sy = s @ y
        if sy > 1e-10 * np.sqrt((s @ s) * (y @ y)):
            S.append(s)
            Y.append(y)
            RHO.append(1.0 / sy)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
                RHO.pop(0)
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        history.append((start_iter + k, f))
        if failed:
            reason = "line_search_failed"
            break
        if decrease <= ftol * max(abs(f), abs(f + decrease)):
            reason = "ftol"
            break
    return OptimResult(x, f, k, reason, history, nfev, time.perf_counter() - t0)

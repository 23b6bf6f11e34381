"""Truncated multivariate derivative jets, up to total order 3.

A jet maps a multi-index ``alpha`` (a tuple of per-variable derivative
orders) to the corresponding partial derivative evaluated at a batch of
points. Components may be :class:`~sdnn.autodiff.Node` objects, so a
loss built from jets can be differentiated w.r.t. the network weights.
A component stored as ``None`` is structurally zero.
"""

from __future__ import annotations

import itertools
from collections import Counter
from functools import lru_cache

import numpy as np

from . import autodiff as ad
from .exceptions import UnsupportedOrder

MAX_ORDER = 3
VAR_NAMES = ("x", "t")


def parse_index(key, dim: int = 2) -> tuple[int, ...]:
    """``"u_xxt"`` / ``"xxt"`` / ``(2, 1)`` -> ``(2, 1)``."""
    if isinstance(key, tuple):
        if len(key) != dim:
            raise ValueError(f"multi-index {key} does not match dimension {dim}")
        return tuple(int(k) for k in key)
    name = key[2:] if key.startswith("u_") else ("" if key == "u" else key)
    counts = [0] * dim
    aliases = {"x": 0, "t": 1, "y": 1}
    for ch in name:
        k = aliases[ch]
        if k >= dim:
            raise ValueError(f"variable {ch!r} not available in dimension {dim}")
        counts[k] += 1
    return tuple(counts)


def index_name(alpha) -> str:
    if sum(alpha) == 0:
        return "u"
    return "u_" + "".join(VAR_NAMES[k] * a for k, a in enumerate(alpha))


def closure(indices, dim: int = 2) -> tuple[tuple[int, ...], ...]:
    """All multi-indices needed to propagate ``indices`` through compositions.

    Faa di Bruno's formula for ``D^alpha f(z)`` involves ``D^beta z`` for
    every ``0 < beta <= alpha``, so the set is closed downwards.
    """
    out = {(0,) * dim}
    for key in indices:
        alpha = parse_index(key, dim)
        if sum(alpha) > MAX_ORDER:
            raise UnsupportedOrder(f"derivative order {sum(alpha)} exceeds {MAX_ORDER}")
        for beta in itertools.product(*(range(a + 1) for a in alpha)):
            out.add(tuple(beta))
    return tuple(sorted(out, key=lambda a: (sum(a), tuple(-k for k in a))))


def all_indices(order: int, dim: int = 2) -> tuple[tuple[int, ...], ...]:
    if order > MAX_ORDER:
        raise UnsupportedOrder(f"derivative order {order} exceeds {MAX_ORDER}")
    idx = [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) <= order]
    return closure(idx, dim)


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


@lru_cache(maxsize=None)
def faa_di_bruno(alpha: tuple[int, ...]):
    """Terms of ``D^alpha f(z)`` as ``(coef, k, blocks)``: ``coef * f^(k)(z) * prod z_block``.

    Enumerates set partitions of the labelled derivative slots, so repeated
    variables produce the familiar integer multiplicities.
    """
    labels = [k for k, a in enumerate(alpha) for _ in range(a)]
    dim = len(alpha)
    terms = Counter()
    for part in _set_partitions(list(range(len(labels)))):
        blocks = []
        for block in part:
            b = [0] * dim
            for slot in block:
                b[labels[slot]] += 1
            blocks.append(tuple(b))
        terms[(len(blocks), tuple(sorted(blocks)))] += 1
    return tuple((coef, k, blocks) for (k, blocks), coef in sorted(terms.items()))


def _product(factors):
    acc = factors[0]
    for f in factors[1:]:
        acc = acc * f
    return acc


def compose_scalar(derivs, z: dict, indices) -> dict:
    """Jet of ``f(z)`` given ``derivs[k] = f^(k)(z_0)`` for ``k = 0..order``."""
    zero = tuple(0 for _ in indices[0])
    out = {zero: derivs[0]}
    for alpha in indices:
        if sum(alpha) == 0:
            continue
        acc = None
        for coef, k, blocks in faa_di_bruno(alpha):
            parts = [z[b] for b in blocks]
            if any(p is None for p in parts):
                continue
            term = derivs[k] * _product(parts)
            if coef != 1:
                term = term * float(coef)
            acc = term if acc is None else acc + term
        out[alpha] = acc
    return out


def tanh_jet(z: dict, indices) -> dict:
    """Propagate a jet through ``tanh`` using ``t = tanh(z)`` recursively.

    ``tanh' = 1 - t^2``, ``tanh'' = -2 t (1 - t^2)``,
    ``tanh''' = -2 (1 - t^2)(1 - 3 t^2)``.
    """
    order = max(sum(a) for a in indices)
    zero = tuple(0 for _ in indices[0])
    t = ad.tanh(z[zero])
    derivs = [t]
    if order >= 1:
        tt = t * t
        d1 = 1.0 - tt
        derivs.append(d1)
        if order >= 2:
            derivs.append(-2.0 * t * d1)
        if order >= 3:
            derivs.append(-2.0 * d1 * (1.0 - 3.0 * tt))
    return compose_scalar(derivs, z, indices)


class Jet(dict):
    """Derivatives of a scalar field at a batch of points, keyed by multi-index.

    Named access follows the ``(x, t)`` convention: ``jet.u_xt`` is the
    component ``(1, 1)``. For Poisson-type problems the second variable
    plays the role of ``y``; ``jet["u_yy"]`` is accepted as an alias.
    """

    def __init__(self, data=(), dim: int = 2):
        super().__init__(data)
        self.dim = dim

    def __getitem__(self, key):
        alpha = parse_index(key, self.dim) if not isinstance(key, tuple) else key
        try:
            value = super().__getitem__(alpha)
        except KeyError:
            raise KeyError(f"{index_name(alpha)} was not computed") from None
        if value is None:
            ref = super().__getitem__((0,) * self.dim)
            return np.zeros(np.shape(ad.value_of(ref)))
        return value

    def __getattr__(self, name):
        if name == "u" or name.startswith("u_"):
            try:
                return self[name]
            except (KeyError, ValueError) as exc:
                raise AttributeError(str(exc)) from None
        raise AttributeError(name)

    def as_arrays(self) -> dict:
        return {index_name(a): ad.value_of(self[a]) for a in self.keys()}

    def numpy(self) -> "Jet":
        return Jet({a: (None if v is None else np.asarray(ad.value_of(v))) for a, v in self.items()},
                   dim=self.dim)

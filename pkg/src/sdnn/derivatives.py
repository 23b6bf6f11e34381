"""Input derivatives of the network and exact parameter gradients of losses."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .exceptions import NonFinite, UnsupportedOrder
from .jets import MAX_ORDER, Jet, all_indices, closure, parse_index
from .network import Architecture, SdnnParams, propagate


def jet_forward(arch: Architecture, group, params, x, order: int = 2, needed=None) -> Jet:
    """Derivatives of ``u`` at ``x`` (one point or a batch) up to ``order``.

    ``needed`` restricts the computation to the listed components (names
    like ``"u_xxx"`` or multi-index tuples) plus whatever they depend on;
    by default every derivative of total order ``<= order`` is computed.
    Values are plain arrays; scalars for a single point.
    """
    if order > MAX_ORDER or order < 0:
        raise UnsupportedOrder(f"order must be in [0, {MAX_ORDER}], got {order}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    p = X.shape[1]
    if needed is None:
        idx = all_indices(order, p)
    else:
        idx = closure(needed, p)
        if max(sum(a) for a in idx) > order:
            raise UnsupportedOrder("mask asks for a derivative above the requested order")
    vec = params.vector if isinstance(params, SdnnParams) else params
    jet = propagate(arch, group, vec, X, idx)
    out = {a: (None if v is None else (float(v[0]) if single else np.asarray(v)))
           for a, v in jet.items()}
    return Jet(out, dim=p)


def loss_gradient(loss_evaluator, params):
    """Value and exact gradient of a scalar loss w.r.t. the flat parameter vector.

    ``loss_evaluator(theta)`` must build its result from tape operations on
    ``theta`` (e.g. via :func:`sdnn.network.propagate`). Shared blocks get
    the sum of the contributions of all their appearances.
    """
    vec = params.vector if isinstance(params, SdnnParams) else np.asarray(params, dtype=float)
    value, grad = ad.grad(loss_evaluator, vec)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NonFinite("loss or gradient is not finite")
    return value, grad


def component(jet: Jet, key):
    """Look up a jet entry by name or multi-index."""
    return jet[parse_index(key, jet.dim) if not isinstance(key, tuple) else key]

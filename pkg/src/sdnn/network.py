"""Group-invariant dense networks built from shared weight blocks.

The first hidden layer is applied to every group image of the input
(``tanh(w1 @ g_i x + b1)`` for each element ``g_i``). Every later hidden
layer has ``n`` shared blocks ``W_0..W_{n-1}``; output block ``r`` is

    tanh(sum_i W_i @ prev[cayley[i, r]] + b)

and the output layer sums all blocks with one shared row ``wL``. Block
``r`` evaluated at ``x`` equals block ``0`` evaluated at ``g_r x``, which
makes the scalar output exactly invariant under the group.

With the trivial group (``n == 1``) the same code is a plain tanh MLP;
the baseline network is built exactly that way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .exceptions import NoLinearRep
from .groups import FiniteGroup, build_group, tie_index
from .jets import Jet, closure, tanh_jet

EXPORT_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    """Input dimension, per-block hidden widths and group order.

    The effective width of hidden layer ``l`` is ``group_order * base_widths[l]``.
    """

    input_dim: int
    base_widths: tuple[int, ...]
    group_order: int = 1

    def __post_init__(self):
        object.__setattr__(self, "base_widths", tuple(int(m) for m in self.base_widths))
        if self.input_dim < 1 or self.group_order < 1:
            raise ValueError("input_dim and group_order must be positive")
        if not self.base_widths or min(self.base_widths) < 1:
            raise ValueError("need at least one hidden layer with positive width")

    @property
    def depth(self) -> int:
        return len(self.base_widths)

    @property
    def effective_widths(self) -> tuple[int, ...]:
        return tuple(self.group_order * m for m in self.base_widths)

    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Named parameter shapes in flattening order."""
        p, n, m = self.input_dim, self.group_order, self.base_widths
        out = [("w1", (m[0], p)), ("b1", (m[0],))]
        for l in range(1, len(m)):
            out.append((f"w{l + 1}", (n, m[l], m[l - 1])))
            out.append((f"b{l + 1}", (m[l],)))
        out.append(("wL", (m[-1],)))
        out.append(("bL", ()))
        return out

    def n_params(self) -> int:
        return param_count(self, self.group_order)


def param_count(arch: Architecture, group_order: int | None = None) -> int:
    """Number of trainable scalars, by direct enumeration."""
    n = arch.group_order if group_order is None else group_order
    m, p = arch.base_widths, arch.input_dim
    total = m[0] * p + m[0]
    for l in range(1, len(m)):
        total += n * m[l] * m[l - 1] + m[l]
    return total + m[-1] + 1


def pinn_widths(base_widths: Sequence[int], group_order: int) -> tuple[int, ...]:
    """Baseline widths with roughly the parameter budget of a tied network.

    Interior hidden layers are widened by the group order; the first and
    last hidden layers keep their base width (``[m, m, m] -> [m, k m, m]``).
    """
    w = list(base_widths)
    if len(w) <= 2:
        return tuple(w)
    return tuple([w[0]] + [group_order * v for v in w[1:-1]] + [w[-1]])


def _slices(arch: Architecture):
    out, start = {}, 0
    for name, shape in arch.shapes():
        size = int(np.prod(shape)) if shape else 1
        out[name] = (slice(start, start + size), shape)
        start += size
    return out


class SdnnParams:
    """Flat parameter vector with named views into the shared blocks."""

    def __init__(self, arch: Architecture, vector):
        vector = np.array(vector, dtype=float)
        if vector.shape != (param_count(arch),):
            raise ValueError(f"expected {param_count(arch)} parameters, got {vector.shape}")
        self.arch = arch
        self.vector = vector

    def __getitem__(self, name) -> np.ndarray:
        sl, shape = _slices(self.arch)[name]
        return self.vector[sl].reshape(shape)

    def __len__(self):
        return self.vector.size

    @property
    def names(self):
        return [name for name, _ in self.arch.shapes()]

    def copy(self) -> "SdnnParams":
        return SdnnParams(self.arch, self.vector.copy())

    @classmethod
    def from_arrays(cls, arch: Architecture, arrays: dict) -> "SdnnParams":
        parts = [np.asarray(arrays[name], dtype=float).reshape(shape).ravel()
                 for name, shape in arch.shapes()]
        return cls(arch, np.concatenate(parts))


def unpack(arch: Architecture, theta) -> dict:
    """Named views of a flat vector (array or tape node)."""
    if isinstance(theta, SdnnParams):
        theta = theta.vector
    out = {}
    for name, (sl, shape) in _slices(arch).items():
        out[name] = ad.reshape(ad.getitem(theta, sl), shape)
    return out


def init_params(arch: Architecture, group=None, seed: int = 0) -> SdnnParams:
    """Xavier-uniform weights on the base block shapes, zero biases."""
    rng = np.random.default_rng(seed)
    arrays = {}
    for name, shape in arch.shapes():
        if name.startswith("b"):
            arrays[name] = np.zeros(shape)
            continue
        if name == "wL":
            fan_out, fan_in = 1, shape[0]
        else:
            fan_out, fan_in = shape[-2], shape[-1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        arrays[name] = rng.uniform(-bound, bound, size=shape)
    return SdnnParams.from_arrays(arch, arrays)


@lru_cache(maxsize=64)
def _bias_tile(n: int, m: int) -> np.ndarray:
    return np.tile(np.arange(m), n)


def _tied_weight(blocks, tie: np.ndarray):
    """Dense ``(n*m, n*m_prev)`` matrix whose block ``(r, k)`` is ``blocks[tie[r, k]]``."""
    n = tie.shape[0]
    _, m, m_prev = ad.value_of(blocks).shape
    w = ad.take(blocks, tie)  # (n, n, m, m_prev)
    return ad.reshape(ad.transpose(w, (0, 2, 1, 3)), (n * m, n * m_prev))


def propagate(arch: Architecture, group: FiniteGroup, theta, X, indices=((0, 0),),
              keep_hidden: bool = False):
    """Jet of the network output at the points ``X`` (shape ``(N, p)``).

    ``theta`` is a flat vector, an :class:`SdnnParams` or a tape node; with
    a node every component of the returned :class:`Jet` is differentiable.
    If ``keep_hidden`` the value of every hidden layer is returned as a
    list of ``(n, N, m)`` block stacks alongside the jet.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, p = X.shape
    n = group.n
    if p != arch.input_dim or p != group.dim:
        raise ValueError(f"points of dimension {p} do not fit the network/group")
    if n != arch.group_order:
        raise ValueError(f"group order {n} != architecture group order {arch.group_order}")
    idx = closure([tuple(a) for a in indices], p)
    zero = idx[0]
    P = unpack(arch, theta)
    m = arch.base_widths
    hidden = []

    images = [e.input_jet(X, idx) for e in group.elements]
    w1t = ad.transpose(P["w1"])
    z = {}
    for a in idx:
        comps = [img[a] for img in images]
        if all(c is None for c in comps):
            z[a] = None
            continue
        Y = np.stack([np.zeros((N, p)) if c is None else c for c in comps])
        za = ad.matmul(Y, w1t)  # (n, N, m1)
        if a == zero:
            za = za + P["b1"]
        z[a] = ad.reshape(ad.transpose(za, (1, 0, 2)), (N, n * m[0]))
    h = tanh_jet(z, idx)
    if keep_hidden:
        hidden.append(ad.value_of(h[zero]))

    if len(m) > 1:
        tie = tie_index(group)
    for l in range(1, len(m)):
        wt = ad.transpose(_tied_weight(P[f"w{l + 1}"], tie))
        bias = ad.take(P[f"b{l + 1}"], _bias_tile(n, m[l]))
        z = {}
        for a in idx:
            if h[a] is None:
                z[a] = None
                continue
            za = ad.matmul(h[a], wt)
            z[a] = za + bias if a == zero else za
        h = tanh_jet(z, idx)
        if keep_hidden:
            hidden.append(ad.value_of(h[zero]))

    wl = ad.reshape(P["wL"], (m[-1], 1))
    out = {}
    for a in idx:
        if h[a] is None:
            out[a] = None
            continue
        pooled = ad.sum(ad.reshape(h[a], (N, n, m[-1])), axis=1)
        ua = ad.reshape(ad.matmul(pooled, wl), (N,))
        out[a] = ua + P["bL"] if a == zero else ua
    jet = Jet(out, dim=p)
    if keep_hidden:
        blocks = [hv.reshape(N, n, -1).transpose(1, 0, 2) for hv in hidden]
        return jet, blocks
    return jet


@dataclass
class ForwardResult:
    blocks: list  # per hidden layer, array (n, N, m_l)
    u: np.ndarray


def forward_blocks(arch: Architecture, group: FiniteGroup, params, X) -> ForwardResult:
    """Per-layer block activations and the scalar output at ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    jet, blocks = propagate(arch, group, params, X, ((0,) * X.shape[1],), keep_hidden=True)
    return ForwardResult(blocks, np.asarray(jet[(0,) * X.shape[1]]))


def predict(arch: Architecture, group: FiniteGroup, params, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.asarray(propagate(arch, group, params, X, ((0,) * X.shape[1],))[(0,) * X.shape[1]])


@dataclass
class MaterializedLayer:
    weight: np.ndarray
    bias: np.ndarray

    @property
    def shape(self):
        return self.weight.shape


def materialize(arch: Architecture, group: FiniteGroup, params, first_layer: bool = True):
    """Expanded dense weight matrices and bias vectors.

    Layer 1 becomes ``[w1 T_0; w1 T_1; ...]`` and needs a matrix
    representation; pass ``first_layer=False`` to keep it in action form
    (base ``w1``/``b1``, to be fed the expanded input set).
    """
    if not isinstance(params, SdnnParams):
        params = SdnnParams(arch, params)
    n, m = group.n, arch.base_widths
    if first_layer:
        if not group.has_linear_rep:
            raise NoLinearRep(f"group {group.name!r} acts without a matrix representation")
        w1 = np.concatenate([params["w1"] @ T for T in group.matrices()], axis=0)
        b1 = np.tile(params["b1"], n)
    else:
        w1, b1 = params["w1"].copy(), params["b1"].copy()
    layers = [MaterializedLayer(w1, b1)]
    if len(m) > 1:
        tie = tie_index(group)
    for l in range(1, len(m)):
        w = ad.value_of(_tied_weight(params[f"w{l + 1}"], tie))
        layers.append(MaterializedLayer(np.array(w), np.tile(params[f"b{l + 1}"], n)))
    layers.append(MaterializedLayer(np.tile(params["wL"], n)[None, :], np.array([params["bL"]])))
    return layers


def dense_forward(layers, X, group: FiniteGroup | None = None) -> np.ndarray:
    """Plain affine/tanh chain through materialized layers.

    If the first layer was kept in action form, pass ``group``: the input
    is then expanded to ``[g_0 x, g_1 x, ...]`` in front of it.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    first = layers[0]
    if group is not None:
        h = np.concatenate([np.tanh(g(X) @ first.weight.T + first.bias) for g in group.elements], axis=1)
    else:
        h = np.tanh(X @ first.weight.T + first.bias)
    for layer in layers[1:-1]:
        h = np.tanh(h @ layer.weight.T + layer.bias)
    last = layers[-1]
    return (h @ last.weight.T + last.bias)[:, 0]


def reynolds_symmetrize(arch_plain: Architecture, params_plain, group: FiniteGroup):
    """Group average ``x -> mean_g f(g x)`` of a plain (untied) network ``f``."""
    if arch_plain.group_order != 1:
        raise ValueError("symmetrization expects a plain network (group order 1)")
    trivial = build_group({"name": "identity", "dim": arch_plain.input_dim})

    def predictor(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros(X.shape[0])
        for g in group.elements:
            total = total + predict(arch_plain, trivial, params_plain, g(X))
        return total / group.n

    return predictor


def export_params(arch: Architecture, group: FiniteGroup, params, path=None) -> dict:
    """JSON-ready record of the base blocks (row-major nested lists) and metadata."""
    if not isinstance(params, SdnnParams):
        params = SdnnParams(arch, params)
    doc = {
        "format": "sdnn-weights",
        "version": EXPORT_VERSION,
        "input_dim": arch.input_dim,
        "base_widths": list(arch.base_widths),
        "group": group.to_dict(),
        "blocks": [
            {"name": name, "shape": list(shape), "data": params[name].tolist()}
            for name, shape in arch.shapes()
        ],
    }
    if path is not None:
        Path(path).write_text(json.dumps(doc))
    return doc


def import_params(source):
    """Inverse of :func:`export_params`; returns ``(arch, group, params)``."""
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text())
    group = build_group(source["group"])
    arch = Architecture(source["input_dim"], tuple(source["base_widths"]), group.n)
    arrays = {b["name"]: np.asarray(b["data"], dtype=float) for b in source["blocks"]}
    return arch, group, SdnnParams.from_arrays(arch, arrays)

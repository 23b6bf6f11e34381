"""Finite groups acting on input points.

A group is stored as a list of point actions plus its Cayley table,
``cayley[i, j] = k`` meaning ``g_i(g_j(x)) == g_k(x)``. Element 0 is
always the identity. The table is never typed in by hand: it is derived
by composing the actions on probe points, so a wrong action shows up as
a failed group axiom rather than a silently broken network.

Weight tying in the network uses the right-translation convention
``perm_j(i) = cayley[i, j]``; see :func:`block_permutation`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import (
    ActionUndefined,
    GroupError,
    IndexOutOfRange,
    NoIdentity,
    NoInverse,
    NotAssociative,
    NotClosed,
    SingularPoint,
)

ATOL = 1e-12

_KINDS = ("linear", "affine", "reciprocal")


@dataclass(frozen=True, eq=False)
class PointAction:
    """One group element acting on ``p``-dimensional points.

    ``kind`` is ``"linear"`` (``x -> M x``), ``"affine"`` (``x -> M x + c``)
    or ``"reciprocal"`` (``x_k -> 1/x_k`` on every flagged coordinate).
    """

    kind: str
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    flags: tuple[bool, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown action kind {self.kind!r}")
        if self.kind in ("linear", "affine"):
            m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
            if m.shape[0] != m.shape[1]:
                raise ValueError("action matrix must be square")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            c = np.zeros(m.shape[0]) if self.offset is None else np.asarray(self.offset, dtype=float)
            if self.kind == "linear" and np.any(c != 0):
                raise ValueError("linear actions carry no offset")
            if c.shape != (m.shape[0],):
                raise ValueError("offset must match the matrix dimension")
            c.setflags(write=False)
            object.__setattr__(self, "offset", c)
        else:
            if not self.flags:
                raise ValueError("reciprocal action needs per-coordinate flags")
            object.__setattr__(self, "flags", tuple(bool(f) for f in self.flags))

    @property
    def dim(self) -> int:
        return len(self.flags) if self.kind == "reciprocal" else self.matrix.shape[0]

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    def __call__(self, X) -> np.ndarray:
        """Apply the action to a point ``(p,)`` or a batch ``(N, p)``."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got {X.shape}")
        if self.kind == "reciprocal":
            mask = np.asarray(self.flags)
            sel = X[..., mask]
            if np.any(sel == 0):
                raise SingularPoint("reciprocal action is undefined at a zero coordinate")
            out = X.copy()
            out[..., mask] = 1.0 / sel
            return out
        out = X @ self.matrix.T
        if self.kind == "affine":
            out = out + self.offset
        return out

    def input_jet(self, X: np.ndarray, indices) -> dict:
        """Partial derivatives of the image coordinates w.r.t. the input.

        Returns ``{alpha: array (N, p) or None}`` for every multi-index in
        ``indices``; ``None`` marks a component that is identically zero.
        """
        X = np.asarray(X, dtype=float)
        p = self.dim
        out = {}
        if self.kind == "reciprocal":
            mask = np.asarray(self.flags)
            if np.any(X[:, mask] == 0):
                raise SingularPoint("reciprocal action is undefined at a zero coordinate")
        for alpha in indices:
            order = sum(alpha)
            if order == 0:
                out[alpha] = self(X)
                continue
            if self.kind != "reciprocal":
                if order == 1:
                    k = alpha.index(1)
                    out[alpha] = np.broadcast_to(self.matrix[:, k], (X.shape[0], p))
                else:
                    out[alpha] = None
                continue
            # every coordinate depends on itself only
            if sum(1 for a in alpha if a) != 1:
                out[alpha] = None
                continue
            k = next(i for i, a in enumerate(alpha) if a)
            col = np.zeros((X.shape[0], p))
            if self.flags[k]:
                # d^m/dx^m (1/x) = (-1)^m m! / x^(m+1)
                col[:, k] = (-1.0) ** order * _factorial(order) / X[:, k] ** (order + 1)
            elif order == 1:
                col[:, k] = 1.0
            else:
                out[alpha] = None
                continue
            out[alpha] = col
        return out

    def to_dict(self) -> dict:
        if self.kind == "reciprocal":
            return {"kind": "reciprocal", "flags": list(self.flags)}
        d = {"kind": self.kind, "matrix": self.matrix.tolist()}
        if self.kind == "affine":
            d["offset"] = self.offset.tolist()
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PointAction":
        kind = d.get("kind", "affine" if "offset" in d else "linear")
        if kind == "reciprocal":
            return cls("reciprocal", flags=tuple(d["flags"]))
        return cls(kind, matrix=d["matrix"], offset=d.get("offset"))


def _factorial(m: int) -> float:
    return float(np.prod(np.arange(1, m + 1))) if m > 0 else 1.0


def linear(matrix) -> PointAction:
    return PointAction("linear", matrix=matrix)


def affine(matrix, offset) -> PointAction:
    return PointAction("affine", matrix=matrix, offset=offset)


def reciprocal(flags) -> PointAction:
    return PointAction("reciprocal", flags=tuple(flags))


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """Immutable finite group: actions, Cayley table and a display name."""

    elements: tuple[PointAction, ...]
    cayley: np.ndarray
    name: str = "group"
    labels: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    @property
    def has_linear_rep(self) -> bool:
        return all(e.is_linear for e in self.elements)

    def matrices(self) -> list[np.ndarray]:
        if not self.has_linear_rep:
            raise GroupError(f"group {self.name!r} has no matrix representation")
        return [e.matrix for e in self.elements]

    def apply(self, i: int, X) -> np.ndarray:
        return apply_action(self, i, X)

    def inverse(self, i: int) -> int:
        return int(np.flatnonzero(self.cayley[i] == 0)[0])

    def orbit(self, X) -> np.ndarray:
        """Images of ``X`` under every element, shape ``(n, N, p)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([e(X) for e in self.elements])

    def to_dict(self) -> dict:
        return {"name": self.name, "actions": [e.to_dict() for e in self.elements]}


def _match(images: np.ndarray, target: np.ndarray) -> list[int]:
    scale = 1.0 + np.max(np.abs(target))
    return [k for k in range(images.shape[0])
            if np.max(np.abs(images[k] - target)) <= ATOL * scale]


def group_from_actions(actions: Sequence[PointAction], probe: np.ndarray | None = None,
                       name: str = "custom", labels: Sequence[str] = ()) -> FiniteGroup:
    """Derive the Cayley table of ``actions`` and check the group axioms.

    ``probe`` is an ``(N, p)`` array of points inside the domain where all
    actions are defined; by default a 10x10 grid on ``[0.5, 2]^p``.
    """
    actions = tuple(actions)
    if not actions:
        raise NoIdentity("empty element list")
    p = actions[0].dim
    if any(a.dim != p for a in actions):
        raise GroupError("all actions must act on the same dimension")
    if probe is None:
        probe = probe_grid([(0.5, 2.0)] * p)
    probe = np.atleast_2d(np.asarray(probe, dtype=float))
    n = len(actions)
    try:
        images = np.stack([a(probe) for a in actions])
        if not np.all(np.isfinite(images)):
            raise SingularPoint("non-finite image")
        if _match(images[:1], probe) != [0]:
            raise NoIdentity("element 0 must be the identity action")
        cayley = np.empty((n, n), dtype=np.int64)
        for i, j in itertools.product(range(n), repeat=2):
            composed = actions[i](images[j])
            hits = _match(images, composed)
            if not hits:
                raise NotClosed(f"g{i} o g{j} is not in the element list")
            if len(hits) > 1:
                raise GroupError(f"elements {hits} coincide on the probe points")
            cayley[i, j] = hits[0]
    except SingularPoint as exc:
        raise ActionUndefined(str(exc)) from exc
    check_axioms(cayley)
    cayley.setflags(write=False)
    return FiniteGroup(actions, cayley, name=name, labels=tuple(labels))


def check_axioms(cayley: np.ndarray) -> None:
    """Raise if ``cayley`` violates closure, identity, inverses or associativity."""
    cayley = np.asarray(cayley)
    n = cayley.shape[0]
    if cayley.shape != (n, n) or cayley.min() < 0 or cayley.max() >= n:
        raise NotClosed("Cayley entries must lie in [0, n)")
    ar = np.arange(n)
    if not (np.array_equal(cayley[0], ar) and np.array_equal(cayley[:, 0], ar)):
        raise NoIdentity("row and column 0 must be the identity")
    for k in range(n):
        if len(set(cayley[k])) != n or len(set(cayley[:, k])) != n:
            raise NoInverse(f"row/column {k} of the Cayley table is not a permutation")
    # (g_i g_j) g_k == g_i (g_j g_k)
    left = cayley[cayley[:, :, None], ar[None, None, :]]
    right = cayley[ar[:, None, None], cayley[None, :, :]]
    if not np.array_equal(left, right):
        raise NotAssociative("Cayley table is not associative")


def probe_grid(box, n: int = 10) -> np.ndarray:
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


# The eight dihedral matrices in the listed order; subgroups index into it.
DIHEDRAL8 = (
    ((1, 0), (0, 1)),
    ((1, 0), (0, -1)),
    ((-1, 0), (0, 1)),
    ((-1, 0), (0, -1)),
    ((0, 1), (1, 0)),
    ((0, 1), (-1, 0)),
    ((0, -1), (1, 0)),
    ((0, -1), (-1, 0)),
)
ROTATION4 = (0, 3, 5, 6)
# x -> -x; the element that maps octant 11 onto octant 22
REFLECTION2 = (0, 2)

BUILTIN_GROUPS = (
    "identity", "even", "circulant", "dihedral8", "rotation4", "reflection2",
    "translation_reflection", "reciprocal",
)

_ALIASES = {
    "trivial": "identity", "G_e": "even", "G_c": "circulant", "dihedral": "dihedral8",
    "G_d": "dihedral8", "rotation": "rotation4", "G_r": "rotation4",
    "reflection": "reflection2", "G_p": "reflection2", "G_t": "translation_reflection",
}


def build_group(spec) -> FiniteGroup:
    """Build a group from a name or a config mapping.

    Accepted forms::

        "dihedral8"
        {"name": "translation_reflection", "lambda": 3.0, "mu": 2.0}
        {"name": "even", "dim": 1}
        {"actions": [{"kind": "linear", "matrix": [[1, 0], [0, 1]]}, ...],
         "probe_box": [[0.5, 2], [0.5, 2]]}
    """
    if isinstance(spec, FiniteGroup):
        return spec
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    probe = None
    if "probe_box" in spec:
        probe = probe_grid(spec["probe_box"])
    if "actions" in spec:
        actions = [a if isinstance(a, PointAction) else PointAction.from_dict(a)
                   for a in spec["actions"]]
        return group_from_actions(actions, probe, name=spec.get("name", "custom"))

    name = _ALIASES.get(spec.get("name"), spec.get("name"))
    dim = int(spec.get("dim", 2))
    eye = np.eye(dim)
    if name == "identity":
        return group_from_actions([linear(eye)], probe, name=name)
    if name == "even":
        return group_from_actions([linear(eye), linear(-eye)], probe, name=name)
    if name == "circulant":
        return group_from_actions([linear(eye), linear(eye[::-1])], probe, name=name)
    if name == "dihedral8":
        return group_from_actions([linear(m) for m in DIHEDRAL8], probe, name=name,
                                  labels=[f"g{i}" for i in range(8)])
    if name == "rotation4":
        return group_from_actions([linear(DIHEDRAL8[i]) for i in ROTATION4], probe, name=name,
                                  labels=[f"g{i}" for i in ROTATION4])
    if name == "reflection2":
        return group_from_actions([linear(DIHEDRAL8[i]) for i in REFLECTION2], probe, name=name,
                                  labels=[f"g{i}" for i in REFLECTION2])
    if name == "translation_reflection":
        lam = float(spec.get("lambda", 3.0))
        mu = float(spec.get("mu", 2.0))
        return group_from_actions([linear(eye), affine(-eye, [lam, mu])], probe, name=name)
    if name == "reciprocal":
        return group_from_actions([linear(eye), reciprocal([True] * dim)], probe, name=name)
    raise GroupError(f"unknown group {spec.get('name')!r}")


@dataclass(frozen=True)
class BlockPermutation:
    element_index: int
    mapping: tuple[int, ...]

    def apply(self, blocks):
        """Reorder a stack of blocks: ``out[i] = blocks[mapping[i]]``."""
        return np.asarray(blocks)[list(self.mapping)]

    def inverse(self) -> "BlockPermutation":
        inv = [0] * len(self.mapping)
        for i, k in enumerate(self.mapping):
            inv[k] = i
        return BlockPermutation(self.element_index, tuple(inv))

    def compose(self, other: "BlockPermutation") -> tuple[int, ...]:
        """``self o other`` as a mapping."""
        return tuple(self.mapping[other.mapping[i]] for i in range(len(self.mapping)))


def block_permutation(group: FiniteGroup, j: int) -> BlockPermutation:
    """Permutation induced by right multiplication with ``g_j``: ``i -> cayley[i, j]``."""
    if not 0 <= j < group.n:
        raise IndexOutOfRange(f"element index {j} outside [0, {group.n})")
    return BlockPermutation(j, tuple(int(k) for k in group.cayley[:, j]))


def apply_action(group: FiniteGroup, i: int, X) -> np.ndarray:
    if not 0 <= i < group.n:
        raise IndexOutOfRange(f"element index {i} outside [0, {group.n})")
    return group.elements[i](X)


def tie_index(group: FiniteGroup) -> np.ndarray:
    """``tie[r, k]`` is the shared block feeding output block ``r`` from input block ``k``.

    Output block ``r`` of a tied layer computes ``sum_i W_i @ prev[cayley[i, r]]``,
    so the dense block at ``(r, k)`` is ``W_i`` with ``cayley[i, r] == k``.
    """
    n = group.n
    tie = np.empty((n, n), dtype=np.int64)
    for r in range(n):
        for i in range(n):
            tie[r, group.cayley[i, r]] = i
    return tie

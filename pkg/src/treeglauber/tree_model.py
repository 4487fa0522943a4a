"""Complete b-ary trees, proper colourings, and the colouring state space.

Vertices are numbered breadth-first with the root at 0, so the children of
``v`` are ``b*v + 1 .. b*v + b`` and every level occupies a contiguous range.
A colouring is a tuple of ints in ``range(q)`` indexed by vertex id.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

Colouring = tuple[int, ...]

DEFAULT_MAX_OMEGA = 10**7


class StateSpaceTooLarge(ValueError):
    """Raised when an exact routine would have to enumerate too many colourings."""


def max_omega_cap() -> int:
    """Enumeration cap, overridable with ``TREEGLAUBER_MAX_OMEGA``."""
    return int(os.environ.get("TREEGLAUBER_MAX_OMEGA", DEFAULT_MAX_OMEGA))


@dataclass(frozen=True)
class TreeShape:
    b: int
    H: int

    def __post_init__(self):
        if self.b < 2:
            raise ValueError(f"branching factor must be >= 2, got {self.b}")
        if self.H < 0:
            raise ValueError(f"height must be >= 0, got {self.H}")

    @cached_property
    def n(self) -> int:
        return (self.b ** (self.H + 1) - 1) // (self.b - 1)

    def level_start(self, depth: int) -> int:
        return (self.b**depth - 1) // (self.b - 1)

    def level(self, depth: int) -> range:
        """Vertex ids at the given depth (distance from the root)."""
        start = self.level_start(depth)
        return range(start, start + self.b**depth)

    @property
    def leaves(self) -> range:
        return self.level(self.H)

    @cached_property
    def _depths(self) -> tuple[int, ...]:
        out = []
        for d in range(self.H + 1):
            out.extend([d] * self.b**d)
        return tuple(out)

    def depth(self, v: int) -> int:
        return self._depths[v]

    def height(self, v: int) -> int:
        return self.H - self._depths[v]

    def is_leaf(self, v: int) -> bool:
        return self._depths[v] == self.H

    def parent(self, v: int) -> int:
        if v == 0:
            raise ValueError("the root has no parent")
        return (v - 1) // self.b

    def children(self, v: int) -> range:
        if self.is_leaf(v):
            return range(0)
        return range(self.b * v + 1, self.b * v + self.b + 1)

    def ancestors(self, v: int) -> list[int]:
        """Proper ancestors of ``v``, nearest first."""
        out = []
        while v != 0:
            v = (v - 1) // self.b
            out.append(v)
        return out

    def is_descendant(self, w: int, v: int) -> bool:
        """True if ``w`` lies in the subtree rooted at ``v`` (``w == v`` included)."""
        return w == v or v in self.ancestors(w)

    def subtree_vertices(self, v: int) -> list[int]:
        """Vertices of T_v in breadth-first order of the subtree.

        Position ``i`` in the returned list corresponds to vertex ``i`` of
        ``TreeShape(b, height(v))``.
        """
        out = []
        for k in range(self.height(v) + 1):
            bk = self.b**k
            first = v * bk + (bk - 1) // (self.b - 1)
            out.extend(range(first, first + bk))
        return out

    def to_json(self) -> dict:
        return {"b": self.b, "H": self.H}


def make_shape(b: int, H: int) -> TreeShape:
    return TreeShape(b, H)


def omega_size(shape: TreeShape, q: int) -> int:
    """|Omega| = q (q-1)^(n-1)."""
    return q * (q - 1) ** (shape.n - 1)


def check_colouring(shape: TreeShape, x: Sequence[int], q: int) -> None:
    if len(x) != shape.n:
        raise ValueError(f"colouring has length {len(x)}, tree has {shape.n} vertices")
    for c in x:
        if not 0 <= c < q:
            raise ValueError(f"colour {c} outside [0, {q})")


def is_proper(shape: TreeShape, x: Sequence[int], q: int) -> bool:
    check_colouring(shape, x, q)
    b = shape.b
    return all(x[v] != x[(v - 1) // b] for v in range(1, shape.n))


def _require_enumerable(shape: TreeShape, q: int, cap: int | None) -> int:
    size = omega_size(shape, q)
    cap = max_omega_cap() if cap is None else cap
    if size > cap:
        raise StateSpaceTooLarge(
            f"state space too large: |Omega| = {size} exceeds cap {cap} "
            f"(b={shape.b}, H={shape.H}, q={q})"
        )
    return size


def omega_array(shape: TreeShape, q: int, cap: int | None = None) -> np.ndarray:
    """All proper colourings as rows of an int8 array, in lexicographic order."""
    if q < 2:
        raise ValueError("need q >= 2")
    _require_enumerable(shape, q, cap)
    rows = np.arange(q, dtype=np.int8).reshape(q, 1)
    offsets = np.arange(q - 1, dtype=np.int8)
    for v in range(1, shape.n):
        parent = rows[:, (v - 1) // shape.b]
        # k-th allowed colour given parent colour p is k if k < p else k + 1
        new = offsets[None, :] + (offsets[None, :] >= parent[:, None])
        rows = np.repeat(rows, q - 1, axis=0)
        rows = np.concatenate([rows, new.reshape(-1, 1).astype(np.int8)], axis=1)
    return rows


def enumerate_omega(shape: TreeShape, q: int, cap: int | None = None) -> list[Colouring]:
    return [tuple(row) for row in omega_array(shape, q, cap).tolist()]


def sample_colourings(shape: TreeShape, q: int, rng, size: int) -> np.ndarray:
    """``size`` independent uniform proper colourings, shape (size, n).

    Built top-down: the root is uniform on [q] and every other vertex is
    uniform on the q-1 colours its parent does not use.
    """
    rng = np.random.default_rng(rng)
    out = np.empty((size, shape.n), dtype=np.int8)
    out[:, 0] = rng.integers(0, q, size=size)
    for d in range(1, shape.H + 1):
        lvl = shape.level(d)
        parents = (np.arange(lvl.start, lvl.stop) - 1) // shape.b
        shift = rng.integers(1, q, size=(size, len(lvl)))
        out[:, lvl.start:lvl.stop] = (out[:, parents] + shift) % q
    return out


def sample_uniform_colouring(shape: TreeShape, q: int, rng) -> Colouring:
    if q < 2:
        raise ValueError("need q >= 2")
    return tuple(sample_colourings(shape, q, rng, 1)[0].tolist())

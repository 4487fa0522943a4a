"""Metropolis Glauber dynamics on proper q-colourings of a complete b-ary tree.

Each step picks a vertex v and a colour c uniformly at random and recolours
v with c iff the result is still proper. Proposals that keep the current
colour count as accepted no-ops, so every diagonal entry is at least 1/q.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .tree_model import (
    Colouring,
    StateSpaceTooLarge,
    TreeShape,
    enumerate_omega,
    omega_size,
)

DEFAULT_MAX_MATRIX = 10**4


@dataclass(frozen=True)
class ChainSpec:
    shape: TreeShape
    q: int

    def __post_init__(self):
        if self.q < 3:
            raise ValueError(f"the chain needs q >= 3 to be ergodic, got q={self.q}")

    @property
    def n(self) -> int:
        return self.shape.n

    def to_json(self) -> dict:
        return {"b": self.shape.b, "H": self.shape.H, "q": self.q}


def can_recolour(shape: TreeShape, x: Sequence[int], v: int, c: int) -> bool:
    """Would giving vertex ``v`` colour ``c`` keep ``x`` proper?"""
    if v and x[(v - 1) // shape.b] == c:
        return False
    return all(x[w] != c for w in shape.children(v))


def apply_proposal(spec: ChainSpec, x: Colouring, v: int, c: int) -> Colouring:
    if c == x[v] or not can_recolour(spec.shape, x, v, c):
        return x
    y = list(x)
    y[v] = c
    return tuple(y)


def step(spec: ChainSpec, x: Colouring, rng) -> Colouring:
    rng = np.random.default_rng(rng)
    v = int(rng.integers(spec.n))
    c = int(rng.integers(spec.q))
    return apply_proposal(spec, x, v, c)


def simulate(spec: ChainSpec, x0: Colouring, steps: int, rng,
             chunk: int = 65536) -> Iterator[tuple[int, int, int, Colouring]]:
    """Run the chain, yielding ``(t, v, c, state)`` after each step.

    ``v`` is -1 (and ``c`` -1) when the step left the state unchanged.
    Proposals are drawn in blocks; one generator drives the whole run.
    """
    rng = np.random.default_rng(rng)
    shape, q = spec.shape, spec.q
    x = list(x0)
    t = 0
    while t < steps:
        m = min(chunk, steps - t)
        vs = rng.integers(spec.n, size=m).tolist()
        cs = rng.integers(q, size=m).tolist()
        for v, c in zip(vs, cs):
            t += 1
            if c != x[v] and can_recolour(shape, x, v, c):
                x[v] = c
                yield t, v, c, tuple(x)
            else:
                yield t, -1, -1, tuple(x)


@dataclass
class TransitionMatrix:
    states: list[Colouring]
    entries: np.ndarray  # float64, or object dtype holding Fractions
    index: dict[Colouring, int]

    @property
    def exact(self) -> bool:
        return self.entries.dtype == object

    @property
    def size(self) -> int:
        return len(self.states)


def neighbours(spec: ChainSpec, x: Colouring) -> Iterator[tuple[int, int, Colouring]]:
    """Every state one accepted non-trivial move away from ``x``."""
    shape = spec.shape
    for v in range(spec.n):
        for c in range(spec.q):
            if c != x[v] and can_recolour(shape, x, v, c):
                y = list(x)
                y[v] = c
                yield v, c, tuple(y)


def build_matrix(spec: ChainSpec, exact: bool = False,
                 cap: int = DEFAULT_MAX_MATRIX) -> TransitionMatrix:
    size = omega_size(spec.shape, spec.q)
    if size > cap:
        raise StateSpaceTooLarge(
            f"state space too large: |Omega| = {size} exceeds matrix cap {cap}"
        )
    states = enumerate_omega(spec.shape, spec.q)
    index = {x: i for i, x in enumerate(states)}
    nq = spec.n * spec.q
    if exact:
        move = Fraction(1, nq)
        P = np.full((size, size), Fraction(0), dtype=object)
    else:
        move = 1.0 / nq
        P = np.zeros((size, size))
    for i, x in enumerate(states):
        out = 0
        for _, _, y in neighbours(spec, x):
            P[i, index[y]] = move
            out += 1
        P[i, i] = (Fraction(1) if exact else 1.0) - out * move
    return TransitionMatrix(states, P, index)


def stationarity_error(tm: TransitionMatrix) -> float:
    """||uP - u||_1 for the uniform vector u."""
    m = tm.size
    if tm.exact:
        u = Fraction(1, m)
        cols = tm.entries.sum(axis=0)
        return float(sum(abs(u * s - u) for s in cols))
    u = np.full(m, 1.0 / m)
    return float(np.abs(u @ tm.entries - u).sum())


def is_symmetric(tm: TransitionMatrix, tol: float = 1e-15) -> bool:
    if tm.exact:
        return bool((tm.entries == tm.entries.T).all())
    return bool(np.abs(tm.entries - tm.entries.T).max() <= tol)


def min_diagonal(tm: TransitionMatrix):
    return min(tm.entries[i, i] for i in range(tm.size))


def variation_distance(p: Sequence[float], r: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    r = np.asarray(r, dtype=float)
    if p.shape != r.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {r.shape}")
    for d in (p, r):
        if (d < 0).any() or abs(d.sum() - 1.0) > 1e-9:
            raise ValueError("arguments must be probability distributions")
    return 0.5 * float(np.abs(p - r).sum())


def distance_profile(tm: TransitionMatrix, t_max: int) -> list[float]:
    """d(t) = max_x ||P^t(x, .) - pi|| for t = 1..t_max (pi uniform)."""
    P = tm.entries.astype(float) if tm.exact else tm.entries
    pi = 1.0 / tm.size
    D = P.copy()
    out = []
    for _ in range(t_max):
        out.append(0.5 * float(np.abs(D - pi).sum(axis=1).max()))
        D = D @ P
    return out


def mixing_time_exact(spec: ChainSpec, delta: float, t_max: int = 10**6,
                      tm: TransitionMatrix | None = None) -> int:
    """Least t with max_x ||P^t(x,.) - pi|| <= delta.

    The worst-case distance is non-increasing in t, so the first time it
    drops to delta is the mixing time.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if tm is None:
        tm = build_matrix(spec)
    P = tm.entries.astype(float) if tm.exact else tm.entries
    pi = 1.0 / tm.size
    D = P.copy()
    for t in range(1, t_max + 1):
        if 0.5 * np.abs(D - pi).sum(axis=1).max() <= delta:
            return t
        D = D @ P
    raise RuntimeError(f"distance still above {delta} after {t_max} steps")


def check_ergodic(shape: TreeShape, q: int, cap: int | None = None) -> bool:
    """Is the move graph on proper colourings connected?

    Takes ``(shape, q)`` rather than a ChainSpec so that q = 2 can be probed.
    """
    states = enumerate_omega(shape, q, cap)
    seen = {states[0]}
    queue = deque([states[0]])
    while queue:
        x = queue.popleft()
        for v in range(shape.n):
            for c in range(q):
                if c != x[v] and can_recolour(shape, x, v, c):
                    y = x[:v] + (c,) + x[v + 1:]
                    if y not in seen:
                        seen.add(y)
                        queue.append(y)
    return len(seen) == len(states)

"""Forced vertices, looseness, and conductance of the root-forcing cut.

A vertex w is forced in x when every proper colouring of T_w that agrees
with x on the leaves of T_w gives w the colour x(w). Leaves are always
forced; an internal vertex v is forced iff for each colour c != x(v) some
child w has x(w) = c and is itself forced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .glauber_chain import ChainSpec, can_recolour, neighbours
from .tree_model import (
    Colouring,
    TreeShape,
    enumerate_omega,
    omega_array,
    sample_colourings,
)


# -- forced sets ------------------------------------------------------------

def forced_mask(shape: TreeShape, q: int, X: np.ndarray) -> np.ndarray:
    """Forced-vertex indicator for a batch of colourings, shape (batch, n)."""
    X = np.asarray(X)
    if X.ndim == 1:
        return forced_mask(shape, q, X[None, :])[0]
    batch = X.shape[0]
    F = np.ones(X.shape, dtype=bool)
    colours = np.arange(q)
    for d in range(shape.H - 1, -1, -1):
        lvl = shape.level(d)
        kids = shape.level(d + 1)
        kc = X[:, kids.start:kids.stop].reshape(batch, len(lvl), shape.b)
        kf = F[:, kids.start:kids.stop].reshape(batch, len(lvl), shape.b)
        # blocked[..., c]: some forced child has colour c
        blocked = ((kc[..., None] == colours) & kf[..., None]).any(axis=2)
        own = X[:, lvl.start:lvl.stop, None] == colours
        F[:, lvl.start:lvl.stop] = (blocked | own).all(axis=2)
    return F


def forced_set(shape: TreeShape, q: int, x: Sequence[int]) -> frozenset[int]:
    mask = forced_mask(shape, q, np.asarray(x, dtype=np.int16))
    return frozenset(np.flatnonzero(mask).tolist())


@lru_cache(maxsize=None)
def _extension_table(b: int, h: int, q: int) -> dict[tuple[int, ...], frozenset[int]]:
    """Leaf colouring -> set of root colours over all proper colourings of T_h."""
    local = TreeShape(b, h)
    leaves = local.leaves
    table: dict[tuple[int, ...], set[int]] = {}
    for row in omega_array(local, q).tolist():
        table.setdefault(tuple(row[leaves.start:leaves.stop]), set()).add(row[0])
    return {k: frozenset(v) for k, v in table.items()}


def forced_set_bruteforce(shape: TreeShape, q: int, x: Sequence[int]) -> frozenset[int]:
    """Forced set by direct extension counting over Omega(T_w) for each w."""
    out = set()
    for w in range(shape.n):
        h = shape.height(w)
        verts = shape.subtree_vertices(w)
        leaf_cols = tuple(x[u] for u in verts[len(verts) - shape.b**h:])
        if _extension_table(shape.b, h, q)[leaf_cols] == {x[w]}:
            out.add(w)
    return frozenset(out)


def is_permitting(x: Sequence[int], forced, w: int, c: int) -> bool:
    """Child w is c-permitting for its parent: x(w) != c or w not forced."""
    return x[w] != c or w not in forced


def is_loose(shape: TreeShape, q: int, x: Sequence[int], v: int, leaf: int,
             forced=None) -> bool:
    if shape.height(v) < 1:
        raise ValueError("looseness needs a vertex of height >= 1")
    if not shape.is_leaf(leaf) or not shape.is_descendant(leaf, v):
        raise ValueError(f"{leaf} is not a leaf below {v}")
    if forced is None:
        forced = forced_set(shape, q, x)
    path_child = leaf
    while (path_child - 1) // shape.b != v:
        path_child = (path_child - 1) // shape.b
    others = [w for w in shape.children(v) if w != path_child]
    return any(
        all(is_permitting(x, forced, w, c) for w in others)
        for c in range(q) if c != x[v]
    )


def classify(shape: TreeShape, q: int, x: Sequence[int], forced=None) -> int:
    """Index of the cut class: x(root) if the root is forced, else q."""
    if forced is None:
        forced = forced_set(shape, q, x)
    return x[0] if 0 in forced else q


def root_forced_cut(q: int) -> frozenset[int]:
    """Classes making up the cut S: forced root coloured 0 .. floor(q/2)-1."""
    return frozenset(range(q // 2))


# -- u_h, Psi and epsilon -----------------------------------------------------

def _inclusion_exclusion(children: int, q: int, u_prev):
    """P(some colour c != x(v) is permitted by all ``children`` children)."""
    one = Fraction(1) if isinstance(u_prev, Fraction) else 1.0
    total = 0 * one
    for j in range(1, q):
        term = math.comb(q - 1, j) * (one - j * (one - u_prev) / (q - 1)) ** children
        total += term if j % 2 else -term
    return total


def u_exact(b: int, q: int, h: int, exact: bool = False):
    """Probability that a height-h vertex is not forced under uniform x."""
    u = Fraction(0) if exact else 0.0
    for _ in range(h):
        u = _inclusion_exclusion(b, q, u)
    return u


def psi_exact(b: int, q: int, h: int, exact: bool = False):
    """Probability that a height-h vertex is loose towards a given leaf."""
    if h < 1:
        raise ValueError("Psi needs h >= 1")
    return _inclusion_exclusion(b - 1, q, u_exact(b, q, h - 1, exact))


def epsilon(b: int, q: int) -> float:
    return (q - 1) * math.exp(-(b - 2) / (q - 1))


def regime_holds(b: int, q: int) -> bool:
    """2q <= b / ln b."""
    return 2 * q <= b / math.log(b)


def warn_regime(b: int, q: int) -> bool:
    ok = regime_holds(b, q)
    if not ok:
        warnings.warn(f"2q <= b/ln(b) fails for b={b}, q={q}: "
                      "lower-bound inequalities are not guaranteed", stacklevel=2)
    return ok


def u_fraction_enumerated(shape: TreeShape, q: int) -> Fraction:
    X = omega_array(shape, q)
    return Fraction(int((~forced_mask(shape, q, X)[:, 0]).sum()), len(X))


def psi_fraction_enumerated(shape: TreeShape, q: int, v: int = 0,
                            leaf: int | None = None) -> Fraction:
    leaf = shape.leaves.start if leaf is None else leaf
    states = enumerate_omega(shape, q)
    hits = sum(is_loose(shape, q, x, v, leaf) for x in states)
    return Fraction(hits, len(states))


def _int_stream(rng: np.random.Generator, high: int, block: int = 1 << 16) -> Iterator[int]:
    while True:
        yield from rng.integers(0, high, size=block).tolist()


def _lazy_forced(b: int, q: int, h: int, colour: int, draw) -> bool:
    # Top-down sampling, evaluated only as far as needed: once every colour
    # other than the vertex's own is blocked, the remaining children cannot
    # change the answer.
    if h == 0:
        return True
    blocked = set()
    for _ in range(b):
        c = (colour + 1 + next(draw)) % q
        if c in blocked:
            continue
        if _lazy_forced(b, q, h - 1, c, draw):
            blocked.add(c)
            if len(blocked) == q - 1:
                return True
    return False


@dataclass
class ForcingStats:
    h: int
    u_exact: float
    u_mc: float
    u_stderr: float
    psi: float
    epsilon: float
    trials: int

    @property
    def null_sigma(self) -> float:
        """Binomial standard deviation of u_mc if u_exact is the truth."""
        return math.sqrt(self.u_exact * (1 - self.u_exact) / self.trials)


def u_monte_carlo(b: int, q: int, h: int, trials: int, rng) -> tuple[float, float]:
    """Estimate u_h by lazily sampling uniform colourings of T_h."""
    rng = np.random.default_rng(rng)
    draw = _int_stream(rng, q - 1)
    hits = 0
    for _ in range(trials):
        root = next(draw) % q  # root colour is irrelevant by symmetry
        if not _lazy_forced(b, q, h, root, draw):
            hits += 1
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)


def forcing_stats(b: int, q: int, h: int, trials: int, rng) -> ForcingStats:
    u_mc, se = u_monte_carlo(b, q, h, trials, rng)
    psi = float(psi_exact(b, q, h)) if h >= 1 else float("nan")
    return ForcingStats(h, float(u_exact(b, q, h)), u_mc, se, psi, epsilon(b, q), trials)


# -- conductance ------------------------------------------------------------

class DegenerateCut(ValueError):
    pass


@dataclass
class ConductanceEstimate:
    pi_S: float
    flow: float
    phi_S: float
    mode: str
    pi_S_stderr: float = 0.0
    flow_stderr: float = 0.0
    phi_stderr: float = 0.0
    phi_upper: float = 0.0
    crossings: int = 0
    trials: int = 0
    exact_values: tuple | None = None  # (pi_S, flow, phi_S) as Fractions

    def to_json(self) -> dict:
        out = {
            "mode": self.mode, "pi_S": self.pi_S, "flow": self.flow, "phi_S": self.phi_S,
            "stderr": self.phi_stderr, "phi_upper": self.phi_upper,
        }
        if self.mode == "exact":
            out["exact"] = [str(v) for v in self.exact_values]
        else:
            out.update(pi_S_stderr=self.pi_S_stderr, flow_stderr=self.flow_stderr,
                       crossings=self.crossings, trials=self.trials)
        return out


def conductance_exact(spec: ChainSpec, cut=None) -> ConductanceEstimate:
    """Phi_S computed over the enumerated state space in rational arithmetic.

    ``cut`` is a set of class indices (see ``classify``); default is the
    forced-root classes 0 .. floor(q/2)-1.
    """
    shape, q = spec.shape, spec.q
    cut = root_forced_cut(q) if cut is None else frozenset(cut)
    X = omega_array(shape, q)
    F = forced_mask(shape, q, X)
    cls = np.where(F[:, 0], X[:, 0], q)
    states = [tuple(r) for r in X.tolist()]
    member = {x: int(c) in cut for x, c in zip(states, cls.tolist())}
    m = len(states)
    in_S = sum(member.values())
    if in_S in (0, m):
        raise DegenerateCut("degenerate cut: pi(S) is 0 or 1")
    out_count = in_count = 0
    for x in states:
        for _, _, y in neighbours(spec, x):
            if member[x] and not member[y]:
                out_count += 1
            elif member[y] and not member[x]:
                in_count += 1
    if out_count != in_count:
        raise AssertionError("boundary flow is not balanced; P is not symmetric")
    pi_S = Fraction(in_S, m)
    move = Fraction(1, spec.n * q)
    flow = Fraction(out_count + in_count, m) * move
    phi = flow / (2 * pi_S * (1 - pi_S))
    return ConductanceEstimate(float(pi_S), float(flow), float(phi), "exact",
                               phi_upper=float(phi), exact_values=(pi_S, flow, phi))


def _class_after_moves(shape: TreeShape, q: int, X, F, counts, v: int, c: int):
    """Root class (per sample) after recolouring ``v`` to ``c``.

    Only v and its ancestors can change forced status, so the update walks
    the path to the root using per-vertex counts of forced children by colour.
    """
    batch = X.shape[0]
    rows = np.arange(batch)
    if shape.is_leaf(v):
        new_forced = np.ones(batch, dtype=bool)
    else:
        cnt = counts[:, v, :].copy()
        cnt[:, c] = 1  # the vertex's own colour never needs a blocker
        new_forced = (cnt > 0).all(axis=1)
    old_col, old_forced = X[:, v], F[:, v]
    new_col = np.full(batch, c, dtype=X.dtype)
    w = v
    while w:
        p = (w - 1) // shape.b
        cnt = counts[:, p, :].copy()
        cnt[rows, old_col] -= old_forced
        cnt[rows, new_col] += new_forced
        cnt[rows, X[:, p]] = 1
        p_new = (cnt > 0).all(axis=1)
        old_col, old_forced, new_col, new_forced = X[:, p], F[:, p], X[:, p], p_new
        w = p
    root_col = new_col if v == 0 else X[:, 0]
    return np.where(new_forced, root_col, q)


def _crossings(shape: TreeShape, q: int, X: np.ndarray, cut) -> tuple[np.ndarray, np.ndarray]:
    """Membership of each sample in S and its number of cut-crossing moves."""
    batch, n = X.shape
    X = X.astype(np.int64)
    F = forced_mask(shape, q, X)
    cls = np.where(F[:, 0], X[:, 0], q)
    cut_arr = np.array(sorted(cut))
    in_S = np.isin(cls, cut_arr)
    counts = np.zeros((batch, n, q), dtype=np.int64)
    for v in range(1, n):
        p = (v - 1) // shape.b
        counts[np.arange(batch), p, X[:, v]] += F[:, v]
    cross = np.zeros(batch, dtype=np.int64)
    for v in range(n):
        nbr = [(v - 1) // shape.b] if v else []
        nbr += list(shape.children(v))
        for c in range(q):
            legal = X[:, v] != c
            for w in nbr:
                legal &= X[:, w] != c
            if not legal.any():
                continue
            new_cls = _class_after_moves(shape, q, X, F, counts, v, c)
            cross += legal & (np.isin(new_cls, cut_arr) != in_S)
    return in_S, cross


def conductance_mc(spec: ChainSpec, trials: int, rng, cut=None,
                   chunk: int = 5000, z: float = 4.0) -> ConductanceEstimate:
    """Monte Carlo estimate of Phi_S for the root-forcing cut.

    Samples x uniformly, then scans every proper single-vertex recolouring
    of x for moves that cross the cut. The flow is E[crossings] / (nq) and
    Phi_S = flow / (2 pi(S) (1 - pi(S))). ``phi_upper`` is a one-sided
    bound at ``z`` standard errors; with no crossings observed it falls back
    to a Wilson-type bound on the crossing probability.
    """
    shape, q = spec.shape, spec.q
    cut = root_forced_cut(q) if cut is None else frozenset(cut)
    rng = np.random.default_rng(rng)
    s = s2 = c1 = c2 = sc = 0.0
    any_cross = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        X = sample_colourings(shape, q, rng, m)
        in_S, cross = _crossings(shape, q, X, cut)
        s += in_S.sum()
        s2 += (in_S.astype(float) ** 2).sum()
        c1 += cross.sum()
        c2 += (cross.astype(float) ** 2).sum()
        sc += (in_S * cross).sum()
        any_cross += int((cross > 0).sum())
        done += m
    N = trials
    nq = spec.n * q
    pi_S = s / N
    mean_c = c1 / N
    var_s = max(s2 / N - pi_S**2, 0.0)
    var_c = max(c2 / N - mean_c**2, 0.0)
    cov = sc / N - pi_S * mean_c
    flow = mean_c / nq
    g = 2 * pi_S * (1 - pi_S)
    if g == 0:
        raise DegenerateCut("degenerate cut: no sampled state on one side")
    phi = flow / g
    # delta method for mean_c / g(pi_S)
    d_c = 1 / (nq * g)
    d_s = -flow * 2 * (1 - 2 * pi_S) / g**2
    var_phi = (d_c**2 * var_c + d_s**2 * var_s + 2 * d_c * d_s * cov) / N
    phi_se = math.sqrt(max(var_phi, 0.0))
    pi_se = math.sqrt(var_s / N)
    flow_se = math.sqrt(var_c / N) / nq
    if any_cross:
        phi_upper = phi + z * phi_se
    else:
        p_up = z * z / (N + z * z)
        g_low = 2 * min((pi_S - z * pi_se) * (1 - pi_S - z * pi_se),
                        pi_S * (1 - pi_S))
        max_cross = spec.n * (q - 1)
        phi_upper = p_up * max_cross / nq / g_low if g_low > 0 else math.inf
    return ConductanceEstimate(float(pi_S), float(flow), float(phi), "monte-carlo",
                               pi_S_stderr=pi_se, flow_stderr=flow_se,
                               phi_stderr=phi_se, phi_upper=float(phi_upper),
                               crossings=int(c1), trials=N)


def conductance_bound(b: int, q: int, H: int) -> float:
    """(9/2) epsilon^(H-1)."""
    return 4.5 * epsilon(b, q) ** (H - 1)


def boundary_pairs(spec: ChainSpec, cut=None) -> Iterator[tuple[Colouring, Colouring, int]]:
    """Enumerated (x in S, y not in S, changed vertex) with P(x, y) > 0."""
    shape, q = spec.shape, spec.q
    cut = root_forced_cut(q) if cut is None else frozenset(cut)
    for x in enumerate_omega(shape, q):
        if classify(shape, q, x) not in cut:
            continue
        for v, _, y in neighbours(spec, x):
            if classify(shape, q, y) not in cut:
                yield x, y, v

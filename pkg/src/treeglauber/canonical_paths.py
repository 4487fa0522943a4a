"""Canonical paths between proper colourings and their congestion.

The path from x to y is the sequence of single-vertex recolourings made by
``recolour`` on the whole tree. Every procedure mutates a colouring list in
place and reports each move through ``emit(v, new_colour)``.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .glauber_chain import ChainSpec, can_recolour
from .tree_model import Colouring, TreeShape, enumerate_omega, omega_size

Emit = Callable[[int, int], None]

DEFAULT_PATH_BUDGET = 2 * 10**5


class BudgetExceeded(ValueError):
    pass


class ImproperMove(AssertionError):
    """A procedure tried to make a move the chain cannot make."""


@dataclass(frozen=True)
class TransitionPath:
    start: Colouring
    moves: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.moves)

    def states(self) -> list[Colouring]:
        out = [self.start]
        x = list(self.start)
        for v, c in self.moves:
            x[v] = c
            out.append(tuple(x))
        return out

    @property
    def end(self) -> Colouring:
        return self.states()[-1]


def _set(shape: TreeShape, q: int, state: list[int], v: int, c: int, emit: Emit) -> None:
    if c == state[v] or not 0 <= c < q:
        raise ImproperMove(f"no-op or out-of-range move at vertex {v}: {state[v]} -> {c}")
    if not can_recolour(shape, state, v, c):
        raise ImproperMove(f"recolouring vertex {v} to {c} breaks properness")
    state[v] = c
    emit(v, c)


def _cycle(shape: TreeShape, q: int, v: int, state: list[int], emit: Emit, shift: int) -> None:
    root = state[v]
    # children whose colour would clash with the root's new colour after
    # shifting are left until the root has moved
    kids = shape.children(v)
    early = [w for w in kids if (state[w] + shift) % q != root]
    late = [w for w in kids if (state[w] + shift) % q == root]
    for w in early:
        _cycle(shape, q, w, state, emit, shift)
    _set(shape, q, state, v, (root + shift) % q, emit)
    for w in late:
        _cycle(shape, q, w, state, emit, shift)


def cycle_plus(shape: TreeShape, q: int, v: int, state: list[int], emit: Emit) -> None:
    """Add 1 mod q to every colour in T_v."""
    _cycle(shape, q, v, state, emit, 1)


def cycle_minus(shape: TreeShape, q: int, v: int, state: list[int], emit: Emit) -> None:
    """Subtract 1 mod q from every colour in T_v."""
    _cycle(shape, q, v, state, emit, -1)


def cycle_choice(root_colour: int, q: int, forbidden) -> int:
    """Shift (0, +1 or -1) that moves the root colour out of ``forbidden``.

    Preference order: leave alone, then +1, then -1.
    """
    if len(forbidden) > 2:
        raise ValueError("at most two forbidden colours")
    for shift in (0, 1, -1):
        if (root_colour + shift) % q not in forbidden:
            return shift
    raise AssertionError("unreachable for q >= 3")


def cycle(shape: TreeShape, q: int, v: int, forbidden, state: list[int], emit: Emit) -> int:
    shift = cycle_choice(state[v], q, forbidden)
    if shift:
        _cycle(shape, q, v, state, emit, shift)
    return shift


def recolour(shape: TreeShape, q: int, v: int, y: Sequence[int], state: list[int], emit: Emit) -> None:
    """Transform the colouring of T_v into ``y`` restricted to T_v."""
    forbidden = {state[v], y[v]}
    for w in shape.children(v):
        cycle(shape, q, w, forbidden, state, emit)
    if state[v] != y[v]:
        _set(shape, q, state, v, y[v], emit)
    for w in shape.children(v):
        recolour(shape, q, w, y, state, emit)


def canonical_path(shape: TreeShape, q: int, x: Colouring, y: Colouring) -> TransitionPath:
    state = list(x)
    moves: list[tuple[int, int]] = []
    recolour(shape, q, 0, y, state, lambda v, c: moves.append((v, c)))
    if tuple(state) != tuple(y):
        raise AssertionError("recolour did not reach its target")
    return TransitionPath(tuple(x), tuple(moves))


def cycle_path(shape: TreeShape, q: int, x: Colouring, shift: int = 1) -> TransitionPath:
    state = list(x)
    moves: list[tuple[int, int]] = []
    _cycle(shape, q, 0, state, lambda v, c: moves.append((v, c)), shift)
    return TransitionPath(tuple(x), tuple(moves))


def path_length_bound(b: int, h: int) -> int:
    """lambda(h) = n_h + b * lambda(h-1), lambda(0) = 1."""
    lam = 1
    for k in range(1, h + 1):
        lam = (b ** (k + 1) - 1) // (b - 1) + b * lam
    return lam


@dataclass
class CongestionReport:
    loads: dict[tuple[int, int], int]
    max_load: int
    A_f: float
    n_paths: int
    max_path_length: int
    pair_counts: Counter = field(default_factory=Counter)

    @property
    def max_pair_count(self) -> int:
        return max(self.pair_counts.values(), default=0)


def _transitions(path_states: list[Colouring], index: dict) -> list[tuple[int, int]]:
    ids = [index[s] for s in path_states]
    return list(zip(ids, ids[1:]))


def _pairs_worker(args):
    shape, q, sources, states = args
    index = {x: i for i, x in enumerate(states)}
    loads: Counter = Counter()
    pairs: Counter = Counter()
    longest = 0
    for i in sources:
        x = states[i]
        for j, y in enumerate(states):
            if i == j:
                continue
            state = list(x)
            seq = [x]

            def emit(v, c):
                seq.append(tuple(state))

            recolour(shape, q, 0, y, state, emit)
            if seq[-1] != y:
                raise AssertionError("recolour did not reach its target")
            length = len(seq) - 1
            longest = max(longest, length)
            used = _transitions(seq, index)
            for t in used:
                loads[t] += length
            for t in set(used):
                pairs[t] += 1
    return loads, pairs, longest


def congestion(spec: ChainSpec, budget: int = DEFAULT_PATH_BUDGET,
               threads: int = 1) -> CongestionReport:
    """Build every canonical path and measure A(f) = (nq/|Omega|) * max load.

    The load of a directed transition (z, w) is the summed length of all
    paths through it. ``pair_counts`` records how many ordered pairs use
    each transition.
    """
    m = omega_size(spec.shape, spec.q)
    if m * (m - 1) > budget:
        raise BudgetExceeded(
            f"budget exceeded: {m * (m - 1)} canonical paths exceeds path budget {budget}"
        )
    states = enumerate_omega(spec.shape, spec.q)
    if threads <= 1:
        results = [_pairs_worker((spec.shape, spec.q, range(m), states))]
    else:
        chunks = [range(k, m, threads) for k in range(threads)]
        with ProcessPoolExecutor(threads) as pool:
            results = list(pool.map(_pairs_worker,
                                    [(spec.shape, spec.q, c, states) for c in chunks]))
    loads: Counter = Counter()
    pairs: Counter = Counter()
    longest = 0
    for l, p, n in results:
        loads.update(l)
        pairs.update(p)
        longest = max(longest, n)
    max_load = max(loads.values(), default=0)
    A_f = spec.n * spec.q * max_load / m
    return CongestionReport(dict(loads), max_load, A_f, m * (m - 1), longest, pairs)


def consistent_counts(spec: ChainSpec, procedure: str = "cycle_plus",
                      budget: int = DEFAULT_PATH_BUDGET) -> Counter:
    """For each transition, how many starting points have a path through it.

    ``cycle_plus`` / ``cycle_minus`` replay the procedure on the whole tree
    from every colouring x; ``recolour`` replays every ordered pair x != y.
    """
    if procedure == "recolour":
        return congestion(spec, budget).pair_counts
    shift = {"cycle_plus": 1, "cycle_minus": -1}[procedure]
    states = enumerate_omega(spec.shape, spec.q)
    index = {x: i for i, x in enumerate(states)}
    counts: Counter = Counter()
    for x in states:
        used = _transitions(cycle_path(spec.shape, spec.q, x, shift).states(), index)
        for t in set(used):
            counts[t] += 1
    return counts


def count_consistent_states(spec: ChainSpec, transition: tuple[Colouring, Colouring],
                            procedure: str = "cycle_plus") -> int:
    states = enumerate_omega(spec.shape, spec.q)
    index = {x: i for i, x in enumerate(states)}
    z, w = transition
    return consistent_counts(spec, procedure).get((index[tuple(z)], index[tuple(w)]), 0)

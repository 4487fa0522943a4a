import itertools

import numpy as np
import pytest

from treeglauber.tree_model import TreeShape

ENUMERABLE = [(2, 1, 3), (2, 2, 3), (3, 1, 3), (2, 1, 4)]


def brute_states(b, H, q):
    """Proper colourings by filtering every q^n tuple (no tree-model code)."""
    n = (b ** (H + 1) - 1) // (b - 1)
    return [x for x in itertools.product(range(q), repeat=n)
            if all(x[v] != x[(v - 1) // b] for v in range(1, n))]


def brute_matrix(b, H, q):
    """Transition matrix by counting every (vertex, colour) proposal."""
    n = (b ** (H + 1) - 1) // (b - 1)
    states = brute_states(b, H, q)
    index = {x: i for i, x in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, x in enumerate(states):
        for v in range(n):
            for c in range(q):
                y = x[:v] + (c,) + x[v + 1:]
                j = index.get(y, i)  # improper proposals are rejected
                P[i, j] += 1.0 / (n * q)
    return states, P


@pytest.fixture(params=ENUMERABLE, ids=lambda p: "b%d-H%d-q%d" % p)
def enumerable(request):
    b, H, q = request.param
    return TreeShape(b, H), q


# criterion number -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

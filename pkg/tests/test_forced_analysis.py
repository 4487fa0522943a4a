import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from treeglauber.forced_analysis import (
    DegenerateCut,
    boundary_pairs,
    classify,
    conductance_bound,
    conductance_exact,
    conductance_mc,
    epsilon,
    forced_mask,
    forced_set,
    forced_set_bruteforce,
    is_loose,
    psi_exact,
    psi_fraction_enumerated,
    regime_holds,
    u_exact,
    u_fraction_enumerated,
    u_monte_carlo,
    warn_regime,
)
from treeglauber.glauber_chain import ChainSpec, build_matrix
from treeglauber.tree_model import TreeShape, enumerate_omega, sample_colourings


def naive_forced(shape, q, x):
    """w is forced iff every proper colouring of T_w with x's leaves gives w x(w)."""
    out = set()
    for w in range(shape.n):
        verts = shape.subtree_vertices(w)
        leaves = [u for u in verts if shape.is_leaf(u)]
        inner = [u for u in verts if not shape.is_leaf(u)]
        roots = set()
        for cols in itertools.product(range(q), repeat=len(inner)):
            z = dict(zip(inner, cols))
            z.update({u: x[u] for u in leaves})
            if all(z[u] != z[shape.parent(u)] for u in verts if u != w):
                roots.add(z[w])
        if roots == {x[w]}:
            out.add(w)
    return frozenset(out)


def test_forced_examples():
    s = TreeShape(2, 1)
    assert forced_set(s, 3, (0, 1, 2)) == {0, 1, 2}
    assert forced_set(s, 3, (0, 1, 1)) == {1, 2}
    assert forced_set(TreeShape(3, 0), 3, (2,)) == {0}


def test_forced_oracles(enumerable):
    shape, q = enumerable
    states = enumerate_omega(shape, q)
    batch = forced_mask(shape, q, np.array(states))
    for i, x in enumerate(states):
        f = forced_set(shape, q, x)
        assert f == forced_set_bruteforce(shape, q, x)
        assert f == frozenset(np.flatnonzero(batch[i]).tolist())
        assert set(shape.leaves) <= f


def test_forced_matches_naive_definition():
    for b, H, q in [(2, 2, 3), (3, 1, 3), (2, 1, 4)]:
        s = TreeShape(b, H)
        for x in enumerate_omega(s, q)[::5]:
            assert forced_set(s, q, x) == naive_forced(s, q, x)


def test_is_loose_examples():
    s = TreeShape(2, 1)
    assert is_loose(s, 3, (0, 1, 2), 0, 1)
    assert is_loose(s, 3, (0, 1, 1), 0, 2)
    with pytest.raises(ValueError):
        is_loose(s, 3, (0, 1, 2), 1, 1)
    with pytest.raises(ValueError):
        is_loose(TreeShape(2, 2), 3, (0, 1, 2, 0, 2, 0, 1), 1, 6)


def test_classify_examples():
    s = TreeShape(2, 1)
    assert classify(s, 3, (0, 1, 2)) == 0
    assert classify(s, 3, (0, 1, 1)) == 3
    assert classify(TreeShape(2, 0), 3, (2,)) == 2


def test_u_small_values():
    assert u_exact(2, 3, 0) == 0
    assert u_exact(2, 3, 1, exact=True) == Fraction(1, 2)
    assert u_fraction_enumerated(TreeShape(2, 1), 3) == Fraction(6, 12)


def test_u_recursion_matches_enumeration(enumerable):
    shape, q = enumerable
    assert u_exact(shape.b, q, shape.H, exact=True) == u_fraction_enumerated(shape, q)
    assert abs(u_exact(shape.b, q, shape.H) - float(u_fraction_enumerated(shape, q))) <= 1e-12


def test_u_recursion_matches_more_enumeration():
    for b, H, q in [(3, 2, 3), (2, 3, 3), (4, 1, 3), (3, 1, 4), (2, 2, 4)]:
        s = TreeShape(b, H)
        assert u_exact(b, q, H, exact=True) == u_fraction_enumerated(s, q)


def test_psi_recursion_matches_enumeration():
    assert psi_exact(2, 3, 1) == 1
    for b, H, q in [(2, 1, 3), (2, 2, 3), (3, 1, 3), (3, 2, 3), (2, 1, 4), (4, 1, 3)]:
        s = TreeShape(b, H)
        for leaf in (s.leaves.start, s.leaves.stop - 1):
            assert psi_exact(b, q, H, exact=True) == psi_fraction_enumerated(s, q, 0, leaf)


def test_lazy_mc_matches_full_sampling():
    # b=3, q=3 keeps u_h large enough for a sharp comparison
    b, q, H, N = 3, 3, 3, 20000
    s = TreeShape(b, H)
    X = sample_colourings(s, q, np.random.default_rng(5), N)
    full = (~forced_mask(s, q, X)[:, 0]).mean()
    lazy, se = u_monte_carlo(b, q, H, N, 6)
    u = u_exact(b, q, H)
    sigma = math.sqrt(u * (1 - u) / N)
    assert abs(full - u) <= 4 * sigma
    assert abs(lazy - u) <= 4 * sigma


@pytest.mark.parametrize("b,q", [(3, 3), (4, 3), (5, 4), (6, 3)])
def test_u_mc_informative(b, q):
    N = 20000
    rng = np.random.default_rng(b * 100 + q)
    for h in range(1, 6):
        u = u_exact(b, q, h)
        est, _ = u_monte_carlo(b, q, h, N, rng)
        assert abs(est - u) <= 4 * math.sqrt(u * (1 - u) / N)


def test_u_proof_chain_in_regime():
    for b in [20, 30, 64]:
        for q in range(3, 17):
            if not regime_holds(b, q):
                continue
            for h in range(11):
                u = u_exact(b, q, h)
                a = (q - 1) * math.exp(-(b - 1) / (q - 1))
                assert u <= a <= (q - 1) / b**2 <= 1 / b


def test_epsilon_value():
    assert math.isclose(epsilon(20, 3), 2 * math.exp(-9), rel_tol=1e-9)
    assert math.isclose(epsilon(20, 3), 2.4682e-4, rel_tol=1e-4)


def test_psi_below_epsilon():
    for h in range(1, 11):
        assert psi_exact(20, 3, h) <= epsilon(20, 3)


def test_regime_warning():
    with pytest.warns(UserWarning):
        assert not warn_regime(6, 3)
    assert regime_holds(20, 3)


def test_conductance_exact_example():
    est = conductance_exact(ChainSpec(TreeShape(2, 1), 3))
    assert est.exact_values == (Fraction(1, 6), Fraction(2, 27), Fraction(4, 15))


def test_conductance_exact_matches_matrix_sum(enumerable):
    shape, q = enumerable
    spec = ChainSpec(shape, q)
    if u_exact(shape.b, q, shape.H) == 1:
        # b=2, q=4: two children never block three colours, so S is empty
        with pytest.raises(DegenerateCut):
            conductance_exact(spec)
        return
    tm = build_matrix(spec, exact=True)
    S = [classify(shape, q, x) in range(q // 2) for x in tm.states]
    pi = Fraction(1, tm.size)
    out = sum(pi * tm.entries[i, j] for i in range(tm.size) for j in range(tm.size)
              if S[i] and not S[j])
    inn = sum(pi * tm.entries[i, j] for i in range(tm.size) for j in range(tm.size)
              if S[j] and not S[i])
    assert out == inn
    pS = Fraction(sum(S), tm.size)
    assert conductance_exact(spec).exact_values[2] == (out + inn) / (2 * pS * (1 - pS))


def test_degenerate_cut():
    with pytest.raises(DegenerateCut):
        conductance_exact(ChainSpec(TreeShape(2, 1), 3), cut=range(4))


def test_conductance_mc_agrees_with_exact():
    spec = ChainSpec(TreeShape(2, 1), 3)
    mc = conductance_mc(spec, 10**5, 3)
    assert abs(mc.phi_S - 4 / 15) <= 4 * mc.phi_stderr
    for shape, q in [(TreeShape(2, 2), 3), (TreeShape(3, 1), 3), (TreeShape(3, 2), 3)]:
        spec = ChainSpec(shape, q)
        mc = conductance_mc(spec, 20000, 9)
        ex = conductance_exact(spec)
        assert abs(mc.phi_S - ex.phi_S) <= 4 * mc.phi_stderr
        assert abs(mc.pi_S - ex.pi_S) <= 4 * mc.pi_S_stderr


def test_conductance_mc_zero_crossings_bound():
    # b=20: leaves essentially never unforce the root in a small sample
    spec = ChainSpec(TreeShape(20, 2), 3)
    mc = conductance_mc(spec, 2000, 1)
    assert mc.crossings == 0 and mc.phi_S == 0
    assert 0 < mc.phi_upper < math.inf


def test_crossing_structure(enumerable):
    shape, q = enumerable
    spec = ChainSpec(shape, q)
    for x, y, v in boundary_pairs(spec):
        assert shape.is_leaf(v)
        assert 0 not in forced_set(shape, q, y)
        for a in shape.ancestors(v):
            assert is_loose(shape, q, x, a, v)


def test_conductance_bound_value():
    assert math.isclose(conductance_bound(20, 3, 2), 4.5 * 2 * math.exp(-9))

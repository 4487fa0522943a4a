"""Run every executable check for one (b, H, q) and collect pass/fail lines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .canonical_paths import (
    BudgetExceeded,
    DEFAULT_PATH_BUDGET,
    congestion,
    consistent_counts,
    path_length_bound,
)
from .forced_analysis import (
    boundary_pairs,
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
)
from .glauber_chain import (
    DEFAULT_MAX_MATRIX,
    ChainSpec,
    build_matrix,
    check_ergodic,
    distance_profile,
    is_symmetric,
    min_diagonal,
    mixing_time_exact,
    stationarity_error,
)
from .tree_model import StateSpaceTooLarge, TreeShape, enumerate_omega, omega_size

EXACT_SYMMETRY_CAP = 2000
MC_HEIGHT_CAP = 5


@dataclass
class Check:
    name: str
    holds: bool
    detail: dict = field(default_factory=dict)
    conditional: bool = False

    def to_json(self) -> dict:
        return {"name": self.name, "holds": self.holds, "conditional": self.conditional,
                "detail": self.detail}


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    regime_ok: bool = False

    def add(self, name, holds, conditional=False, **detail):
        self.checks.append(Check(name, bool(holds), detail, conditional))

    def skip(self, section, reason):
        self.skipped.append({"section": section, "reason": reason})

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks
                if not c.holds and (self.regime_ok or not c.conditional)]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"ok": self.ok, "regime_ok": self.regime_ok,
                "checks": [c.to_json() for c in self.checks],
                "skipped": self.skipped, "warnings": self.warnings}


def _chain_section(rep: VerifyReport, spec: ChainSpec, delta: float, A_f: float | None):
    tm = build_matrix(spec)
    rep.add("stationarity ||uP-u||_1 <= 1e-12", stationarity_error(tm) <= 1e-12,
            error=stationarity_error(tm))
    if tm.size <= EXACT_SYMMETRY_CAP:
        rep.add("P symmetric (rational)", is_symmetric(build_matrix(spec, exact=True)))
    else:
        rep.add("P symmetric (float, 1e-15)", is_symmetric(tm))
    rep.add("min diagonal >= 1/q", min_diagonal(tm) >= 1 / spec.q - 1e-15,
            min_diag=float(min_diagonal(tm)))
    rep.add("ergodic", check_ergodic(spec.shape, spec.q))
    tau = mixing_time_exact(spec, delta, tm=tm)
    profile = distance_profile(tm, tau)
    rep.add("d(t) non-increasing", all(a >= b - 1e-15 for a, b in zip(profile, profile[1:])))
    upper = bounds.upper_mixing_bound(spec.shape.b, spec.q, spec.n)
    rep.add("tau <= 3bq^2(1+lg n)n^(3+3b/ln b)", tau <= upper, tau=tau, bound=upper)
    if A_f is not None:
        rhs = bounds.comparison_rhs(A_f, 1, 1 / (2 * math.e**2), 1 / spec.q, delta,
                                    1 / tm.size)
        rep.add("tau <= comparison RHS with measured A(f)", tau <= rhs, tau=tau, rhs=rhs)


def _paths_section(rep: VerifyReport, spec: ChainSpec, budget: int, threads: int):
    b, H, q = spec.shape.b, spec.shape.H, spec.q
    r = congestion(spec, budget, threads)
    rep.add("all canonical paths valid", True, paths=r.n_paths)
    rep.add("|gamma| <= lambda(H) recurrence", r.max_path_length <= path_length_bound(b, H),
            longest=r.max_path_length, bound=path_length_bound(b, H))
    rep.add("|gamma| <= (H+1) b^(H+1)", r.max_path_length <= (H + 1) * b ** (H + 1))
    cb = bounds.congestion_bound(b, q, H)
    rep.add("A(f) <= bq(H+1)n^2 9^(bH)", r.A_f <= cb, A_f=r.A_f, max_load=r.max_load,
            bound=cb)
    s_max = max(consistent_counts(spec, "cycle_plus").values())
    rep.add("Cycle+ consistent states <= 2^(bH)", s_max <= 2 ** (b * H), count=s_max,
            bound=2 ** (b * H))
    p_bound = bounds.colourings_count(b, q, H) * 9 ** (b * H)
    rep.add("Recolour consistent pairs <= C(H) 9^(bH)", r.max_pair_count <= p_bound,
            count=r.max_pair_count, bound=p_bound)
    return r.A_f


def _forced_section(rep: VerifyReport, spec: ChainSpec):
    shape, q = spec.shape, spec.q
    b, H = shape.b, shape.H
    states = enumerate_omega(shape, q)
    mismatches = sum(forced_set(shape, q, x) != forced_set_bruteforce(shape, q, x)
                     for x in states)
    rep.add("forced set equals brute-force definition", mismatches == 0,
            mismatches=mismatches, states=len(states))
    enum_u = u_fraction_enumerated(shape, q)
    rep.add("u_exact equals enumerated fraction", abs(float(enum_u) - u_exact(b, q, H)) <= 1e-12,
            u_exact=u_exact(b, q, H), enumerated=str(enum_u))
    if H >= 1:
        enum_psi = psi_fraction_enumerated(shape, q)
        rep.add("psi_exact equals enumerated fraction",
                abs(float(enum_psi) - psi_exact(b, q, H)) <= 1e-12,
                psi_exact=psi_exact(b, q, H), enumerated=str(enum_psi))
    bad_leaf = bad_loose = 0
    X = np.array(states)
    F = forced_mask(shape, q, X)
    index = {x: i for i, x in enumerate(states)}
    for x, y, v in boundary_pairs(spec):
        if not shape.is_leaf(v):
            bad_leaf += 1
            continue
        fx = frozenset(np.flatnonzero(F[index[x]]).tolist())
        path = [a for a in shape.ancestors(v) if shape.height(a) >= 1]
        if not all(is_loose(shape, q, x, a, v, fx) for a in path):
            bad_loose += 1
    rep.add("cut crossings from forced roots change a leaf", bad_leaf == 0, violations=bad_leaf)
    rep.add("root-unforcing leaf moves have an l-loose path", bad_loose == 0,
            violations=bad_loose)


def verify_all(b: int, H: int, q: int, seed: int, trials: int = 10**4,
               delta: float = 1 / (2 * math.e), max_matrix: int = DEFAULT_MAX_MATRIX,
               path_budget: int = DEFAULT_PATH_BUDGET, threads: int = 1) -> VerifyReport:
    shape = TreeShape(b, H)
    spec = ChainSpec(shape, q)
    rep = VerifyReport(regime_ok=regime_holds(b, q))
    if not rep.regime_ok:
        rep.warnings.append(f"2q <= b/ln(b) fails for b={b}, q={q}; "
                            "lower-bound checks are reported but not enforced")
    size = omega_size(shape, q)
    streams = np.random.SeedSequence(seed).spawn(3)

    A_f = None
    try:
        A_f = _paths_section(rep, spec, path_budget, threads)
    except (BudgetExceeded, StateSpaceTooLarge) as e:
        rep.skip("canonical paths", str(e))
    if size <= max_matrix:
        _chain_section(rep, spec, delta, A_f)
        _forced_section(rep, spec)
    else:
        rep.skip("exact chain and forced-set oracles",
                 f"|Omega| = {size} exceeds matrix cap {max_matrix}")

    for h in range(0, H + 1):
        u = u_exact(b, q, h)
        rep.add(f"u_{h} <= 1/b", u <= 1 / b, conditional=True, u=u)
        if h >= 1:
            rep.add(f"psi_{h} <= epsilon", psi_exact(b, q, h) <= epsilon(b, q),
                    conditional=True, psi=psi_exact(b, q, h), epsilon=epsilon(b, q))
    u_rng = np.random.default_rng(streams[0])
    for h in range(1, min(H, MC_HEIGHT_CAP) + 1):
        u = u_exact(b, q, h)
        est, se = u_monte_carlo(b, q, h, trials, u_rng)
        sigma = math.sqrt(u * (1 - u) / trials)
        rep.add(f"u_{h} Monte Carlo within 4 sigma", abs(est - u) <= 4 * sigma,
                u_exact=u, u_mc=est, stderr=se)

    bound = conductance_bound(b, q, H)
    exact = None
    if size <= max_matrix:
        exact = conductance_exact(spec)
        rep.add("exact Phi_S <= (9/2) eps^(H-1)", exact.phi_S <= bound, conditional=True,
                phi_S=exact.phi_S, exact=str(exact.exact_values[2]), bound=bound)
    try:
        mc = conductance_mc(spec, trials, np.random.default_rng(streams[1]))
        rep.add("Monte Carlo Phi_S one-sided bound <= (9/2) eps^(H-1)", mc.phi_upper <= bound,
                conditional=True, phi_S=mc.phi_S, phi_upper=mc.phi_upper, bound=bound)
        if exact is not None:
            rep.add("Monte Carlo Phi_S within 4 sigma of exact",
                    abs(mc.phi_S - exact.phi_S) <= 4 * mc.phi_stderr,
                    phi_mc=mc.phi_S, stderr=mc.phi_stderr, phi_exact=exact.phi_S)
    except ValueError as e:
        rep.skip("Monte Carlo conductance", str(e))

    for r in bounds.all_bounds(b, q, H):
        rep.checks.append(Check(r.name, r.holds, r.to_json()["parameters"]
                                | {"lhs": r.to_json()["lhs"], "rhs": r.to_json()["rhs"]},
                                r.conditional))
    return rep

"""Command-line front end.

Exit codes: 0 on success, 2 when a checked bound is violated, 1 on usage or
resource errors (including a state space over its cap).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings

import numpy as np

from . import bounds
from .canonical_paths import (
    DEFAULT_PATH_BUDGET,
    BudgetExceeded,
    ImproperMove,
    canonical_path,
    congestion,
    consistent_counts,
    path_length_bound,
)
from .forced_analysis import (
    DegenerateCut,
    conductance_bound,
    conductance_exact,
    conductance_mc,
    forcing_stats,
    warn_regime,
)
from .glauber_chain import (
    DEFAULT_MAX_MATRIX,
    ChainSpec,
    build_matrix,
    min_diagonal,
    mixing_time_exact,
    simulate,
    stationarity_error,
)
from .tree_model import (
    StateSpaceTooLarge,
    TreeShape,
    is_proper,
    omega_size,
    sample_uniform_colouring,
)
from .verify import verify_all

OK, USAGE, VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--max-omega", type=int,
                        default=_env_int("TREEGLAUBER_MAX_MATRIX", DEFAULT_MAX_MATRIX),
                        help="largest state space for exact matrix routines")
    common.add_argument("--path-budget", type=int,
                        default=_env_int("TREEGLAUBER_PATH_BUDGET", DEFAULT_PATH_BUDGET),
                        help="largest number of canonical paths to build")
    common.add_argument("--threads", type=int, default=1)

    def tree(p, H=True, default_q=3):
        p.add_argument("--b", type=int, required=True)
        if H:
            p.add_argument("--H", type=int, required=True)
        p.add_argument("--q", type=int, default=default_q)

    parser = _Parser(prog="treeglauber",
                     description="Glauber dynamics for colourings of complete b-ary trees")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mix-exact", parents=[common], help="exact mixing time")
    tree(p)
    p.add_argument("--delta", type=float, default=1 / (2 * math.e))

    p = sub.add_parser("simulate", parents=[common], help="CSV trace of a chain run")
    tree(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x", help="starting colouring as a JSON array (default: uniform sample)")

    p = sub.add_parser("path", parents=[common], help="canonical path between two colourings")
    tree(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)

    p = sub.add_parser("congestion", parents=[common], help="measured congestion A(f)")
    tree(p)

    p = sub.add_parser("forced-stats", parents=[common], help="CSV of u_h estimates")
    tree(p, H=False)
    p.add_argument("--h-max", type=int, required=True)
    p.add_argument("--trials", type=int, default=10**4)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("conductance", parents=[common], help="conductance of the cut S")
    tree(p)
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--trials", type=int, default=10**4)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bounds", parents=[common], help="closed-form bound reports")
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--H", type=int)
    p.add_argument("--n", type=int)

    p = sub.add_parser("verify-all", parents=[common], help="run every check")
    tree(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10**4)
    p.add_argument("--delta", type=float, default=1 / (2 * math.e))
    return parser


def _colouring(text: str, shape: TreeShape, q: int) -> tuple[int, ...]:
    try:
        x = tuple(int(c) for c in json.loads(text))
    except (ValueError, TypeError) as e:
        raise UsageError(f"cannot parse colouring {text!r}: {e}") from e
    try:
        proper = is_proper(shape, x, q)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if not proper:
        raise UsageError(f"colouring {list(x)} is not proper")
    return x


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "out"}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_mix_exact(args):
    spec = ChainSpec(TreeShape(args.b, args.H), args.q)
    tm = build_matrix(spec, cap=args.max_omega)
    tau = mixing_time_exact(spec, args.delta, tm=tm)
    upper = bounds.upper_mixing_bound(args.b, args.q, spec.n)
    ok = bool(tau <= upper)
    return _dump({"config": _config(args), "tau": tau, "omega_size": tm.size,
                  "min_diag": float(min_diagonal(tm)),
                  "stationary_check": stationarity_error(tm),
                  "upper_bound": upper, "ok": ok}), ok


def cmd_simulate(args):
    spec = ChainSpec(TreeShape(args.b, args.H), args.q)
    rng = np.random.default_rng(args.seed)
    x0 = (_colouring(args.x, spec.shape, spec.q) if args.x
          else sample_uniform_colouring(spec.shape, spec.q, rng))
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(_config(args), sort_keys=True)}\n")
    buf.write(f"# start: {json.dumps(list(x0))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "changed_vertex", "new_colour"])
    for t, v, c, _ in simulate(spec, x0, args.steps, rng):
        if v >= 0:
            w.writerow([t, v, c])
    return buf.getvalue(), True


def cmd_path(args):
    shape = TreeShape(args.b, args.H)
    if args.q < 3:
        raise UsageError("canonical paths need q >= 3")
    x = _colouring(args.x, shape, args.q)
    y = _colouring(args.y, shape, args.q)
    path = canonical_path(shape, args.q, x, y)
    bound = path_length_bound(args.b, args.H)
    ok = len(path) <= bound
    return _dump({"config": _config(args), "moves": [list(m) for m in path.moves],
                  "length": len(path), "length_bound": bound, "ok": ok}), ok


def cmd_congestion(args):
    spec = ChainSpec(TreeShape(args.b, args.H), args.q)
    r = congestion(spec, args.path_budget, args.threads)
    bound = bounds.congestion_bound(args.b, args.q, args.H)
    s_max = max(consistent_counts(spec, "cycle_plus").values())
    ok = r.A_f <= bound and s_max <= 2 ** (args.b * args.H)
    return _dump({"config": _config(args), "A_f": r.A_f, "max_load": r.max_load,
                  "bound": bound, "paths": r.n_paths, "max_path_length": r.max_path_length,
                  "cycle_plus_max_consistent": s_max, "s_bound": 2 ** (args.b * args.H),
                  "recolour_max_consistent_pairs": r.max_pair_count, "ok": bool(ok)}), ok


def cmd_forced_stats(args):
    warn_regime(args.b, args.q)
    rng = np.random.default_rng(args.seed)
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(_config(args), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "u_exact", "u_mc", "stderr", "bound_1_over_b"])
    for h in range(args.h_max + 1):
        st = forcing_stats(args.b, args.q, h, args.trials, rng)
        w.writerow([h, repr(st.u_exact), repr(st.u_mc), repr(st.u_stderr), repr(1 / args.b)])
    return buf.getvalue(), True


def cmd_conductance(args):
    spec = ChainSpec(TreeShape(args.b, args.H), args.q)
    regime_ok = warn_regime(args.b, args.q)
    if args.mode == "exact":
        size = omega_size(spec.shape, spec.q)
        if size > args.max_omega:
            raise StateSpaceTooLarge(
                f"state space too large: |Omega| = {size} exceeds cap {args.max_omega}")
        est = conductance_exact(spec)
    else:
        est = conductance_mc(spec, args.trials, np.random.default_rng(args.seed))
    bound = conductance_bound(args.b, args.q, args.H)
    ok = est.phi_upper <= bound
    out = {"config": _config(args), **est.to_json(), "paper_bound": bound, "ok": ok,
           "regime_ok": regime_ok}
    return _dump(out), ok or not regime_ok


def cmd_bounds(args):
    if args.H is None and args.n is None:
        raise UsageError("give --H or --n")
    H = args.H if args.H is not None else bounds.height_of(args.b, args.n)
    if args.n is not None and bounds.tree_size(args.b, H) != args.n:
        raise UsageError(f"--n {args.n} does not match --H {H}")
    reps = bounds.all_bounds(args.b, args.q, H)
    regime_ok = bounds.regime(args.b, args.q).holds
    if not regime_ok:
        warn_regime(args.b, args.q)
    ok = not bounds.failures(reps, regime_ok)
    return _dump([r.to_json() for r in reps]), ok


def cmd_verify_all(args):
    rep = verify_all(args.b, args.H, args.q, args.seed, args.trials, args.delta,
                     args.max_omega, args.path_budget, args.threads)
    for msg in rep.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return _dump({"config": _config(args), **rep.to_json()}), rep.ok


COMMANDS = {
    "mix-exact": cmd_mix_exact,
    "simulate": cmd_simulate,
    "path": cmd_path,
    "congestion": cmd_congestion,
    "forced-stats": cmd_forced_stats,
    "conductance": cmd_conductance,
    "bounds": cmd_bounds,
    "verify-all": cmd_verify_all,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    warnings.simplefilter("always")
    warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
    try:
        text, ok = COMMANDS[args.command](args)
    except (StateSpaceTooLarge, BudgetExceeded, DegenerateCut, UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except ImproperMove as e:
        print(f"bound violated: {e}", file=sys.stderr)
        return VIOLATION
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return OK if ok else VIOLATION


if __name__ == "__main__":
    sys.exit(main())

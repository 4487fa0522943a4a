"""Closed-form bounds on tree height, path counts, and mixing times.

Every inequality is reported as ``lhs <= rhs``; bounds stated the other way
round are stored with the sides swapped. Integer-valued quantities use
Python ints and rational ones use Fractions; exponential forms are floats
compared at relative tolerance 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

REL_TOL = 1e-9


@dataclass
class BoundReport:
    name: str
    lhs: float
    rhs: float
    holds: bool
    parameters: dict = field(default_factory=dict)
    # only meaningful when 2q <= b/ln(b); a failure outside that regime is a warning
    conditional: bool = False

    def to_json(self) -> dict:
        def num(v):
            if isinstance(v, tuple):
                return [num(a) for a in v]
            if isinstance(v, int) and abs(v) >= 2**53:
                return str(v)
            if isinstance(v, Fraction):
                try:
                    return float(v)
                except OverflowError:
                    return str(v)
            return v
        return {"name": self.name, "lhs": num(self.lhs), "rhs": num(self.rhs),
                "holds": self.holds, "conditional": self.conditional,
                "parameters": self.parameters}


def _leq(lhs, rhs) -> bool:
    if isinstance(lhs, (int, Fraction)) and isinstance(rhs, (int, Fraction)):
        return lhs <= rhs
    return lhs <= rhs + REL_TOL * abs(rhs)


def report(name: str, lhs, rhs, conditional: bool = False, **params) -> BoundReport:
    return BoundReport(name, lhs, rhs, _leq(lhs, rhs), params, conditional)


def tree_size(b: int, H: int) -> int:
    return (b ** (H + 1) - 1) // (b - 1)


def height_of(b: int, n: int) -> int:
    """Inverse of ``tree_size``; rejects n that is not a complete-tree size."""
    H = 0
    while tree_size(b, H) < n:
        H += 1
    if tree_size(b, H) != n:
        raise ValueError(f"n={n} is not the size of a complete {b}-ary tree")
    return H


def height_bounds(b: int, n: int) -> list[BoundReport]:
    H = height_of(b, n)
    p = {"b": b, "n": n, "H": H}
    out = [
        report("H+1 <= lg(n)+1", H + 1, math.log2(n) + 1, **p),
        report("H <= ln(n)/ln(b)", H, math.log(n) / math.log(b), **p),
    ]
    if n >= b**3:
        out.append(report("ln(n)/(3 ln b) <= H-1", math.log(n) / (3 * math.log(b)), H - 1, **p))
    return out


def colourings_count(b: int, q: int, h: int) -> int:
    """C(h) = q (q-1)^(n_h - 1)."""
    return q * (q - 1) ** (tree_size(b, h) - 1)


def lam(b: int, h: int) -> int:
    """lambda(h) = n_h + b lambda(h-1), lambda(0) = 1."""
    out = 1
    for k in range(1, h + 1):
        out = tree_size(b, k) + b * out
    return out


def chi(b: int, q: int, h: int) -> Fraction:
    """chi(h) = (3q/(q-1))^b [2^((h-1)b) + chi(h-1)], chi(0) = 1/q, taken with equality."""
    ratio = Fraction(3 * q, q - 1) ** b
    out = Fraction(1, q)
    for k in range(1, h + 1):
        out = ratio * (2 ** ((k - 1) * b) + out)
    return out


# larger trees keep C(h) as exponents of q and q-1 instead of a big integer
MAX_EXPLICIT_TREE = 4096


def _identity_sides(b: int, q: int, h: int):
    if tree_size(b, h) <= MAX_EXPLICIT_TREE:
        return (q ** (b - 1) * colourings_count(b, q, h),
                (q - 1) ** b * colourings_count(b, q, h - 1) ** b)
    # (power of q, power of q-1) on each side
    return ((b, tree_size(b, h) - 1), (b, b + b * (tree_size(b, h - 1) - 1)))


def recurrences(b: int, q: int, h: int) -> dict:
    """C(h), lambda(h) and the bound values 2^(bh), 9^(bh), with their checks.

    ``C`` is None when the tree is too large to write C(h) out.
    """
    if h < 0:
        raise ValueError("h must be >= 0")
    p = {"b": b, "q": q, "h": h}
    C = colourings_count(b, q, h) if tree_size(b, h) <= MAX_EXPLICIT_TREE else None
    lam_h = lam(b, h)
    chi_h = chi(b, q, h)
    checks = [
        report("lambda(h) <= (h+1) b^(h+1)", lam_h, (h + 1) * b ** (h + 1), **p),
        report("chi(h) <= 9^(bh)", chi_h, 9 ** (b * h), **p),
    ]
    if h >= 1:
        lhs, rhs = _identity_sides(b, q, h)
        checks.append(BoundReport("q^(b-1) C(h) == (q-1)^b C(h-1)^b", lhs, rhs, lhs == rhs, p))
    return {"C": C, "lambda": lam_h, "s_bound": 2 ** (b * h), "chi": chi_h,
            "chi_bound": 9 ** (b * h), "checks": checks}


def identity_holds(b: int, q: int, h: int) -> bool:
    lhs, rhs = _identity_sides(b, q, h)
    return lhs == rhs


def regime(b: int, q: int) -> BoundReport:
    return report("2q <= b/ln(b)", 2 * q, b / math.log(b), conditional=True, b=b, q=q)


def branching_condition(b: int, q: int) -> BoundReport:
    return report("2(q-1)ln(q-1) <= b-2", 2 * (q - 1) * math.log(q - 1), b - 2,
                  conditional=True, b=b, q=q)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def upper_mixing_bound(b: int, q: int, n: int) -> float:
    """3 b q^2 (1 + lg n) n^(3 + 3b/ln b); inf if it overflows a double."""
    return _exp(math.log(3 * b * q**2 * (1 + math.log2(n)))
                + (3 + 3 * b / math.log(b)) * math.log(n))


def lower_mixing_bound(b: int, q: int, n: int) -> float:
    """(1/2 - 1/(2e)) (2/9) n^((b-2)/(6(q-1) ln b))."""
    return (0.5 - 0.5 / math.e) * (2 / 9) * _exp(
        math.log(n) * (b - 2) / (6 * (q - 1) * math.log(b)))


def theorem_bounds(b: int, q: int, n: int) -> dict:
    if q < 3:
        raise ValueError("need q >= 3")
    return {
        "upper": upper_mixing_bound(b, q, n),
        "lower": lower_mixing_bound(b, q, n),
        "regime": regime(b, q),
        "branching": branching_condition(b, q),
        "lower_applies": 3 <= q <= b / (2 * math.log(b)),
    }


def congestion_bound(b: int, q: int, H: int) -> int:
    """b q (H+1) n^2 9^(bH)."""
    n = tree_size(b, H)
    return b * q * (H + 1) * n**2 * 9 ** (b * H)


def comparison_rhs(A_f: float, tau_aux: int, delta_aux: float, c: float,
                   delta: float, pi_min: float) -> float:
    """max{A_f (tau_aux / ln(1/(2 delta_aux)) + 1), 1/(2c)} ln(1/(delta pi_min))."""
    if not 0 < delta_aux < 0.5:
        raise ValueError("delta_aux must lie in (0, 1/2)")
    if c <= 0:
        raise ValueError("c must be positive")
    return max(A_f * (tau_aux / math.log(1 / (2 * delta_aux)) + 1), 1 / (2 * c)) \
        * math.log(1 / (delta * pi_min))


def lower_bound_chain(b: int, q: int, H: int) -> list[BoundReport]:
    """eps^-(H-1) >= e^((H-1)(b-2)/(2(q-1))) >= n^((b-2)/(6(q-1) ln b)).

    Sides are compared as natural logarithms so large b or H cannot
    overflow. The last step needs n >= b^3 and is omitted otherwise. The
    first report checks eps^-(H-1) against its exponential rewriting.
    """
    if H < 1:
        raise ValueError("need H >= 1")
    n = tree_size(b, H)
    p = {"b": b, "q": q, "H": H, "n": n}
    log_eps = math.log(q - 1) - (b - 2) / (q - 1)
    log_inv = -(H - 1) * log_eps
    log_rewritten = (H - 1) * ((b - 2) / (q - 1) - math.log(q - 1))
    log_mid = (H - 1) * (b - 2) / (2 * (q - 1))
    out = [
        report("ln eps^-(H-1) == (H-1)((b-2)/(q-1) - ln(q-1))",
               abs(log_inv - log_rewritten), REL_TOL * max(1.0, abs(log_rewritten)), **p),
        report("ln e^((H-1)(b-2)/(2(q-1))) <= ln eps^-(H-1)", log_mid, log_inv,
               conditional=True, **p),
    ]
    if n >= b**3:
        log_final = math.log(n) * (b - 2) / (6 * (q - 1) * math.log(b))
        out.append(report("ln n^((b-2)/(6(q-1)ln b)) <= ln e^((H-1)(b-2)/(2(q-1)))",
                          log_final, log_mid, **p))
        out.append(report("ln n^((b-2)/(6(q-1)ln b)) <= ln eps^-(H-1)", log_final, log_inv,
                          conditional=True, **p))
    return out


def all_bounds(b: int, q: int, H: int) -> list[BoundReport]:
    """Every closed-form check applicable at (b, q, H)."""
    n = tree_size(b, H)
    out = list(height_bounds(b, n))
    for h in range(H + 1):
        out.extend(recurrences(b, q, h)["checks"])
    out.append(regime(b, q))
    if q >= 3:
        out.append(branching_condition(b, q))
    if H >= 1:
        out.extend(lower_bound_chain(b, q, H))
    return out


def failures(reports: list[BoundReport], regime_ok: bool) -> list[BoundReport]:
    """Reports that count as violations given whether the regime holds."""
    return [r for r in reports if not r.holds and (regime_ok or not r.conditional)]

"""Value sets, levelness classification and the compactness certificate.

For a linear form ``h(x) = a.x`` the value set ``H`` is every value ``h``
attains on the binary cube.  A constraint ``lo <= h <= hi`` is ``k``-level
when exactly ``k`` values of ``H`` fall inside the window.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import BlpModel, LinearExpression, TwoSidedConstraint
from .polynomial import Number, to_number

log = logging.getLogger(__name__)

DEFAULT_CAP = 30

EQUALITY = "equality"
LOWER = "lower-one-sided"
UPPER = "upper-one-sided"
TWO_SIDED = "two-sided"
VACUOUS = "vacuous"


class InfeasibleConstraintError(ValueError):
    """No point of the binary cube satisfies the constraint (k = 0)."""


def value_set(expr: LinearExpression, cap: int = DEFAULT_CAP) -> list:
    """Sorted distinct values of ``expr`` over the binary cube.

    Subset-sum dynamic programming over the coefficients.  Integer data is
    handled for any support size; rational data is limited to ``cap``
    variables since the set can grow to ``2**|I|`` values.

    >>> value_set(LinearExpression({"x1": 1, "x2": 2, "x3": -1}))
    [-1, 0, 1, 2, 3]
    """
    coefs = list(expr.terms.values())
    integral = all(Fraction(c).denominator == 1 for c in coefs)
    if not integral and len(coefs) > cap:
        raise ValueError(
            f"support of {len(coefs)} variables with non-integer coefficients exceeds "
            f"the enumeration cap {cap}; raise the cap to proceed"
        )
    den = 1
    for c in coefs:
        den = den * Fraction(c).denominator // math.gcd(den, Fraction(c).denominator)
    reach = {0}
    for c in sorted(coefs, key=abs, reverse=True):
        step = int(c * den)
        reach |= {r + step for r in reach}
    return [to_number(Fraction(r, den)) for r in sorted(reach)]


@dataclass(frozen=True)
class LevelnessReport:
    """Classification of one constraint.

    Attributes:
        H: sorted achievable values of the linear form.
        k: number of H values inside the window (levelness).
        i: 1-based index into H of the refined lower bound.
        lo, hi: refined bounds, both members of H.
        sidedness: one of ``equality``, ``lower-one-sided``,
            ``upper-one-sided``, ``two-sided``, ``vacuous``.
        declared_equality: the source constraint had ``lo == hi``.
    """

    name: str
    expr: LinearExpression
    H: tuple
    k: int
    i: int
    lo: Number
    hi: Number
    sidedness: str
    regular: bool
    declared_equality: bool = False

    @property
    def K(self) -> int:
        return len(self.H)

    @property
    def window(self) -> tuple:
        return self.H[self.i - 1 : self.i - 1 + self.k]

    @property
    def I(self) -> tuple:
        return tuple(self.expr.terms)

    @property
    def I_plus(self) -> tuple:
        return tuple(v for v, a in self.expr.terms.items() if a > 0)

    @property
    def I_minus(self) -> tuple:
        return tuple(v for v, a in self.expr.terms.items() if a < 0)

    @property
    def kappa(self) -> int:
        """Degree of the product penalty before multilinear reduction."""
        if self.sidedness == VACUOUS:
            return 0
        if self.k == 1:
            return 2
        if self.sidedness == TWO_SIDED and self.k % 2 == 1:
            return self.k + 1
        return self.k

    def constraint(self) -> TwoSidedConstraint:
        return TwoSidedConstraint(self.expr, self.lo, self.hi, self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "H": [_j(h) for h in self.H],
            "K": self.K,
            "k": self.k,
            "i": self.i,
            "lo": _j(self.lo),
            "hi": _j(self.hi),
            "sidedness": self.sidedness,
            "regular": self.regular,
            "kappa": self.kappa,
            "support": list(self.I),
        }


def _j(v):
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def refine_and_classify(c: TwoSidedConstraint, cap: int = DEFAULT_CAP) -> LevelnessReport:
    """Snap the bounds onto H and classify the constraint.

    Raises:
        InfeasibleConstraintError: when no value of H lies in the window.
    """
    H = value_set(c.expr, cap)
    inside = [idx for idx, h in enumerate(H) if (c.lo is None or h >= c.lo) and (c.hi is None or h <= c.hi)]
    if not inside:
        raise InfeasibleConstraintError(f"constraint {c.name}: constraint infeasible over the cube")
    first, last = inside[0], inside[-1]
    k = last - first + 1
    lo, hi = H[first], H[last]
    if k == len(H):
        side = VACUOUS
    elif k == 1:
        side = EQUALITY
    elif first == 0:
        side = UPPER
    elif last == len(H) - 1:
        side = LOWER
    else:
        side = TWO_SIDED
    regular = all(a in (1, -1) for a in c.expr.terms.values())
    return LevelnessReport(c.name, c.expr, tuple(H), k, first + 1, lo, hi, side, regular, c.is_equality)


@dataclass(frozen=True)
class CompactCertificate:
    """Compactness certificate: ``KN = max min(kappa_i, |I_i|)`` over inequalities."""

    entries: tuple  # (name, kappa, support size)
    KN: Optional[int]
    compact_guaranteed: bool

    def to_dict(self) -> dict:
        return {
            "KN": self.KN,
            "compact_guaranteed": self.compact_guaranteed,
            "constraints": [{"name": n, "kappa": k, "support": s} for n, k, s in self.entries],
        }


def compact_certificate(m: BlpModel, cap: int = DEFAULT_CAP) -> CompactCertificate:
    """Evaluate the sufficient condition ``KN <= 2`` for a compact QUBO to exist.

    Equality constraints and vacuous inequalities do not contribute.
    """
    entries = []
    for c in m.constraints:
        if c.is_equality:
            continue
        r = refine_and_classify(c, cap)
        if r.sidedness == VACUOUS:
            continue
        entries.append((c.name, r.kappa, len(r.I)))
    if not entries:
        return CompactCertificate((), None, True)
    kn = max(min(kappa, size) for _, kappa, size in entries)
    return CompactCertificate(tuple(entries), kn, kn <= 2)

"""Valid infeasible penalties (VIPs) for linear constraints.

A VIP for a constraint is a polynomial that vanishes exactly on the feasible
binary points and is strictly positive elsewhere.  The constructions here are

* window products ``prod(h - h')`` over the feasible values (even levelness,
  and the one-sided forms for odd levelness),
* the product with one duplicated root (odd levelness, two-sided),
* squared residuals for equalities,
* a closed-form quadratic for 2-level constraints with +-1 coefficients,
  which covers the conflict / forcing families,
* a small catalog of well-known penalties.

Every product is divided by the rational GCD of its coefficients, so emitted
penalties have coprime integer coefficients and take values >= 1 wherever
they are positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import levelness as lv
from .levelness import LevelnessReport
from .model import TwoSidedConstraint
from .polynomial import Polynomial, multilinear_reduce, product_of_shifts, to_number


@dataclass(frozen=True)
class PenaltyTerm:
    """A penalty polynomial with its provenance.

    Attributes:
        poly: the (reduced) penalty.
        source: constraint name.
        rule: construction tag, e.g. ``Lemma1``, ``Lemma3(3)``, ``Thm2(0)``.
        factored_r: common factor divided out of the raw product.
        ancillaries: ancillary variables used by ``poly`` (empty for plain VIPs).
    """

    poly: Polynomial
    source: str
    rule: str
    factored_r: Fraction = Fraction(1)
    ancillaries: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "rule": self.rule,
            "factored_r": str(self.factored_r),
            "poly": str(self.poly),
            "ancillaries": list(self.ancillaries),
        }


def _h(r: LevelnessReport) -> Polynomial:
    return r.expr.to_polynomial()


def _reduced(raw: Polynomial, r: LevelnessReport, rule: str) -> PenaltyTerm:
    poly, fac = multilinear_reduce(raw, True)
    return PenaltyTerm(poly, r.name, rule, fac)


def _vacuous(r: LevelnessReport) -> PenaltyTerm:
    return PenaltyTerm(Polynomial.zero(), r.name, "vacuous")


def vip_product_even(r: LevelnessReport) -> PenaltyTerm:
    """Product of ``(h - h')`` over the ``k`` feasible values, ``k`` even.

    Every factor has the same sign outside the window, so an even count
    makes the product positive there.
    """
    if r.sidedness == lv.VACUOUS:
        return _vacuous(r)
    if r.k % 2:
        raise ValueError(f"{r.name}: k={r.k} is odd; use vip_product_odd or a one-sided form")
    return _reduced(product_of_shifts(_h(r), r.window), r, "Lemma1")


def vip_one_sided_upper(r: LevelnessReport) -> PenaltyTerm:
    """Window starts at the smallest value of H: plain product over the window."""
    if r.sidedness == lv.VACUOUS:
        return _vacuous(r)
    if r.lo != r.H[0]:
        raise ValueError(f"{r.name}: wrong sidedness ({r.sidedness}) for the upper one-sided form")
    return _reduced(product_of_shifts(_h(r), r.window), r, "Lemma2")


def vip_one_sided_lower(r: LevelnessReport) -> PenaltyTerm:
    """Window ends at the largest value of H: ``(-1)**k`` times the window product."""
    if r.sidedness == lv.VACUOUS:
        return _vacuous(r)
    if r.hi != r.H[-1]:
        raise ValueError(f"{r.name}: wrong sidedness ({r.sidedness}) for the lower one-sided form")
    raw = product_of_shifts(_h(r), r.window)
    if r.k % 2:
        raw = -raw
    return _reduced(raw, r, "Cor2")


def vip_product_odd(r: LevelnessReport, j: Optional[int] = None) -> PenaltyTerm:
    """Window product times one repeated factor ``(h - h_j)``.

    Args:
        r: report with odd ``k``.
        j: 1-based index into ``H`` of the repeated root, within the window.
            Defaults to the median of the window.
    """
    if r.sidedness == lv.VACUOUS:
        return _vacuous(r)
    if r.k % 2 == 0:
        raise ValueError(f"{r.name}: k={r.k} is even; use vip_product_even")
    if j is None:
        j = r.i + (r.k - 1) // 2
    if not (r.i <= j <= r.i + r.k - 1):
        raise ValueError(f"{r.name}: duplicate-root index j={j} outside [{r.i}, {r.i + r.k - 1}]")
    roots = list(r.window) + [r.H[j - 1]]
    return _reduced(product_of_shifts(_h(r), roots), r, f"Lemma3({j})")


def vip_equality(c) -> PenaltyTerm:
    """Squared residual ``(h - b)**2`` for an equality (or a 1-level report)."""
    if isinstance(c, LevelnessReport):
        if c.k != 1:
            raise ValueError(f"{c.name}: not a 1-level constraint")
        h, b, name = _h(c), c.lo, c.name
    else:
        if not c.is_equality:
            raise ValueError(f"{c.name}: lo != hi")
        h, b, name = c.expr.to_polynomial(), c.lo, c.name
    poly, fac = multilinear_reduce((h - b) * (h - b))
    return PenaltyTerm(poly, name, "Cor3/TR1", fac)


def _pairs(names: Sequence[str]) -> Polynomial:
    terms = {}
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            terms[(names[a], names[b])] = 1
    return Polynomial(terms)


def regular_2level_poly(j: int, I_plus: Sequence[str], I_minus: Sequence[str]) -> Polynomial:
    """Closed-form quadratic for ``j <= sum(I+) - sum(I-) <= j + 1``."""
    I_plus, I_minus = list(I_plus), list(I_minus)
    if set(I_plus) & set(I_minus):
        raise ValueError("I+ and I- must be disjoint")
    if not (-len(I_minus) <= j <= len(I_plus) - 1):
        raise ValueError(f"j={j} outside [{-len(I_minus)}, {len(I_plus) - 1}]")
    cross = Polynomial({(a, b): -1 for a in I_plus for b in I_minus})
    return (
        _pairs(I_plus)
        + _pairs(I_minus)
        + cross
        + Polynomial.linear({v: -j for v in I_plus})
        + Polynomial.linear({v: j + 1 for v in I_minus})
        + Fraction(j * (j + 1), 2)
    )


def vip_regular_2level(j: int, I_plus: Sequence[str], I_minus: Sequence[str], source: str = "c") -> PenaltyTerm:
    """2-level regular constraint penalty (equals the window product divided by 2)."""
    return PenaltyTerm(regular_2level_poly(j, I_plus, I_minus), source, f"Thm2({j})", Fraction(2))


def vip_conflict(I: Sequence[str], source: str = "c") -> PenaltyTerm:
    """``sum(I) <= 1``: sum of all pairwise products."""
    if len(I) < 2:
        raise ValueError("conflict constraint needs |I| >= 2")
    return PenaltyTerm(regular_2level_poly(0, I, ()), source, "Conflict", Fraction(2))


def vip_forcing(I: Sequence[str], source: str = "c") -> PenaltyTerm:
    """``sum(I) >= |I| - 1``: pairs - (|I|-1) sum + |I|(|I|-1)/2."""
    if len(I) < 2:
        raise ValueError("forcing constraint needs |I| >= 2")
    return PenaltyTerm(regular_2level_poly(len(I) - 1, I, ()), source, "Forcing", Fraction(2))


def table1_lookup(r: LevelnessReport) -> Optional[PenaltyTerm]:
    """Match a constraint against the four catalog rows.

    Rows (after scaling by a positive or negative constant):
        C1: ``x_i + x_j <= 1``        -> ``x_i x_j``
        C2: ``x_i + x_j >= 1``        -> ``1 - x_i - x_j + x_i x_j``
        C3: ``x_i <= x_j``            -> ``x_i - x_i x_j``
        C4: ``x_i + x_j + x_k <= 1``  -> pairwise products

    Returns None when nothing matches.
    """
    if r.sidedness in (lv.VACUOUS,):
        return None
    terms = r.expr.terms
    if len(terms) not in (2, 3):
        return None
    mags = {abs(a) for a in terms.values()}
    if len(mags) != 1:
        return None
    t = mags.pop()
    signs = {v: (1 if a > 0 else -1) for v, a in terms.items()}
    lo, hi = Fraction(r.lo) / t, Fraction(r.hi) / t
    if all(s < 0 for s in signs.values()):
        signs = {v: 1 for v in signs}
        lo, hi = -hi, -lo
    pos = [v for v, s in signs.items() if s > 0]
    neg = [v for v, s in signs.items() if s < 0]
    poly = row = None
    if len(terms) == 2 and not neg:
        a, b = pos
        if (lo, hi) == (0, 1):
            row, poly = "C1", Polynomial({(a, b): 1})
        elif (lo, hi) == (1, 2):
            row, poly = "C2", Polynomial({(a, b): 1, (a,): -1, (b,): -1}, 1)
    elif len(terms) == 2 and len(pos) == 1:
        a, b = pos[0], neg[0]
        if (lo, hi) == (-1, 0):  # a <= b
            row, poly = "C3", Polynomial({(a,): 1, (a, b): -1})
        elif (lo, hi) == (0, 1):  # b <= a
            row, poly = "C3", Polynomial({(b,): 1, (a, b): -1})
    elif len(terms) == 3 and not neg and (lo, hi) == (0, 1):
        row, poly = "C4", _pairs(pos)
    if poly is None:
        return None
    return PenaltyTerm(poly, r.name, f"Table1({row})")


def synthesize(r: LevelnessReport, lemma3_root: Optional[int] = None, use_table1: bool = True) -> PenaltyTerm:
    """Pick a VIP for one constraint.

    Order: catalog lookup, regular 2-level closed form, squared residual
    (k = 1), even product, one-sided products, odd product with a repeated
    root.
    """
    if r.sidedness == lv.VACUOUS:
        return _vacuous(r)
    if use_table1:
        hit = table1_lookup(r)
        if hit is not None:
            return hit
    if r.regular and r.k == 2:
        return vip_regular_2level(int(r.lo), r.I_plus, r.I_minus, r.name)
    if r.k == 1:
        return vip_equality(r)
    if r.k % 2 == 0:
        return vip_product_even(r)
    if r.sidedness == lv.UPPER:
        return vip_one_sided_upper(r)
    if r.sidedness == lv.LOWER:
        return vip_one_sided_lower(r)
    return vip_product_odd(r, lemma3_root)

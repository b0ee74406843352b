"""Ancillary-variable transformations.

* slack expansions: discrete one-hot (``tr0_1``), binary (``tr0_2``) and
  bounded binary (``tr0_2n``),
* degree reduction: Rosenberg substitution (``tr4_1_rosenberg``) and
  min-selection (``tr4_2_min_selection``),
* level reduction: ``tr6_1`` (one-hot slack with two ancillaries eliminated)
  and ``tr6_2`` (bounded binary slack with the unit bit eliminated).

Fresh variables come from an :class:`AncillaAllocator`, which records what
created each one.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .levelness import LevelnessReport
from .model import LinearExpression, TwoSidedConstraint
from .polynomial import Polynomial, natural_key, rational_gcd, to_number


@dataclass
class AncillaInfo:
    name: str
    tag: str
    step: str
    source: str


class AncillaAllocator:
    """Hands out fresh variable names that do not collide with ``taken``.

    Names are ``<tag><n>`` with a leading underscore (``_s0``, ``_y3``) unless
    an explicit name is requested.
    """

    def __init__(self, taken=()):
        self.taken = set(taken)
        self.records: dict = {}
        self.order: list = []
        self._next = Counter()

    def fresh(self, tag: str, step: str, source: str, name: Optional[str] = None) -> str:
        if name is None:
            while True:
                name = f"_{tag}{self._next[tag]}"
                self._next[tag] += 1
                if name not in self.taken:
                    break
        elif name in self.taken:
            raise ValueError(f"variable name {name} already in use")
        self.taken.add(name)
        self.records[name] = AncillaInfo(name, tag, step, source)
        self.order.append(name)
        return name


@dataclass
class ReductionStep:
    """Audit record of one transformation."""

    kind: str
    source: str
    created: list = field(default_factory=list)
    emitted: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "source": self.source,
            "created": list(self.created),
            "emitted": [str(e) for e in self.emitted],
            "params": {k: _jsonable(v) for k, v in self.params.items()},
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Polynomial):
        return str(v)
    return v


def _alloc(alloc: Optional[AncillaAllocator], r: LevelnessReport) -> AncillaAllocator:
    return alloc if alloc is not None else AncillaAllocator(r.I)


def _eq(terms: dict, rhs, name: str) -> TwoSidedConstraint:
    return TwoSidedConstraint(LinearExpression(terms), rhs, rhs, name)


# -- slack expansions -----------------------------------------------------


@dataclass
class SlackExpansion:
    """Equalities (and their ancillaries) that replace one inequality."""

    constraints: list
    ancillaries: list
    step: ReductionStep


def tr0_1(r: LevelnessReport, alloc: Optional[AncillaAllocator] = None) -> SlackExpansion:
    """Discrete expansion ``h = sum(h_t s_t)`` with ``sum(s_t) = 1``.

    For ``k = 2`` the one-hot pair is folded into a single ancillary:
    ``h + (h_{i+1} - h_i) s = h_{i+1}``.
    """
    if r.k < 2:
        raise ValueError(f"{r.name}: discrete expansion needs k >= 2")
    alloc = _alloc(alloc, r)
    window = r.window
    if r.k == 2:
        s = alloc.fresh("s", "TR0_1", r.name)
        terms = dict(r.expr.terms)
        terms[s] = window[1] - window[0]
        eq = _eq(terms, window[1], f"{r.name}.tr0_1")
        step = ReductionStep("TR0_1", r.name, [s], [eq.expr.to_polynomial()], {"window": list(window)})
        return SlackExpansion([eq], [s], step)
    ss = [alloc.fresh("s", "TR0_1", r.name) for _ in window]
    terms = dict(r.expr.terms)
    for s, hv in zip(ss, window):
        if hv != 0:
            terms[s] = -hv
    eq = _eq(terms, 0, f"{r.name}.tr0_1")
    onehot = _eq({s: 1 for s in ss}, 1, f"{r.name}.onehot")
    step = ReductionStep(
        "TR0_1", r.name, ss, [eq.expr.to_polynomial(), onehot.expr.to_polynomial()], {"window": list(window)}
    )
    return SlackExpansion([eq, onehot], ss, step)


@dataclass
class BinarySlack(SlackExpansion):
    n_prime: int = 0
    relaxed: bool = False
    harmful: bool = False
    width: int = 0


def _is_integral(r: LevelnessReport) -> bool:
    vals = list(r.expr.terms.values()) + [r.lo, r.hi]
    return all(Fraction(v).denominator == 1 for v in vals)


def tr0_2(r: LevelnessReport, alloc: Optional[AncillaAllocator] = None) -> BinarySlack:
    """Binary slack ``w = sum(2**t s_t)`` with ``n' = ceil(log2(W + 1))`` bits, ``W = hi - lo``.

    Upper one-sided and two-sided windows use ``h + w = hi``; a lower one-sided
    window uses ``h - w = lo``.  When ``2**n' - 1 > W`` the slack can exceed
    the window width (``relaxed``); that only matters when the other side of
    the window is a real bound (``harmful``), which the caller must repair.

    Raises:
        ValueError: for non-integer coefficients or bounds (use tr0_1).
    """
    if not _is_integral(r):
        raise ValueError(f"{r.name}: binary slack needs integer data; use tr0_1")
    alloc = _alloc(alloc, r)
    W = int(r.hi - r.lo)
    n_prime = (W).bit_length()  # == ceil(log2(W + 1))
    ss = [alloc.fresh("s", "TR0_2", r.name) for _ in range(n_prime)]
    terms = dict(r.expr.terms)
    lower_side = r.hi == r.H[-1] and r.lo != r.H[0]
    sign = -1 if lower_side else 1
    for t, s in enumerate(ss):
        terms[s] = sign * (1 << t)
    rhs = r.lo if lower_side else r.hi
    eq = _eq(terms, rhs, f"{r.name}.tr0_2")
    relaxed = (1 << n_prime) - 1 > W
    harmful = relaxed and r.lo != r.H[0] and r.hi != r.H[-1]
    step = ReductionStep(
        "TR0_2",
        r.name,
        ss,
        [eq.expr.to_polynomial() - rhs],
        {"n_prime": n_prime, "width": W, "relaxed": relaxed, "direction": "h-w=lo" if lower_side else "h+w=hi"},
    )
    return BinarySlack([eq], ss, step, n_prime, relaxed, harmful, W)


def lattice_h0(r: LevelnessReport) -> tuple[Polynomial, int, Fraction]:
    """``h0 = (h - lo) / g`` with ``g`` the rational GCD of the coefficients.

    Returns ``(h0, W, g)`` where ``W = (hi - lo) / g`` is an integer and
    every value of ``h0`` is an integer.
    """
    g = rational_gcd(r.expr.terms.values())
    h0 = (r.expr.to_polynomial() - r.lo) * (1 / g)
    W = Fraction(r.hi - r.lo) / g
    assert W.denominator == 1
    return h0, int(W), g


def tr0_2n(r: LevelnessReport, alloc: Optional[AncillaAllocator] = None) -> BinarySlack:
    """Bounded binary slack with range exactly ``0..W``.

    ``w = sum_{t < n'-1} 2**t s_t + a s_{n'-1}`` with
    ``a = W - (2**(n'-1) - 1)``; the equality is ``h0 + w = W``.
    """
    alloc = _alloc(alloc, r)
    h0, W, g = lattice_h0(r)
    n_prime = W.bit_length()
    ss = [alloc.fresh("s", "TR0_2n", r.name) for _ in range(n_prime)]
    coefs = slack_coefficients(W)
    terms = {k[0]: v for k, v in h0.terms.items() if k}
    for s, c in zip(ss, coefs):
        terms[s] = terms.get(s, 0) + c
    eq = _eq(terms, W - h0.constant, f"{r.name}.tr0_2n")
    a = coefs[-1] if coefs else 0
    step = ReductionStep("TR0_2n", r.name, ss, [eq.expr.to_polynomial()], {"n_prime": n_prime, "a": a, "width": W, "g": g})
    return BinarySlack([eq], ss, step, n_prime, False, False, W)


def slack_coefficients(W: int) -> list:
    """Coefficients ``1, 2, ..., 2**(n'-2), a`` whose subset sums are exactly ``0..W``."""
    if W <= 0:
        return []
    n_prime = W.bit_length()
    coefs = [1 << t for t in range(n_prime - 1)]
    coefs.append(W - ((1 << (n_prime - 1)) - 1))
    return coefs


def normalize_h0(r: LevelnessReport) -> tuple[Polynomial, list]:
    """Affine rescale so the window starts ``0, 1, ...``: ``h0 = (h - h_i) / (h_{i+1} - h_i)``."""
    if r.k < 2:
        raise ValueError(f"{r.name}: normalization needs k >= 2")
    w = r.window
    step = Fraction(w[1] - w[0])
    h0 = (r.expr.to_polynomial() - w[0]) * (1 / step)
    return h0, [to_number((v - w[0]) / step) for v in w]


# -- level reduction ------------------------------------------------------


@dataclass
class LevelReduction:
    penalty: Polynomial
    parts: list
    ancillaries: list
    step: ReductionStep


def tr6_1(r: LevelnessReport, alloc: Optional[AncillaAllocator] = None) -> LevelReduction:
    """One-hot slack with the first two ancillaries eliminated.

    With ``h0`` normalized (window ``0, 1, c_3, ..., c_k``) and ancillaries
    ``s_3..s_k``::

        phi1 = h0 - sum(c_t s_t)        (must be 0 or 1)
        phi2 = phi1 + sum(s_t)          (must be 0 or 1)

    The penalty is ``phi1 (phi1 - 1) + phi2 (phi2 - 1)`` (unit weights).
    """
    if r.k < 3:
        raise ValueError(f"{r.name}: level reduction needs k >= 3")
    alloc = _alloc(alloc, r)
    h0, H0 = normalize_h0(r)
    ss = [alloc.fresh("s", "TR6_1", r.name) for _ in H0[2:]]
    phi1 = h0 - Polynomial.linear({s: c for s, c in zip(ss, H0[2:])})
    phi2 = phi1 + Polynomial.linear({s: 1 for s in ss})
    p1 = phi1 * (phi1 - 1)
    p2 = phi2 * (phi2 - 1)
    step = ReductionStep("TR6_1", r.name, ss, [p1, p2], {"h0": h0, "H0": H0})
    return LevelReduction(p1 + p2, [p1, p2], ss, step)


def tr6_2(r: LevelnessReport, alloc: Optional[AncillaAllocator] = None) -> LevelReduction:
    """Bounded binary slack with the unit bit eliminated.

    ``h0 + s_0 + phi_rest = W`` where ``s_0`` is free, so the constraint is
    ``W - 1 <= phi3 <= W`` with ``phi3 = h0 + sum_{t>=1} c_t s_t``; the penalty
    is ``(phi3 - W)(phi3 - W + 1)``.
    """
    if r.k < 3:
        raise ValueError(f"{r.name}: level reduction needs k >= 3")
    alloc = _alloc(alloc, r)
    h0, W, g = lattice_h0(r)
    coefs = slack_coefficients(W)[1:]
    ss = [alloc.fresh("s", "TR6_2", r.name) for _ in coefs]
    phi3 = h0 + Polynomial.linear({s: c for s, c in zip(ss, coefs)})
    p3 = (phi3 - W) * (phi3 - W + 1)
    n_prime = W.bit_length()
    step = ReductionStep(
        "TR6_2", r.name, ss, [p3], {"h0": h0, "width": W, "g": g, "n_prime": n_prime, "a": coefs[-1] if coefs else None}
    )
    return LevelReduction(p3, [p3], ss, step)


# -- degree reduction -----------------------------------------------------


def rosenberg(x: str, y: str, z: str) -> Polynomial:
    """``R = xy - 2xz - 2yz + 3z``; zero iff ``z == x*y``, else >= 1."""
    return Polynomial({(x, y): 1, (x, z): -2, (y, z): -2, (z,): 3})


@dataclass
class RosenbergResult:
    """Output of :func:`tr4_1_rosenberg`.

    ``combined = phi + weight * sum(penalties)``; its minimum over the new
    variables equals the input polynomial at every original point.
    """

    phi: Polynomial
    substitutions: list  # (z, x, y) meaning z = x*y
    penalties: list
    weight: Fraction
    combined: Polynomial
    ancillaries: list
    steps: list


def _pick_pair(terms: dict) -> tuple:
    counts = Counter()
    for key in terms:
        if len(key) >= 3:
            for a in range(len(key)):
                for b in range(a + 1, len(key)):
                    counts[(key[a], key[b])] += 1
    best = max(counts.values())
    cands = [p for p, c in counts.items() if c == best]
    return min(cands, key=lambda p: (natural_key(p[0]), natural_key(p[1])))


def tr4_1_rosenberg(
    p: Polynomial,
    alloc: Optional[AncillaAllocator] = None,
    pairs: Optional[Sequence[tuple]] = None,
    weight=None,
    source: str = "p",
    names: Optional[Sequence[str]] = None,
) -> RosenbergResult:
    """Quadratize by repeatedly substituting ``z = x*y`` in monomials of degree >= 3.

    Args:
        p: multilinear polynomial.
        pairs: substitution pairs to use first, in order; remaining work
            is done greedily (most frequent pair, ties to the lowest pair).
        weight: Rosenberg weight; defaults to ``1 + sum |c|`` over terms of
            the substituted polynomial that contain a new variable, which
            makes every inconsistent ``z`` strictly worse than the consistent one.
        names: optional explicit names for the new variables, in order.
    """
    alloc = alloc if alloc is not None else AncillaAllocator(p.variables)
    terms = p.terms
    queue = list(pairs or [])
    names = list(names or [])
    subs, pens, created, steps = [], [], [], []
    while any(len(k) >= 3 for k in terms):
        if queue:
            a, b = queue.pop(0)
        else:
            a, b = _pick_pair(terms)
        z = alloc.fresh("y", "TR4_1", source, names.pop(0) if names else None)
        new: dict = {}
        hit = False
        for key, c in terms.items():
            if len(key) >= 3 and a in key and b in key:
                key = tuple(v for v in key if v not in (a, b)) + (z,)
                key = tuple(sorted(key, key=natural_key))
                hit = True
            new[key] = new.get(key, 0) + c
        if not hit:
            raise ValueError(f"pair ({a}, {b}) does not occur in any monomial of degree >= 3")
        terms = new
        subs.append((z, a, b))
        pens.append(rosenberg(a, b, z))
        created.append(z)
        steps.append(ReductionStep("TR4_1", source, [z], [pens[-1]], {"z": z, "x": a, "y": b}))
    phi = Polynomial(terms)
    zs = set(created)
    if weight is None:
        weight = 1 + sum(abs(c) for k, c in phi.terms.items() if zs.intersection(k))
    weight = to_number(weight)
    combined = phi + sum(pens, Polynomial.zero()) * weight
    for s in steps:
        s.params["weight"] = weight
    return RosenbergResult(phi, subs, pens, weight, combined, created, steps)


@dataclass
class MinSelectionResult:
    poly: Polynomial
    ancillaries: list
    steps: list


def tr4_2_min_selection(
    p: Polynomial, alloc: Optional[AncillaAllocator] = None, source: str = "p"
) -> MinSelectionResult:
    """Monomial-wise quadratization.

    Negative ``c * prod(x_I)`` (``c < 0``) becomes ``|c| s (|I| - 1 - S1)``;
    positive ``c * prod(x_I)`` becomes
    ``c * (sum_{i<=n_d} s_i (c_i (2i - S1) - 1) + S2)`` with
    ``n_d = floor((d - 1) / 2)``, ``c_i = 1`` for the last ``i`` when ``d`` is
    odd and ``2`` otherwise.  ``S1``, ``S2`` are the sum of the variables and
    of their pairwise products.
    """
    alloc = alloc if alloc is not None else AncillaAllocator(p.variables)
    out = Polynomial.zero()
    created, steps = [], []
    for key, c in p.items():
        d = len(key)
        if d < 3:
            out = out + Polynomial({key: c})
            continue
        S1 = Polynomial.linear({v: 1 for v in key})
        if c < 0:
            s = alloc.fresh("s", "TR4_2neg", source)
            part = Polynomial.var(s) * (d - 1 - S1) * (-c)
            steps.append(ReductionStep("TR4_2neg", source, [s], [part], {"monomial": "*".join(key), "coef": c}))
            created.append(s)
        else:
            n_d = (d - 1) // 2
            ss = [alloc.fresh("s", "TR4_2pos", source) for _ in range(n_d)]
            S2 = Polynomial({(key[a], key[b]): 1 for a in range(d) for b in range(a + 1, d)})
            part = S2
            for i, s in enumerate(ss, start=1):
                ci = 1 if (d % 2 == 1 and i == n_d) else 2
                part = part + Polynomial.var(s) * ((2 * i - S1) * ci - 1)
            part = part * c
            steps.append(ReductionStep("TR4_2pos", source, ss, [part], {"monomial": "*".join(key), "coef": c}))
            created.extend(ss)
        out = out + part
    return MinSelectionResult(out, created, steps)

"""Exact multilinear pseudo-Boolean polynomials.

A :class:`Polynomial` maps monomials (sets of binary variable names) to
rational coefficients.  Because every variable is binary, ``x**2 == x`` and
products are reduced on the fly, so a polynomial is always stored in its
unique multilinear form.  The constant term lives under the empty monomial.

All coefficients are exact (``int`` or :class:`fractions.Fraction`).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

Number = Union[int, Fraction]
Monomial = tuple  # tuple[str, ...] sorted by natural_key

_INT64_SAFE = 2**62


@lru_cache(maxsize=None)
def natural_key(name: str) -> tuple:
    """Sort key that orders ``x2`` before ``x10``."""
    parts = re.split(r"(\d+)", name)
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p != "")


def to_number(value) -> Number:
    """Coerce ints, Fractions, decimal floats and ``"p/q"`` strings to an exact number.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        value = Fraction(repr(value))
    elif isinstance(value, str):
        value = Fraction(value.strip())
    else:
        value = Fraction(value)
    return value.numerator if value.denominator == 1 else value


def rational_gcd(values: Iterable[Number]) -> Fraction:
    """Largest positive rational ``r`` such that every value divided by ``r`` is an integer.

    Returns 1 when all values are zero (or there are none).
    """
    num = 0
    den = 1
    for v in values:
        v = Fraction(v)
        if v == 0:
            continue
        num = math.gcd(num, abs(v.numerator))
        den = den * v.denominator // math.gcd(den, v.denominator)
    if num == 0:
        return Fraction(1)
    return Fraction(num, den)


def _monomial(names: Iterable[str]) -> Monomial:
    return tuple(sorted(set(names), key=natural_key))


def _merge(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(set(a).union(b), key=natural_key))


class NotQuadraticError(ValueError):
    """Raised when a polynomial of degree > 2 is converted to a QUBO."""

    def __init__(self, monomials):
        self.monomials = list(monomials)
        shown = ", ".join("*".join(m) for m in self.monomials[:5])
        more = "" if len(self.monomials) <= 5 else f" (+{len(self.monomials) - 5} more)"
        super().__init__(f"polynomial has monomials of degree > 2: {shown}{more}")


class Polynomial:
    """Immutable multilinear polynomial over binary variables.

    Args:
        terms: mapping from an iterable of variable names to a coefficient.
            Repeated names inside a monomial collapse (``x*x == x``).
        constant: added to the constant term.

    Example:
        >>> x, y = Polynomial.var("x"), Polynomial.var("y")
        >>> str((x + y) * (x + y))
        '+2*x*y +x +y'
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | None = None, constant: Number = 0):
        acc: dict = {}
        if terms:
            for key, coef in terms.items():
                if isinstance(key, str):
                    key = (key,)
                mono = _monomial(key)
                acc[mono] = acc.get(mono, 0) + to_number(coef)
        if constant:
            acc[()] = acc.get((), 0) + to_number(constant)
        self._terms = {k: _norm(v) for k, v in acc.items() if v != 0}
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        obj = cls.__new__(cls)
        obj._terms = {k: _norm(v) for k, v in terms.items() if v != 0}
        obj._hash = None
        return obj

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls._raw({(name,): 1})

    @classmethod
    def const(cls, value: Number) -> "Polynomial":
        return cls._raw({(): to_number(value)})

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls._raw({})

    @classmethod
    def linear(cls, coefs: Mapping[str, Number], constant: Number = 0) -> "Polynomial":
        """Build ``sum(coefs[v] * v) + constant``."""
        terms = {(v,): to_number(c) for v, c in coefs.items()}
        if constant:
            terms[()] = to_number(constant)
        return cls._raw(terms)

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> dict:
        """Copy of the monomial -> coefficient map (constant under ``()``)."""
        return dict(self._terms)

    @property
    def constant(self) -> Number:
        return self._terms.get((), 0)

    @property
    def degree(self) -> int:
        return max((len(k) for k in self._terms), default=0)

    @property
    def variables(self) -> tuple:
        names = set()
        for k in self._terms:
            names.update(k)
        return tuple(sorted(names, key=natural_key))

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, names: Iterable[str]) -> Number:
        if isinstance(names, str):
            names = (names,)
        return self._terms.get(_monomial(names), 0)

    def items(self) -> Iterator:
        """Terms in canonical order: by degree, then natural variable order."""
        return iter(sorted(self._terms.items(), key=_term_order))

    def __len__(self) -> int:
        return len(self._terms)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Polynomial.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return Polynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                return Polynomial.zero()
            return Polynomial._raw({k: v * other for k, v in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict = {}
        for k1, v1 in self._terms.items():
            for k2, v2 in other._terms.items():
                k = _merge(k1, k2)
                out[k] = out.get(k, 0) + v1 * v2
        return Polynomial._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Polynomial.const(1)
        for _ in range(exponent):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- evaluation and substitution --------------------------------------

    def evaluate(self, assignment: Mapping[str, int]) -> Number:
        """Exact value at a 0/1 assignment.  Missing variables raise KeyError."""
        total = 0
        for k, v in self._terms.items():
            if all(assignment[name] for name in k):
                total += v
        return _norm(total)

    __call__ = evaluate

    def restrict(self, assignment: Mapping[str, int]) -> "Polynomial":
        """Fix some variables to 0/1 and return the polynomial in the rest."""
        out: dict = {}
        for k, v in self._terms.items():
            keep = []
            dead = False
            for name in k:
                if name in assignment:
                    if not assignment[name]:
                        dead = True
                        break
                else:
                    keep.append(name)
            if dead:
                continue
            kk = tuple(keep)
            out[kk] = out.get(kk, 0) + v
        return Polynomial._raw(out)

    def substitute(self, mapping: Mapping[str, "Polynomial"]) -> "Polynomial":
        """Replace variables by polynomials (result is re-multilinearized)."""
        out = Polynomial.zero()
        for k, v in self._terms.items():
            term = Polynomial.const(v)
            rest = []
            for name in k:
                if name in mapping:
                    term = term * mapping[name]
                else:
                    rest.append(name)
            if rest:
                term = term * Polynomial._raw({tuple(rest): 1})
            out = out + term
        return out

    def rename(self, mapping: Mapping[str, str]) -> "Polynomial":
        return Polynomial({tuple(mapping.get(n, n) for n in k): v for k, v in self._terms.items()})

    def coefficient_gcd(self) -> Fraction:
        return rational_gcd(self._terms.values())

    # -- text -------------------------------------------------------------

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for k, v in sorted(self._terms.items(), key=_display_order):
            sign = "-" if v < 0 else "+"
            mag = abs(v)
            if not k:
                parts.append(f"{sign}{_fmt(mag)}")
            elif mag == 1:
                parts.append(f"{sign}{'*'.join(k)}")
            else:
                parts.append(f"{sign}{_fmt(mag)}*{'*'.join(k)}")
        return " ".join(parts)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"

    @classmethod
    def parse(cls, text: str) -> "Polynomial":
        """Parse the text form produced by ``str``.

        Terms are separated by ``+``/``-``; factors by ``*``; a factor is an
        identifier or a rational literal (``3``, ``3/2``, ``0.5``).

        >>> str(Polynomial.parse("2*x1*x2 - x1 + 1/2"))
        '+2*x1*x2 -x1 +1/2'
        """
        src = text.replace(" ", "").replace("\t", "")
        if src in ("", "0"):
            return cls.zero()
        if src[0] not in "+-":
            src = "+" + src
        pieces = re.findall(r"([+-])([^+-]+)", src)
        if "".join(s + b for s, b in pieces) != src:
            raise ValueError(f"cannot parse polynomial {text!r}")
        out: dict = {}
        for sign, body in pieces:
            coef: Number = 1
            names = []
            for factor in body.split("*"):
                if not factor:
                    raise ValueError(f"empty factor in {text!r}")
                if re.fullmatch(r"\d+(/\d+)?|\d*\.\d+", factor):
                    coef = coef * Fraction(factor)
                elif re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.\[\]']*", factor):
                    names.append(factor)
                else:
                    raise ValueError(f"bad factor {factor!r} in {text!r}")
            if sign == "-":
                coef = -coef
            mono = _monomial(names)
            out[mono] = out.get(mono, 0) + coef
        return cls._raw(out)


def _norm(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


def _fmt(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _term_order(item):
    k = item[0]
    return (len(k), [natural_key(n) for n in k])


def _display_order(item):
    k = item[0]
    return (-len(k), [natural_key(n) for n in k])


def multilinear_reduce(p: Polynomial, factor_out: bool = True) -> tuple[Polynomial, Fraction]:
    """Divide out the positive rational content of ``p``.

    ``p`` is already multilinear, so the remaining work is extracting
    ``r = gcd(coefficients)``.  The result has coprime integer coefficients
    and satisfies ``p == r * result``.  A zero polynomial returns ``r = 1``.

    Args:
        p: polynomial to reduce.
        factor_out: when False, only the (trivially) multilinear form is
            returned with ``r = 1``.
    """
    if not factor_out or p.is_zero():
        return p, Fraction(1)
    r = p.coefficient_gcd()
    return p * (1 / r), r


# -- exhaustive evaluation ------------------------------------------------


def integer_terms(p: Polynomial) -> tuple[dict, int]:
    """Scale ``p`` to integer coefficients.  Returns ``(terms, D)`` with ``p == terms / D``."""
    den = 1
    for v in p._terms.values():
        if isinstance(v, Fraction):
            den = den * v.denominator // math.gcd(den, v.denominator)
    return {k: int(v * den) for k, v in p._terms.items()}, den


def _value_dtype(int_terms: Mapping) -> type:
    bound = sum(abs(v) for v in int_terms.values())
    return np.int64 if bound < _INT64_SAFE else object


def values_from_int_terms(int_terms: Mapping, variables: Sequence[str], dtype=None) -> np.ndarray:
    """Values of an integer-coefficient polynomial at all ``2**len(variables)`` points.

    Point ``i`` assigns ``variables[j] = (i >> j) & 1``.  Uses a subset-sum
    (zeta) transform, so the cost is ``O(n 2**n)``.
    """
    n = len(variables)
    index = {name: j for j, name in enumerate(variables)}
    if dtype is None:
        dtype = _value_dtype(int_terms)
    arr = np.zeros(1 << n, dtype=dtype)
    for k, v in int_terms.items():
        mask = 0
        for name in k:
            mask |= 1 << index[name]
        arr[mask] += v
    for j in range(n):
        view = arr.reshape(-1, 2, 1 << j)
        view[:, 1, :] += view[:, 0, :]
    return arr


def all_values(p: Polynomial, variables: Sequence[str] | None = None) -> tuple[np.ndarray, int]:
    """Exact values of ``p`` at every point as ``(numerators, denominator)``."""
    if variables is None:
        variables = p.variables
    missing = set(p.variables) - set(variables)
    if missing:
        raise ValueError(f"variables missing from enumeration order: {sorted(missing)}")
    terms, den = integer_terms(p)
    return values_from_int_terms(terms, variables), den


def from_values(values: Sequence, variables: Sequence[str]) -> Polynomial:
    """Interpolate the unique multilinear polynomial with the given point values.

    ``values[i]`` is the value at point ``i`` (bit ``j`` of ``i`` is
    ``variables[j]``).  Inverse of :func:`all_values` (Moebius transform).
    """
    n = len(variables)
    vals = [Fraction(v) for v in values]
    if len(vals) != 1 << n:
        raise ValueError("need exactly 2**n values")
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    arr = np.array([int(v * den) for v in vals], dtype=object)
    for j in range(n):
        view = arr.reshape(-1, 2, 1 << j)
        view[:, 1, :] -= view[:, 0, :]
    terms = {}
    for mask in np.flatnonzero(arr != 0):
        mask = int(mask)
        key = tuple(variables[j] for j in range(n) if mask >> j & 1)
        terms[key] = Fraction(int(arr[mask]), den)
    return Polynomial(terms)


def product_of_shifts(h: Polynomial, roots: Sequence[Number], max_interp: int = 16) -> Polynomial:
    """Multilinear form of ``prod(h - r for r in roots)`` for a degree-1 ``h``.

    Small supports are interpolated from point values, which avoids the
    expression swell of repeated symbolic multiplication; larger supports
    fall back to symbolic expansion.  Both give the same unique result.
    """
    if h.degree > 1:
        raise ValueError("h must be affine")
    names = h.variables
    if len(names) > max_interp:
        out = Polynomial.const(1)
        for r in roots:
            out = out * (h - to_number(r))
        return out
    hv, den = all_values(h, names)
    hv = hv.astype(object)
    prod = np.full(hv.shape, 1, dtype=object)
    scale = 1
    for r in roots:
        rf = Fraction(r)
        # (h - r) * den * rden, kept integral
        num = hv * rf.denominator - rf.numerator * den
        prod = prod * num
        scale *= den * rf.denominator
    return from_values([Fraction(int(v), scale) for v in prod], names)

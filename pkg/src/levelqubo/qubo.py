"""QUBO container: upper-triangular coefficient map plus constant.

Energies are ``sum_{i<=j} Q[i,j] x_i x_j + c`` with linear terms on the
diagonal.  Index order is the ``variables`` tuple.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .polynomial import NotQuadraticError, Number, Polynomial, natural_key, to_number


@dataclass(frozen=True)
class QuboModel:
    """A QUBO over named binary variables.

    Attributes:
        variables: index -> variable name.
        coefficients: ``{(i, j): coef}`` with ``i <= j``; no zero entries.
        constant: energy offset.
        kinds: index -> ``"original"`` or ``"ancillary"``.
        decode: free-form metadata describing how to read a solution back
            (e.g. problem type, variable meaning).
    """

    variables: tuple
    coefficients: Mapping
    constant: Number = 0
    kinds: tuple = ()
    decode: Mapping = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.variables)
        for (i, j), v in self.coefficients.items():
            if not (0 <= i <= j < n):
                raise ValueError(f"bad QUBO key ({i},{j}) for n={n}")
            if v == 0:
                raise ValueError("zero coefficients must not be stored")
        if self.kinds and len(self.kinds) != n:
            raise ValueError("kinds must match variables")

    @property
    def n(self) -> int:
        return len(self.variables)

    dimension = n

    @property
    def ancillary_count(self) -> int:
        return sum(1 for k in self.kinds if k == "ancillary")

    def energy(self, bits: Sequence[int]) -> Number:
        """Exact energy at a 0/1 vector in index order."""
        if len(bits) != self.n:
            raise ValueError(f"expected {self.n} bits, got {len(bits)}")
        total = self.constant
        for (i, j), v in self.coefficients.items():
            if bits[i] and bits[j]:
                total += v
        return to_number(total)

    def to_polynomial(self) -> Polynomial:
        terms = {}
        for (i, j), v in self.coefficients.items():
            key = (self.variables[i],) if i == j else (self.variables[i], self.variables[j])
            terms[key] = v
        return Polynomial(terms, self.constant)

    def assignment(self, bits: Sequence[int]) -> dict:
        return {name: int(b) for name, b in zip(self.variables, bits)}

    def float_arrays(self):
        """Diagonal vector and symmetric CSR neighbour lists (float64) for local search."""
        n = self.n
        diag = np.zeros(n)
        nbrs: list[list] = [[] for _ in range(n)]
        for (i, j), v in self.coefficients.items():
            fv = float(v)
            if i == j:
                diag[i] += fv
            else:
                nbrs[i].append((j, fv))
                nbrs[j].append((i, fv))
        indptr = np.zeros(n + 1, dtype=np.int64)
        for i in range(n):
            indptr[i + 1] = indptr[i] + len(nbrs[i])
        indices = np.empty(indptr[-1], dtype=np.int64)
        weights = np.empty(indptr[-1])
        for i in range(n):
            for t, (j, fv) in enumerate(nbrs[i]):
                indices[indptr[i] + t] = j
                weights[indptr[i] + t] = fv
        return diag, indptr, indices, weights

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "variables": list(self.variables),
            "kinds": list(self.kinds) if self.kinds else ["original"] * self.n,
            "terms": [
                {"i": i, "j": j, "coef": _jnum(v)} for (i, j), v in sorted(self.coefficients.items())
            ],
            "constant": _jnum(self.constant),
            "decode": dict(self.decode),
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, data: dict) -> "QuboModel":
        n = int(data["n"])
        variables = tuple(data.get("variables") or [f"x{i}" for i in range(n)])
        if len(variables) != n:
            raise ValueError("variables length does not match n")
        coefs: dict = {}
        for t in data.get("terms", []):
            i, j = int(t["i"]), int(t["j"])
            if i > j:
                i, j = j, i
            coefs[(i, j)] = coefs.get((i, j), 0) + to_number(t["coef"])
        coefs = {k: v for k, v in coefs.items() if v != 0}
        kinds = tuple(data.get("kinds") or ())
        return cls(variables, coefs, to_number(data.get("constant", 0)), kinds, data.get("decode", {}))

    @classmethod
    def from_json(cls, text: str) -> "QuboModel":
        return cls.from_json_dict(json.loads(text))

    def to_coo_text(self) -> str:
        """Coordinate text: ``c`` comments, ``p qubo n nterms constant``, then ``i j coef``."""
        lines = [f"c variables {' '.join(self.variables)}"]
        lines.append(f"p qubo {self.n} {len(self.coefficients)} {_tnum(self.constant)}")
        for (i, j), v in sorted(self.coefficients.items()):
            lines.append(f"{i} {j} {_tnum(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_coo_text(cls, text: str) -> "QuboModel":
        header = None
        names = None
        coefs: dict = {}
        count = 0
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("c"):
                parts = line.split()
                if len(parts) > 1 and parts[1] == "variables":
                    names = tuple(parts[2:])
                continue
            parts = line.split()
            if parts[0] == "p":
                if len(parts) != 5 or parts[1] != "qubo":
                    raise ValueError(f"line {lineno}: malformed header {line!r}")
                header = (int(parts[2]), int(parts[3]), to_number(parts[4]))
                continue
            if header is None:
                raise ValueError(f"line {lineno}: entry before header")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'i j coef'")
            i, j = int(parts[0]), int(parts[1])
            if i > j:
                i, j = j, i
            coefs[(i, j)] = coefs.get((i, j), 0) + to_number(parts[2])
            count += 1
        if header is None:
            raise ValueError("missing 'p qubo' header")
        n, nterms, const = header
        if count != nterms:
            raise ValueError(f"header declares {nterms} terms, found {count}")
        if names is None or len(names) != n:
            names = tuple(f"x{i}" for i in range(n))
        return cls(names, {k: v for k, v in coefs.items() if v != 0}, const)


def _jnum(v):
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _tnum(v) -> str:
    return str(_jnum(v))


def to_qubo(
    p: Polynomial,
    variables: Sequence[str] | None = None,
    kinds: Sequence[str] | None = None,
    decode: Mapping | None = None,
) -> QuboModel:
    """Lower a polynomial of degree <= 2 to a :class:`QuboModel`.

    Args:
        p: multilinear polynomial.
        variables: index order; defaults to ``p.variables`` (natural order).
            May contain variables absent from ``p``.
        kinds: optional per-index kind tags.
        decode: metadata copied onto the model.

    Raises:
        NotQuadraticError: listing every monomial of degree > 2.
    """
    high = [k for k, _ in p.items() if len(k) > 2]
    if high:
        raise NotQuadraticError(high)
    if variables is None:
        variables = p.variables
    variables = tuple(variables)
    index = {name: i for i, name in enumerate(variables)}
    if len(index) != len(variables):
        raise ValueError("duplicate variable names")
    missing = [v for v in p.variables if v not in index]
    if missing:
        raise ValueError(f"variables not in order: {missing}")
    coefs = {}
    for key, v in p.terms.items():
        if not key:
            continue
        ids = sorted(index[name] for name in key)
        coefs[(ids[0], ids[-1])] = v
    return QuboModel(variables, coefs, p.constant, tuple(kinds or ()), dict(decode or {}))


def sort_names(names) -> list:
    return sorted(names, key=natural_key)

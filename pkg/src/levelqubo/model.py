"""Model containers: linear expressions, two-sided constraints, binary linear
programs, and the problem inputs (graphs, 2-CNF formulas, weight matrices).

Also hosts the JSON model format and DIMACS graph / CNF readers.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .polynomial import Number, Polynomial, to_number

log = logging.getLogger(__name__)


class ModelError(ValueError):
    """Invalid model input (unknown variable, bad bounds, duplicate names...)."""


@dataclass(frozen=True)
class LinearExpression:
    """``sum(coef * var)``.  Zero coefficients are dropped."""

    terms: Mapping[str, Number] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for v, c in self.terms.items():
            c = to_number(c)
            if c != 0:
                clean[v] = clean.get(v, 0) + c
        object.__setattr__(self, "terms", {v: c for v, c in clean.items() if c != 0})

    @property
    def support(self) -> tuple:
        return tuple(self.terms)

    def to_polynomial(self) -> Polynomial:
        return Polynomial.linear(self.terms)

    def value(self, assignment: Mapping[str, int]) -> Number:
        return to_number(sum((c for v, c in self.terms.items() if assignment[v]), 0))

    def __eq__(self, other):
        return isinstance(other, LinearExpression) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))


@dataclass(frozen=True)
class TwoSidedConstraint:
    """``lo <= expr <= hi``.  ``None`` stands for an infinite bound.

    Equality is ``lo == hi``.
    """

    expr: LinearExpression
    lo: Number | None = None
    hi: Number | None = None
    name: str = "c"

    def __post_init__(self):
        if not isinstance(self.expr, LinearExpression):
            object.__setattr__(self, "expr", LinearExpression(dict(self.expr)))
        lo = None if self.lo is None else to_number(self.lo)
        hi = None if self.hi is None else to_number(self.hi)
        if lo is None and hi is None:
            raise ModelError(f"constraint {self.name}: at least one bound must be finite")
        if lo is not None and hi is not None and lo > hi:
            raise ModelError(f"constraint {self.name}: lo {lo} > hi {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def is_equality(self) -> bool:
        return self.lo is not None and self.lo == self.hi

    def holds(self, assignment: Mapping[str, int]) -> bool:
        h = self.expr.value(assignment)
        return (self.lo is None or h >= self.lo) and (self.hi is None or h <= self.hi)

    def residual(self, assignment: Mapping[str, int]) -> Number:
        """Signed distance to the window (0 when feasible)."""
        h = self.expr.value(assignment)
        if self.lo is not None and h < self.lo:
            return to_number(h - self.lo)
        if self.hi is not None and h > self.hi:
            return to_number(h - self.hi)
        return 0

    @classmethod
    def from_terms(cls, terms: Mapping[str, Number], lo=None, hi=None, name="c", constant=0):
        """Build ``lo <= sum(terms) + constant <= hi`` by moving the constant into the bounds."""
        constant = to_number(constant)
        lo = None if lo is None else to_number(lo) - constant
        hi = None if hi is None else to_number(hi) - constant
        return cls(LinearExpression(dict(terms)), lo, hi, name)


@dataclass(frozen=True)
class BlpModel:
    """Binary linear program ``min/max c.x + c0`` subject to two-sided constraints."""

    variables: tuple
    objective: LinearExpression = field(default_factory=LinearExpression)
    objective_constant: Number = 0
    sense: str = "min"
    constraints: tuple = ()
    name: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "objective_constant", to_number(self.objective_constant))
        if self.sense not in ("min", "max"):
            raise ModelError(f"sense must be 'min' or 'max', got {self.sense!r}")
        seen = set()
        for v in self.variables:
            if v in seen:
                raise ModelError(f"duplicate variable name {v}")
            seen.add(v)
        for v in self.objective.terms:
            if v not in seen:
                raise ModelError(f"objective: unknown variable {v}")
        names = set()
        for c in self.constraints:
            if c.name in names:
                raise ModelError(f"duplicate constraint name {c.name}")
            names.add(c.name)
            for v in c.expr.terms:
                if v not in seen:
                    raise ModelError(f"constraint {c.name}: unknown variable {v}")

    @property
    def n(self) -> int:
        return len(self.variables)

    def min_objective(self) -> Polynomial:
        """Objective in minimization form (negated for max models)."""
        p = Polynomial.linear(self.objective.terms, self.objective_constant)
        return p if self.sense == "min" else -p

    def objective_value(self, assignment: Mapping[str, int]) -> Number:
        return to_number(self.objective.value(assignment) + self.objective_constant)

    def from_min_value(self, value: Number) -> Number:
        """Convert a minimization-form value back to the model's own sense."""
        return value if self.sense == "min" else -value

    def is_feasible(self, assignment: Mapping[str, int]) -> bool:
        return all(c.holds(assignment) for c in self.constraints)


# -- JSON model format ----------------------------------------------------


def _terms_from_json(items, where) -> dict:
    out: dict = {}
    for t in items:
        try:
            v, c = t["var"], to_number(t["coef"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"{where}: bad term {t!r}") from exc
        out[v] = out.get(v, 0) + c
    return out


def parse_model_json(text: str) -> BlpModel:
    """Parse the JSON model format.

    Example::

        {"variables": ["x1", "x2"],
         "objective": {"sense": "min", "terms": [{"var": "x1", "coef": 1}], "constant": 0},
         "constraints": [{"name": "c1", "terms": [...], "lo": 0, "hi": null}]}
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from exc
    return model_from_dict(data)


def model_from_dict(data: Mapping) -> BlpModel:
    variables = list(data.get("variables", []))
    declared = set(variables)
    obj = data.get("objective") or {}
    terms = _terms_from_json(obj.get("terms", []), "objective")
    for v in terms:
        if v not in declared:
            raise ModelError(f"objective: unknown variable {v}")
    constraints = []
    for idx, cd in enumerate(data.get("constraints", [])):
        name = cd.get("name", f"c{idx + 1}")
        where = f"constraint {name} (#{idx})"
        cterms = _terms_from_json(cd.get("terms", []), where)
        for v in cterms:
            if v not in declared:
                raise ModelError(f"{where}: unknown variable {v}")
        lo = cd.get("lo")
        hi = cd.get("hi")
        try:
            constraints.append(
                TwoSidedConstraint(
                    LinearExpression(cterms),
                    None if lo is None else to_number(lo),
                    None if hi is None else to_number(hi),
                    name,
                )
            )
        except ModelError as exc:
            raise ModelError(f"{where}: {exc}") from exc
    return BlpModel(
        tuple(variables),
        LinearExpression(terms),
        to_number(obj.get("constant", 0)),
        obj.get("sense", "min"),
        tuple(constraints),
        data.get("name", "model"),
    )


def _jnum(v):
    if v is None:
        return None
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def model_to_dict(m: BlpModel) -> dict:
    return {
        "name": m.name,
        "variables": list(m.variables),
        "objective": {
            "sense": m.sense,
            "terms": [{"var": v, "coef": _jnum(c)} for v, c in m.objective.terms.items()],
            "constant": _jnum(m.objective_constant),
        },
        "constraints": [
            {
                "name": c.name,
                "terms": [{"var": v, "coef": _jnum(a)} for v, a in c.expr.terms.items()],
                "lo": _jnum(c.lo),
                "hi": _jnum(c.hi),
            }
            for c in m.constraints
        ],
    }


def serialize_model_json(m: BlpModel, indent=2) -> str:
    return json.dumps(model_to_dict(m), indent=indent)


# -- problem inputs -------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``; edges stored as ``(u, v)`` with ``u < v``."""

    n: int
    edges: tuple
    duplicates: int = 0

    def __post_init__(self):
        clean = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ModelError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ModelError(f"edge ({u},{v}) out of range for n={self.n}")
            clean.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> set:
        return set(self.edges)

    def to_dimacs(self) -> str:
        lines = [f"p edge {self.n} {self.m}"]
        lines += [f"e {u + 1} {v + 1}" for u, v in self.edges]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CnfFormula:
    """2-CNF: clauses are pairs of signed, 1-based literals (``-3`` means not x3)."""

    n: int
    clauses: tuple

    def __post_init__(self):
        out = []
        for cl in self.clauses:
            cl = tuple(int(l) for l in cl)
            if len(cl) != 2:
                raise ModelError(f"clause {cl} has arity {len(cl)}; Max2SAT needs exactly 2 literals")
            for lit in cl:
                if lit == 0 or abs(lit) > self.n:
                    raise ModelError(f"literal {lit} out of range for {self.n} variables")
            out.append(cl)
        object.__setattr__(self, "clauses", tuple(out))

    @property
    def m(self) -> int:
        return len(self.clauses)

    def satisfied(self, bits: Sequence[int]) -> int:
        """Number of satisfied clauses; ``bits[i]`` is the value of variable ``i+1``."""
        count = 0
        for a, b in self.clauses:
            if _lit(bits, a) or _lit(bits, b):
                count += 1
        return count

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n} {self.m}"]
        lines += [f"{a} {b} 0" for a, b in self.clauses]
        return "\n".join(lines) + "\n"


def _lit(bits, lit) -> bool:
    val = bits[abs(lit) - 1]
    return bool(val) if lit > 0 else not val


@dataclass(frozen=True)
class WeightMatrix:
    """Square matrix of rational weights (``rows[i][j]``)."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(to_number(v) for v in r) for r in self.rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ModelError("weight matrix must be square")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]


def _data_lines(text: str) -> Iterable[tuple[int, list]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        yield lineno, line.split()


def parse_dimacs_graph(text: str) -> Graph:
    """Read ``p edge n m`` / ``e u v`` (1-based) into a 0-based :class:`Graph`."""
    header = None
    edges = []
    for lineno, parts in _data_lines(text):
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise ModelError(f"line {lineno}: malformed header, expected 'p edge n m'")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise ModelError(f"line {lineno}: malformed header counts") from exc
        elif parts[0] == "e":
            if header is None:
                raise ModelError(f"line {lineno}: edge before header")
            if len(parts) != 3:
                raise ModelError(f"line {lineno}: expected 'e u v'")
            u, v = int(parts[1]) - 1, int(parts[2]) - 1
            if u == v:
                raise ModelError(f"line {lineno}: self-loop at vertex {u + 1}")
            edges.append((u, v))
        else:
            raise ModelError(f"line {lineno}: unexpected record {parts[0]!r}")
    if header is None:
        raise ModelError("missing 'p edge' header")
    n, m = header
    if len(edges) != m:
        raise ModelError(f"header declares {m} edges, found {len(edges)}")
    unique = {(min(u, v), max(u, v)) for u, v in edges}
    dup = len(edges) - len(unique)
    if dup:
        log.warning("collapsed %d duplicate edges", dup)
    return Graph(n, tuple(unique), dup)


def parse_dimacs_cnf(text: str) -> CnfFormula:
    """Read a DIMACS CNF file whose clauses all have exactly two literals."""
    header = None
    clauses = []
    current: list = []
    for lineno, parts in _data_lines(text):
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "cnf":
                raise ModelError(f"line {lineno}: malformed header, expected 'p cnf n m'")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ModelError(f"line {lineno}: clause before header")
        for tok in parts:
            lit = int(tok)
            if lit == 0:
                if len(current) != 2:
                    raise ModelError(f"line {lineno}: clause arity {len(current)}, Max2SAT needs 2")
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        raise ModelError("unterminated clause at end of input")
    if header is None:
        raise ModelError("missing 'p cnf' header")
    n, m = header
    if len(clauses) != m:
        raise ModelError(f"header declares {m} clauses, found {len(clauses)}")
    return CnfFormula(n, tuple(clauses))

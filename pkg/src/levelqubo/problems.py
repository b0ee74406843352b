"""Encoders for Max2SAT, linear ordering, community detection and maximum
independent set, plus seeded instance generators and brute-force domain
oracles used to validate the encodings.

Each encoder returns a :class:`ProblemEncoding` holding the BLP, one or two
compiled QUBO forms (named as in the literature: ``QUBO1`` is the
ancillary-based form, ``QUBO2`` the alternative), and a decoder that
recomputes the domain objective from scratch.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np

from .levelness import compact_certificate, refine_and_classify
from .model import BlpModel, CnfFormula, Graph, LinearExpression, ModelError, TwoSidedConstraint, WeightMatrix
from .penalties import synthesize
from .pipeline import (
    CompiledQubo,
    ConstraintPenalty,
    PipelineConfig,
    Synthesis,
    TransformTrace,
    Variant,
    assemble,
    auto_weight,
    cts,
    mlcts,
)
from .polynomial import Polynomial, multilinear_reduce, to_number
from .qubo import to_qubo
from .reduction import AncillaAllocator, tr4_1_rosenberg

MIS_DEFAULT_WEIGHT = 2


@dataclass
class Decoded:
    """Domain reading of a solution.

    ``objective`` is None when the solution is not domain-feasible.
    """

    solution: object
    objective: Optional[object]
    feasible: bool


@dataclass
class ProblemEncoding:
    problem: str
    blp: BlpModel
    forms: dict
    decoder: Callable[[Mapping[str, int]], Decoded]
    energy_to_objective: Callable = None
    info: dict = field(default_factory=dict)

    @property
    def qubo_compact(self) -> Optional[CompiledQubo]:
        for f in self.forms.values():
            if f.is_compact:
                return f
        return None

    @property
    def qubo_augmented(self) -> Optional[CompiledQubo]:
        for f in self.forms.values():
            if not f.is_compact:
                return f
        return None

    def decode(self, form: str, bits) -> Decoded:
        return self.decoder(self.forms[form].qubo.assignment(bits))


def _names_check(form, allowed):
    if form is not None and form not in allowed:
        raise ValueError(f"unknown form {form!r}; choose from {sorted(allowed)}")


# -- Max2SAT ----------------------------------------------------------------


def _literal(lit: int) -> tuple[dict, int]:
    """Linear form of a literal: ``x`` or ``1 - x``."""
    name = f"x{abs(lit)}"
    return ({name: 1}, 0) if lit > 0 else ({name: -1}, 1)


def _clause_penalty(a: int, b: int) -> tuple[Polynomial, str]:
    """Indicator of an unsatisfied clause, ``(1 - l1)(1 - l2)``."""
    (ta, ca), (tb, cb) = _literal(a), _literal(b)
    la = Polynomial.linear(ta, ca)
    lb = Polynomial.linear(tb, cb)
    kind = {(True, True): "P++", (True, False): "P+-", (False, True): "P+-", (False, False): "P--"}[(a > 0, b > 0)]
    return (1 - la) * (1 - lb), kind


def max2sat_blp(f: CnfFormula) -> BlpModel:
    """Refined BLP: ``min m - sum C_i`` s.t. ``l_i1 <= C_i``, ``l_i2 <= C_i``, ``C_i <= l_i1 + l_i2 <= C_i + 1``."""
    xs = [f"x{i}" for i in range(1, f.n + 1)]
    cs = [f"C{i}" for i in range(1, f.m + 1)]
    cons = []
    for i, (a, b) in enumerate(f.clauses, 1):
        c = f"C{i}"
        for tag, lit in (("l1", a), ("l2", b)):
            t, k = _literal(lit)
            terms = dict(t)
            terms[c] = terms.get(c, 0) - 1
            cons.append(TwoSidedConstraint.from_terms(terms, None, 0, f"{c}.{tag}", constant=k))
        (ta, ka), (tb, kb) = _literal(a), _literal(b)
        terms: dict = {}
        for t in (ta, tb):
            for v, w in t.items():
                terms[v] = terms.get(v, 0) + w
        terms[c] = terms.get(c, 0) - 1
        cons.append(TwoSidedConstraint.from_terms(terms, 0, 1, f"{c}.or", constant=ka + kb))
    obj = LinearExpression({c: -1 for c in cs})
    return BlpModel(tuple(xs + cs), obj, f.m, "min", tuple(cons), "max2sat")


def encode_max2sat(f: CnfFormula, form: Optional[str] = None, strict: bool = False) -> ProblemEncoding:
    """Max2SAT as BLP2, QUBO1 (via the multilevel scheme, ``n + m`` variables)
    and QUBO2 (sum of unsatisfied-clause indicators, ``n`` variables, no weights).

    Args:
        f: 2-CNF formula.
        form: ``"QUBO1"``, ``"QUBO2"`` or None for both.
        strict: reject clauses that repeat a variable.
    """
    _names_check(form, {"QUBO1", "QUBO2"})
    if strict:
        for a, b in f.clauses:
            if abs(a) == abs(b):
                raise ModelError(f"clause ({a} {b}) repeats variable x{abs(a)}")
    blp = max2sat_blp(f)
    xs = [f"x{i}" for i in range(1, f.n + 1)]
    forms = {}
    if form in (None, "QUBO1"):
        q1 = mlcts(blp, PipelineConfig())
        q1.qubo.decode.update({"problem": "max2sat", "form": "QUBO1"})
        forms["QUBO1"] = q1
    if form in (None, "QUBO2"):
        F = Polynomial.zero()
        entries = []
        for i, (a, b) in enumerate(f.clauses, 1):
            p, kind = _clause_penalty(a, b)
            F = F + p
            entries.append({"constraint": f"C{i}", "rule": kind, "penalty": str(p), "objective_term": True})
        xmodel = BlpModel(tuple(xs), name="max2sat-x")
        qubo = to_qubo(F, xs, ["original"] * len(xs), {"problem": "max2sat", "form": "QUBO2", "originals": xs})
        trace = TransformTrace("direct", entries, [])
        forms["QUBO2"] = CompiledQubo(qubo, trace, compact_certificate(xmodel), 0, True, xmodel, [], {})

    def decoder(a: Mapping[str, int]) -> Decoded:
        bits = [a[x] for x in xs]
        return Decoded(tuple(bits), f.satisfied(bits), True)

    return ProblemEncoding("max2sat", blp, forms, decoder, lambda e: f.m - e, {"n": f.n, "m": f.m})


def max2sat_oracle(f: CnfFormula) -> int:
    """Best number of satisfied clauses by enumeration."""
    return max(f.satisfied(bits) for bits in itertools.product((0, 1), repeat=f.n))


# -- Linear ordering --------------------------------------------------------


def _lop_var(i: int, j: int) -> str:
    return f"x{i + 1}_{j + 1}"


def lop_blp(W: WeightMatrix) -> BlpModel:
    """``max sum_{i<j} w_ij x_ij + w_ji (1 - x_ij)`` with triangle constraints."""
    n = W.n
    if n < 2:
        raise ModelError("linear ordering needs n >= 2")
    xs, obj, const = [], {}, 0
    for i in range(n):
        for j in range(i + 1, n):
            v = _lop_var(i, j)
            xs.append(v)
            obj[v] = W[i, j] - W[j, i]
            const += W[j, i]
    cons = []
    for i, j, k in itertools.combinations(range(n), 3):
        terms = {_lop_var(i, j): 1, _lop_var(j, k): 1, _lop_var(i, k): -1}
        cons.append(TwoSidedConstraint(LinearExpression(terms), 0, 1, f"tri{i + 1}_{j + 1}_{k + 1}"))
    return BlpModel(tuple(xs), LinearExpression(obj), const, "max", tuple(cons), "lop")


def lop_order(bits: Mapping[str, int], n: int) -> Optional[tuple]:
    """Order by descending precedence count; None if the relation is not a total order."""
    prec = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = bits[_lop_var(i, j)]
            prec[i][j], prec[j][i] = x, 1 - x
    order = sorted(range(n), key=lambda i: (-sum(prec[i]), i))
    for a in range(n):
        for b in range(a + 1, n):
            if not prec[order[a]][order[b]]:
                return None
    return tuple(order)


def lop_value(W: WeightMatrix, order) -> object:
    pos = {v: t for t, v in enumerate(order)}
    return to_number(sum(W[i, j] for i in range(W.n) for j in range(W.n) if i != j and pos[i] < pos[j]))


def encode_lop(W: WeightMatrix, penalty_mode="auto") -> ProblemEncoding:
    """Linear ordering: one 2-level penalty per triple, compact over ``n(n-1)/2`` variables."""
    blp = lop_blp(W)
    q = mlcts(blp, PipelineConfig(penalty_mode=penalty_mode))
    q.qubo.decode.update({"problem": "lop", "form": "QUBO"})

    def decoder(a):
        order = lop_order(a, W.n)
        if order is None:
            return Decoded(None, None, False)
        return Decoded(order, lop_value(W, order), True)

    return ProblemEncoding("lop", blp, {"QUBO": q}, decoder, lambda e: -e, {"n": W.n})


def lop_oracle(W: WeightMatrix):
    return max(lop_value(W, p) for p in itertools.permutations(range(W.n)))


# -- Community detection ----------------------------------------------------


def _cdp_var(u: int, v: int) -> str:
    u, v = min(u, v), max(u, v)
    return f"x{u + 1}_{v + 1}"


def cdp_blp(g: Graph) -> BlpModel:
    """``max sum_{u != v} a_uv (1 - x_uv)`` with ``x_uw <= x_uv + x_vw`` for every
    triple and every choice of middle vertex ``v``."""
    n = g.n
    xs = [_cdp_var(u, v) for u, v in itertools.combinations(range(n), 2)]
    adj = g.adjacency()
    obj, const = {}, 0
    for u, v in itertools.combinations(range(n), 2):
        if (u, v) in adj:
            obj[_cdp_var(u, v)] = -2
            const += 2
    cons = []
    for tri in itertools.combinations(range(n), 3):
        for v in tri:
            u, w = [t for t in tri if t != v]
            terms = {_cdp_var(u, v): 1, _cdp_var(v, w): 1, _cdp_var(u, w): -1}
            cons.append(TwoSidedConstraint(LinearExpression(terms), 0, None, f"t{u + 1}_{v + 1}_{w + 1}"))
    return BlpModel(tuple(xs), LinearExpression(obj), const, "max", tuple(cons), "cdp")


def cdp_synthesis(blp: BlpModel, rosenberg_weight=2) -> Synthesis:
    """Cubic transitivity penalties quadratized with ``y_uvw = x_uv x_vw``."""
    alloc = AncillaAllocator(blp.variables)
    out = []
    cfg = PipelineConfig(variant=Variant.MLCTS_TR4_1, rosenberg_weight=rosenberg_weight)
    for c in blp.constraints:
        r = refine_and_classify(c)
        pt = synthesize(r)
        names = c.name[1:].split("_")
        u, v, w = (int(t) - 1 for t in names)
        pair = (_cdp_var(u, v), _cdp_var(v, w))
        res = tr4_1_rosenberg(
            pt.poly, alloc, [pair], rosenberg_weight, source=c.name, names=[f"y{u + 1}_{v + 1}_{w + 1}"]
        )
        out.append(
            ConstraintPenalty(c.name, res.combined, pt.rule + "+TR4.1", pt.factored_r, res.ancillaries, res.steps, r.to_dict())
        )
    return Synthesis(blp, cfg, out, alloc, [])


def cdp_clusters(bits: Mapping[str, int], n: int) -> Optional[tuple]:
    """Clusters from the ``x_uv = 0`` relation; None if it is not an equivalence."""
    same = lambda u, v: u == v or bits[_cdp_var(u, v)] == 0
    for u, v, w in itertools.permutations(range(n), 3):
        if same(u, v) and same(v, w) and not same(u, w):
            return None
    clusters, seen = [], set()
    for u in range(n):
        if u in seen:
            continue
        cl = tuple(v for v in range(n) if same(u, v))
        seen.update(cl)
        clusters.append(cl)
    return tuple(clusters)


def cdp_value(g: Graph, clusters) -> int:
    label = {v: t for t, cl in enumerate(clusters) for v in cl}
    return sum(2 for u, v in g.edges if label[u] == label[v])


def encode_cdp(g: Graph, form: Optional[str] = None) -> ProblemEncoding:
    """Community detection with the plain edge-agreement objective.

    ``QUBO1`` weights the penalties with the automatic weight ``lam`` and the
    Rosenberg terms with ``2 lam``; ``QUBO2`` uses weights 1 and 2.
    """
    _names_check(form, {"QUBO1", "QUBO2"})
    if g.n < 3:
        raise ModelError("community detection encoding needs n >= 3")
    blp = cdp_blp(g)
    forms = {}
    synth = cdp_synthesis(blp, 2)
    if form in (None, "QUBO1"):
        lam = auto_weight(blp)
        forms["QUBO1"] = assemble(blp, synth, {p.name: lam for p in synth.penalties}, {"problem": "cdp", "form": "QUBO1"})
    if form in (None, "QUBO2"):
        forms["QUBO2"] = assemble(blp, synth, {p.name: 1 for p in synth.penalties}, {"problem": "cdp", "form": "QUBO2"})

    def decoder(a):
        cl = cdp_clusters(a, g.n)
        if cl is None:
            return Decoded(None, None, False)
        return Decoded(cl, cdp_value(g, cl), True)

    return ProblemEncoding("cdp", blp, forms, decoder, lambda e: -e, {"n": g.n, "m": g.m})


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for t in range(len(part)):
            yield part[:t] + [[first] + part[t]] + part[t + 1 :]
        yield [[first]] + part


def cdp_oracle(g: Graph) -> int:
    return max(cdp_value(g, p) for p in _set_partitions(list(range(g.n))))


# -- Maximum independent set --------------------------------------------------


def mis_blp(g: Graph) -> BlpModel:
    xs = [f"x{v + 1}" for v in range(g.n)]
    cons = tuple(
        TwoSidedConstraint(LinearExpression({xs[u]: 1, xs[v]: 1}), None, 1, f"e{u + 1}_{v + 1}") for u, v in g.edges
    )
    return BlpModel(tuple(xs), LinearExpression({x: 1 for x in xs}), 0, "max", cons, "mis")


def encode_mis(g: Graph, form: Optional[str] = None, weight=MIS_DEFAULT_WEIGHT) -> ProblemEncoding:
    """``QUBO2 = -sum x + w sum_{edges} x_u x_v`` (compact);
    ``QUBO1`` adds one slack per edge (``n + m`` variables)."""
    _names_check(form, {"QUBO1", "QUBO2"})
    blp = mis_blp(g)
    forms = {}
    if form in (None, "QUBO2"):
        q2 = mlcts(blp, PipelineConfig(penalty_mode=weight))
        q2.qubo.decode.update({"problem": "mis", "form": "QUBO2"})
        forms["QUBO2"] = q2
    if form in (None, "QUBO1"):
        q1 = cts(blp, PipelineConfig(penalty_mode=weight))
        q1.qubo.decode.update({"problem": "mis", "form": "QUBO1"})
        forms["QUBO1"] = q1
    xs = blp.variables

    def decoder(a):
        chosen = tuple(v for v in range(g.n) if a[xs[v]])
        s = set(chosen)
        ok = all(not (u in s and v in s) for u, v in g.edges)
        return Decoded(chosen, len(chosen) if ok else None, ok)

    return ProblemEncoding("mis", blp, forms, decoder, lambda e: -e, {"n": g.n, "m": g.m})


def mis_oracle(g: Graph) -> int:
    best = 0
    adj = g.edges
    for mask in range(1 << g.n):
        if all(not (mask >> u & 1 and mask >> v & 1) for u, v in adj):
            best = max(best, bin(mask).count("1"))
    return best


# -- generators -------------------------------------------------------------


def gnp_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi graph; every pair is an edge independently with probability ``p``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} not in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def random_2cnf(n: int, m: int, seed: int) -> CnfFormula:
    """``m`` clauses over two distinct variables with random signs."""
    if n < 2:
        raise ValueError("need at least 2 variables")
    if m < 0:
        raise ValueError("m must be non-negative")
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(m):
        a, b = rng.choice(n, size=2, replace=False) + 1
        sa, sb = rng.choice((-1, 1), size=2)
        clauses.append((int(sa * a), int(sb * b)))
    return CnfFormula(n, tuple(clauses))


def random_weights(n: int, value_range=(0, 9), seed: int = 0) -> WeightMatrix:
    """Integer weights uniform in ``value_range`` (inclusive), zero diagonal."""
    lo, hi = value_range
    if lo > hi:
        raise ValueError("empty weight range")
    rng = np.random.default_rng(seed)
    m = rng.integers(lo, hi + 1, size=(n, n))
    np.fill_diagonal(m, 0)
    return WeightMatrix(tuple(tuple(int(v) for v in row) for row in m))

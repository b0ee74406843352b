"""Brute-force oracles: VIP and augmented-VIP validity, BLP/QUBO optimum
equivalence, and minimal penalty-weight search.

Points are enumerated in a fixed order: point ``i`` sets the ``j``-th
variable (natural name order unless given) to bit ``j`` of ``i``.  The first
failing point is reported, so verdicts are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .model import BlpModel, TwoSidedConstraint
from .polynomial import Polynomial, integer_terms, natural_key, to_number, values_from_int_terms

MAX_VARS = 24
BB_MIN_VARS = 16  # larger quadratic groups are minimized by branch and bound


class EnumerationTooLarge(ValueError):
    """Exhaustive check requested over more than ``MAX_VARS`` variables."""


@dataclass
class Verdict:
    """Outcome of an oracle check.

    Attributes:
        ok: the property holds at every enumerated point.
        counterexample: first failing point with the values involved.
        checked: number of points enumerated.
        detail: short human-readable note.
    """

    ok: bool
    counterexample: Optional[dict] = None
    checked: int = 0
    detail: str = ""

    def to_dict(self) -> dict:
        return {"ok": self.ok, "counterexample": self.counterexample, "checked": self.checked, "detail": self.detail}


def _order(names) -> list:
    return sorted(set(names), key=natural_key)


def _check_size(n: int, cap: int = MAX_VARS):
    if n > cap:
        raise EnumerationTooLarge(f"{n} variables exceed the exhaustive cap {cap}; use sampling mode")


def _point(order: Sequence[str], idx: int) -> dict:
    return {v: (idx >> j) & 1 for j, v in enumerate(order)}


def _broadcast(vals: np.ndarray, sub: Sequence[str], order: Sequence[str]) -> np.ndarray:
    """Expand values over ``sub`` (bit j = sub[j]) to the full grid over ``order``."""
    n = len(order)
    pos = {v: j for j, v in enumerate(order)}
    m = len(sub)
    arr = np.asarray(vals).reshape((2,) * m) if m else np.asarray(vals).reshape(())
    # axis a of arr holds sub[m-1-a]; in the full grid variable p sits on axis n-1-p
    src_axes_target = [n - 1 - pos[sub[m - 1 - a]] for a in range(m)]
    perm = sorted(range(m), key=lambda a: src_axes_target[a])
    arr = np.transpose(arr, perm) if m else arr
    shape = [1] * n
    for a in perm:
        shape[src_axes_target[a]] = 2
    return arr.reshape(shape)


def projected_values(p: Polynomial, keep: Sequence[str], cap: int = MAX_VARS) -> tuple[np.ndarray, int]:
    """``min`` over every variable not in ``keep`` of ``p``, for each point over ``keep``.

    Returns integer numerators (shape ``2**len(keep)``) and the common
    denominator.  Eliminated variables are split into connected components
    of the interaction graph and minimized independently, which is exact.
    """
    keep = list(keep)
    kset = set(keep)
    elim = [v for v in p.variables if v not in kset]
    terms, den = integer_terms(p)
    _check_size(len(keep), cap)
    # union-find over eliminated variables
    parent = {v: v for v in elim}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for key in terms:
        es = [v for v in key if v not in kset]
        for a in es[1:]:
            ra, rb = find(es[0]), find(a)
            if ra != rb:
                parent[ra] = rb
    groups: dict = {}
    for key, c in terms.items():
        es = [v for v in key if v not in kset]
        gid = find(es[0]) if es else None
        groups.setdefault(gid, {})[key] = c
    bound = sum(abs(c) for c in terms.values())
    dtype = np.int64 if bound < 2**62 else object
    total = np.zeros((2,) * len(keep), dtype=dtype) if keep else np.zeros((), dtype=dtype)
    for gid, gterms in groups.items():
        kv = _order({v for key in gterms for v in key if v in kset})
        if gid is None:
            vals = values_from_int_terms(gterms, kv, dtype)
        else:
            ev = _order({v for key in gterms for v in key if v not in kset})
            quadratic = max(len(key) for key in gterms) <= 2
            if not kv and len(ev) > BB_MIN_VARS and quadratic and dtype is np.int64:
                vals = np.array([_bb_group_min(gterms, ev)], dtype=dtype)
            elif len(ev) + len(kv) <= cap:
                full = values_from_int_terms(gterms, ev + kv, dtype)
                vals = full.reshape(1 << len(kv), 1 << len(ev)).min(axis=1)
            elif kv:
                vals = _split_min(gterms, kv, cap, dtype)
            else:
                _check_size(len(ev), cap)
        total = total + _broadcast(vals, kv, keep)
    total = np.broadcast_to(total, (2,) * len(keep)) if keep else total
    return np.ascontiguousarray(total).reshape(-1), den


@njit(cache=True)
def _bb_min(c, Q, const):
    """Exact minimum of ``const + sum c_i x_i + sum_{i<j} Q_ij x_i x_j``.

    Depth-first search over the variables in index order.  A subtree is cut
    when ``value so far + sum of negative remaining fields + sum of negative
    remaining couplings`` cannot beat the incumbent; that is a valid lower
    bound, so the result is exact.
    """
    n = c.size
    negq = np.zeros(n + 1, dtype=np.int64)
    for d in range(n - 1, -1, -1):
        acc = negq[d + 1]
        for j in range(d + 1, n):
            if Q[d, j] < 0:
                acc += Q[d, j]
        negq[d] = acc
    f = c.copy()
    state = np.zeros(n, dtype=np.int8)
    val = const
    best = const  # the all-zero point
    d = 0
    while d >= 0:
        if d == n:
            if val < best:
                best = val
            d -= 1
            continue
        s = state[d]
        if s == 0:
            lb = val + negq[d]
            for i in range(d, n):
                if f[i] < 0:
                    lb += f[i]
            if lb >= best:
                d -= 1
                continue
            state[d] = 1
            d += 1
        elif s == 1:
            state[d] = 2
            val += f[d]
            for j in range(d + 1, n):
                f[j] += Q[d, j]
            d += 1
        else:
            val -= f[d]
            for j in range(d + 1, n):
                f[j] -= Q[d, j]
            state[d] = 0
            d -= 1
    return best


def _bb_group_min(gterms: dict, ev: list) -> int:
    pos = {v: j for j, v in enumerate(ev)}
    n = len(ev)
    c = np.zeros(n, dtype=np.int64)
    Q = np.zeros((n, n), dtype=np.int64)
    const = 0
    for key, w in gterms.items():
        if not key:
            const += w
        elif len(key) == 1:
            c[pos[key[0]]] += w
        else:
            i, j = sorted((pos[key[0]], pos[key[1]]))
            Q[i, j] += w
    return int(_bb_min(c, Q, np.int64(const)))


def _split_min(gterms: dict, kv: list, cap: int, dtype) -> np.ndarray:
    """Minimum over the eliminated variables of one oversized group.

    Fixes the kept variables one point at a time; the restricted polynomial
    often falls apart into smaller groups, which the recursion exploits.
    """
    _check_size(len(kv), cap)
    poly = Polynomial(gterms)
    out = np.empty(1 << len(kv), dtype=dtype)
    for idx in range(1 << len(kv)):
        sub, _ = projected_values(poly.restrict(_point(kv, idx)), [], cap)
        out[idx] = sub[0]
    return out


def feasibility_mask(c: TwoSidedConstraint, order: Sequence[str]) -> np.ndarray:
    """Boolean array: constraint holds at each point over ``order``."""
    h = c.expr.to_polynomial()
    terms, den = integer_terms(h)
    vals = values_from_int_terms(terms, order)
    ok = np.ones(vals.shape, dtype=bool)
    # vals are integers, so compare against rounded scaled bounds
    if c.lo is not None:
        ok &= vals >= math.ceil(Fraction(c.lo) * den)
    if c.hi is not None:
        ok &= vals <= math.floor(Fraction(c.hi) * den)
    return ok


def _vip_verdict(vals, den, feas, order, c, label) -> Verdict:
    pos = vals > 0
    bad = np.flatnonzero(np.where(feas, vals != 0, ~pos))
    n = len(vals)
    if bad.size == 0:
        return Verdict(True, None, n, f"{label} valid")
    idx = int(bad[0])
    a = _point(order, idx)
    pv = Fraction(int(vals[idx]), den)
    return Verdict(
        False,
        {
            "assignment": a,
            "penalty": str(to_number(pv)),
            "feasible": bool(feas[idx]),
            "residual": str(c.residual(a)),
        },
        n,
        "penalty is nonzero at a feasible point" if feas[idx] else "penalty is not positive at an infeasible point",
    )


def check_vip(P: Polynomial, c: TwoSidedConstraint, cap: int = MAX_VARS) -> Verdict:
    """Exhaustively check ``P == 0`` on feasible points and ``P > 0`` elsewhere."""
    order = _order(set(P.variables) | set(c.expr.terms))
    _check_size(len(order), cap)
    terms, den = integer_terms(P)
    vals = values_from_int_terms(terms, order)
    return _vip_verdict(vals, den, feasibility_mask(c, order), order, c, "VIP")


def check_augmented_vip(P: Polynomial, c: TwoSidedConstraint, ancillaries, cap: int = MAX_VARS) -> Verdict:
    """Minimize ``P`` over ``ancillaries`` and check the result is a VIP."""
    anc = set(ancillaries)
    order = _order((set(P.variables) | set(c.expr.terms)) - anc)
    # projected_values enforces the cap per connected group of ancillaries
    vals, den = projected_values(P, order, cap)
    return _vip_verdict(vals, den, feasibility_mask(c, order), order, c, "augmented VIP")


def blp_table(m: BlpModel, cap: int = MAX_VARS):
    """Objective numerators (minimization form), denominator and feasibility over all points."""
    order = list(m.variables)
    _check_size(len(order), cap)
    terms, den = integer_terms(m.min_objective())
    obj = values_from_int_terms(terms, order)
    feas = np.ones(obj.shape, dtype=bool)
    for c in m.constraints:
        feas &= feasibility_mask(c, order)
    return obj, den, feas


def check_equivalence(m: BlpModel, q, cap: int = MAX_VARS) -> Verdict:
    """Compare the QUBO's global minimum with the BLP optimum.

    Passes when the minima agree exactly (both in minimization form) and every
    original-variable point attaining the QUBO minimum (for some ancillary
    setting) is feasible.  ``q`` is a compiled QUBO (with ``.qubo``) or a
    :class:`QuboModel` whose first variables are the model's.
    """
    qubo = getattr(q, "qubo", q)
    order = list(m.variables)
    obj, oden, feas = blp_table(m, cap)
    n_points = len(obj)
    if not feas.any():
        return Verdict(False, None, n_points, "infeasible BLP: no feasible point to compare against")
    best_blp = min(Fraction(int(v), oden) for v in np.unique(obj[feas]))
    poly = qubo.to_polynomial()
    extra = set(poly.variables) - set(qubo.variables)
    if extra:
        raise ValueError(f"QUBO polynomial has unknown variables {extra}")
    anc = [v for v in qubo.variables if v not in set(order)]
    proj, qden = projected_values(poly, order, cap)
    qmin_num = proj.min()
    qmin = Fraction(int(qmin_num), qden)
    checked = n_points << len(anc) if len(anc) < 40 else n_points
    if qmin != best_blp:
        idx = int(np.flatnonzero(proj == qmin_num)[0])
        return Verdict(
            False,
            {"assignment": _point(order, idx), "qubo_min": str(qmin), "blp_optimum": str(best_blp)},
            checked,
            "QUBO minimum differs from the BLP optimum",
        )
    argmins = np.flatnonzero(proj == qmin_num)
    bad = [int(i) for i in argmins if not feas[i]]
    if bad:
        return Verdict(
            False,
            {"assignment": _point(order, bad[0]), "qubo_min": str(qmin), "blp_optimum": str(best_blp)},
            checked,
            "a QUBO argmin decodes to an infeasible point",
        )
    return Verdict(True, None, checked, f"optimum {m.from_min_value(best_blp)} preserved")


def minimal_lambda(m: BlpModel, variant=None, cap_exp: int = 16, **cfg) -> dict:
    """Smallest uniform integer weight for which the compiled QUBO is equivalent.

    Doubles from 1 until equivalence holds, then bisects.  Returns
    ``{constraint name: weight}`` (the same value for every constraint).

    Raises:
        ValueError: when no weight up to ``2**cap_exp`` works, which means
            some penalty is not a valid VIP.
    """
    from . import pipeline

    if not m.constraints:
        return {}
    base = pipeline.synthesize_model(m, pipeline.PipelineConfig(variant=variant or pipeline.DEFAULT_VARIANT, **cfg))
    dim = len(m.variables) + len(base.ancillaries)
    if dim > 20:
        raise ValueError(f"minimal-weight search limited to 20 variables, model has {dim}")

    def ok(lam: int) -> bool:
        weights = {p.name: lam for p in base.penalties}
        return check_equivalence(m, pipeline.assemble(m, base, weights)).ok

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 2**cap_exp:
            raise ValueError("no penalty weight up to 2**%d preserves the optimum; a penalty is not a VIP" % cap_exp)
    lo = hi // 2  # lo fails (or is 0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return {p.name: hi for p in base.penalties}


def sample_vip(P: Polynomial, c: TwoSidedConstraint, samples: int, seed: int, ancillaries=()) -> Verdict:
    """Non-exhaustive VIP check at random points (for supports above the cap).

    With ancillaries the minimum over them is still taken exhaustively, so
    the ancillary count must stay small.
    """
    rng = np.random.default_rng(seed)
    anc = _order(ancillaries)
    order = _order((set(P.variables) | set(c.expr.terms)) - set(anc))
    _check_size(len(anc), 20)
    for t in range(samples):
        bits = rng.integers(0, 2, size=len(order))
        a = {v: int(b) for v, b in zip(order, bits)}
        if anc:
            restricted = P.restrict(a)
            vals, den = projected_values(restricted, [])
            pv = Fraction(int(vals[0]), den)
        else:
            pv = Fraction(P.evaluate(a))
        feas = c.holds(a)
        if (feas and pv != 0) or (not feas and pv <= 0):
            return Verdict(
                False,
                {"assignment": a, "penalty": str(to_number(pv)), "feasible": feas, "residual": str(c.residual(a))},
                t + 1,
                "sampled counterexample (non-exhaustive mode)",
            )
    return Verdict(True, None, samples, "no counterexample in sampled points (non-exhaustive mode)")

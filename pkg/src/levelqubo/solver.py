"""QUBO solvers: exact enumeration for small dimension and seeded simulated
annealing with one-flip incremental evaluation.

Both work on a symmetric neighbour-list view of the QUBO.  The local field of
variable ``i`` is ``f_i = Q_ii + sum_j Q_ij x_j`` and flipping ``i`` changes
the energy by ``f_i`` (0 -> 1) or ``-f_i`` (1 -> 0), so a flip costs
O(degree).  Enumeration uses integers scaled by the common denominator and
walks a Gray code; the search in SA is float64 and the incumbent is
re-evaluated exactly before it is reported.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from numba import njit

from .polynomial import to_number
from .qubo import QuboModel

MAX_EXHAUSTIVE = 26
T_RATIO = 1e-3  # final temperature as a fraction of the initial one


@dataclass
class SolveResult:
    """Best point found by a solver.

    Attributes:
        best_assignment: variable name -> bit.
        best_bits: the same point as a tuple in variable order.
        best_energy: exact energy at ``best_bits``.
        method: ``"exhaustive"`` or ``"sa"``.
        iterations: flip attempts per restart (points visited for exhaustive).
        history: ``(seconds, iteration, best energy)`` samples of the winning restart.
    """

    best_assignment: dict
    best_bits: tuple
    best_energy: object
    method: str
    iterations: int = 0
    restarts: int = 1
    elapsed: float = 0.0
    seed: Optional[int] = None
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        e = self.best_energy
        return {
            "method": self.method,
            "best_energy": e if isinstance(e, int) else str(e),
            "best_assignment": self.best_assignment,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "elapsed": self.elapsed,
            "seed": self.seed,
            "history": [list(h) for h in self.history],
        }


def _int_arrays(q: QuboModel):
    """Integer diagonal / CSR arrays scaled by the common denominator."""
    den = 1
    for v in list(q.coefficients.values()) + [q.constant]:
        den = math.lcm(den, Fraction(v).denominator)
    diag, indptr, indices, weights = q.float_arrays()
    idiag = np.zeros(q.n, dtype=np.int64)
    nbrs: list = [[] for _ in range(q.n)]
    bound = 0
    for (i, j), v in q.coefficients.items():
        iv = int(Fraction(v) * den)
        bound += abs(iv)
        if i == j:
            idiag[i] += iv
        else:
            nbrs[i].append((j, iv))
            nbrs[j].append((i, iv))
    if bound >= 2**62:
        raise OverflowError("QUBO coefficients too large for exact 64-bit enumeration")
    iw = np.empty(indptr[-1], dtype=np.int64)
    ii = np.empty(indptr[-1], dtype=np.int64)
    for i in range(q.n):
        for t, (j, iv) in enumerate(nbrs[i]):
            ii[indptr[i] + t] = j
            iw[indptr[i] + t] = iv
    return idiag, indptr, ii, iw, den


@njit(cache=True, nogil=True)
def _gray_search(diag, indptr, indices, weights, n):
    x = np.zeros(n, dtype=np.int8)
    fld = diag.copy()
    e = 0
    best = 0
    best_idx = 0
    for step in range(1, 1 << n):
        k = 0
        while not (step >> k) & 1:
            k += 1
        if x[k]:
            d = -fld[k]
            x[k] = 0
            s = -1
        else:
            d = fld[k]
            x[k] = 1
            s = 1
        for p in range(indptr[k], indptr[k + 1]):
            fld[indices[p]] += s * weights[p]
        e += d
        g = step ^ (step >> 1)
        if e < best or (e == best and g < best_idx):
            best = e
            best_idx = g
    return best, best_idx


def solve_exhaustive(q: QuboModel) -> SolveResult:
    """Global minimum by enumeration; ties go to the smallest point index
    (bit ``j`` of the index is variable ``j``).

    Raises:
        ValueError: more than ``MAX_EXHAUSTIVE`` variables.
    """
    n = q.n
    if n > MAX_EXHAUSTIVE:
        raise ValueError(f"exhaustive search limited to {MAX_EXHAUSTIVE} variables, QUBO has {n}")
    t0 = time.perf_counter()
    if n == 0:
        bits: tuple = ()
    else:
        diag, indptr, indices, weights, _ = _int_arrays(q)
        _, idx = _gray_search(diag, indptr, indices, weights, n)
        bits = tuple((int(idx) >> j) & 1 for j in range(n))
    return SolveResult(
        q.assignment(bits), bits, q.energy(bits), "exhaustive", 1 << n, 1, time.perf_counter() - t0, None, []
    )


@njit(cache=True, nogil=True)
def _flip(x, fld, indptr, indices, weights, k):
    """Flip ``x[k]`` and update the local fields; returns the energy change."""
    if x[k]:
        d = -fld[k]
        x[k] = 0
        s = -1.0
    else:
        d = fld[k]
        x[k] = 1
        s = 1.0
    for p in range(indptr[k], indptr[k + 1]):
        fld[indices[p]] += s * weights[p]
    return d


@njit(cache=True, nogil=True)
def _fields(x, diag, indptr, indices, weights):
    fld = diag.copy()
    for i in range(x.size):
        if x[i]:
            for p in range(indptr[i], indptr[i + 1]):
                fld[indices[p]] += weights[p]
    return fld


@njit(cache=True, nogil=True)
def _energy(x, diag, fld, const):
    e = const
    for i in range(x.size):
        if x[i]:
            e += 0.5 * (diag[i] + fld[i])
    return e


@njit(cache=True, nogil=True)
def _anneal(diag, indptr, indices, weights, const, iters, t_start, t_end, seed, hist_every):
    np.random.seed(seed)
    n = diag.size
    x = np.zeros(n, dtype=np.int8)
    for i in range(n):
        x[i] = np.random.randint(0, 2)
    fld = _fields(x, diag, indptr, indices, weights)
    e = _energy(x, diag, fld, const)
    best = e
    best_x = x.copy()
    alpha = (t_end / t_start) ** (1.0 / max(iters - 1, 1))
    temp = t_start
    nh = iters // hist_every + 1 if hist_every > 0 else 0
    hist_it = np.zeros(nh, dtype=np.int64)
    hist_e = np.zeros(nh)
    h = 0
    for it in range(iters):
        k = np.random.randint(0, n)
        d = fld[k] if x[k] == 0 else -fld[k]
        if d <= 0.0 or np.random.random() < math.exp(-d / temp):
            _flip(x, fld, indptr, indices, weights, k)
            e += d
            if e < best - 1e-9:
                best = e
                best_x[:] = x
        temp *= alpha
        if hist_every > 0 and (it + 1) % hist_every == 0 and h < nh:
            hist_it[h] = it + 1
            hist_e[h] = best
            h += 1
    return best_x, best, hist_it[:h], hist_e[:h]


@njit(cache=True)
def _replay(diag, indptr, indices, weights, const, x0, flips):
    x = x0.copy()
    fld = _fields(x, diag, indptr, indices, weights)
    e = _energy(x, diag, fld, const)
    out = np.empty(flips.size)
    for t in range(flips.size):
        e += _flip(x, fld, indptr, indices, weights, flips[t])
        out[t] = e
    return out


def incremental_energies(q: QuboModel, x0, flips) -> np.ndarray:
    """Energies maintained by the incremental update after each flip in ``flips``.

    Uses the same kernels as the annealer; intended for auditing them
    against exact evaluation.
    """
    diag, indptr, indices, weights = q.float_arrays()
    return _replay(
        diag,
        indptr,
        indices,
        weights,
        float(q.constant),
        np.asarray(x0, dtype=np.int8),
        np.asarray(flips, dtype=np.int64),
    )


def _workers(restarts: int) -> int:
    env = os.environ.get("LEVELQUBO_WORKERS")
    w = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(w, restarts))


def _calibrate(arrays, const, t_start, seed, time_ms: float) -> int:
    """Iteration count that fits ``time_ms`` on this machine (not deterministic)."""
    probe = 20000
    _anneal(*arrays, const, 10, t_start, t_start * T_RATIO, seed, 0)  # compile / warm up
    t = time.perf_counter()
    _anneal(*arrays, const, probe, t_start, t_start * T_RATIO, seed, 0)
    rate = probe / max(time.perf_counter() - t, 1e-9)
    return max(1, int(rate * time_ms / 1000.0))


def solve_sa(
    q: QuboModel,
    seed: int,
    iters: Optional[int] = None,
    time_ms: Optional[float] = None,
    restarts: int = 1,
    history_samples: int = 0,
) -> SolveResult:
    """Single-flip Metropolis annealing, temperature geometric from
    ``max|Q|`` down to ``max|Q| / 1000``.

    Args:
        q: the QUBO.
        seed: restart ``r`` is seeded with ``seed + r``.
        iters: flip attempts per restart.  Deterministic.
        time_ms: wall-time budget per restart, converted to an iteration
            count by a short calibration run.  Not deterministic.
        restarts: independent runs; the best exact energy wins, ties go to
            the lowest restart index.
        history_samples: number of incumbent samples to keep (0 = none).
    """
    if q.n < 1:
        raise ValueError("solve_sa needs at least one variable")
    if (iters is None) == (time_ms is None):
        raise ValueError("give exactly one of iters or time_ms")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    arrays = q.float_arrays()
    const = float(q.constant)
    t_start = max([abs(float(v)) for v in q.coefficients.values()] + [0.0]) or 1.0
    start = time.perf_counter()
    if iters is None:
        iters = _calibrate(arrays, const, t_start, seed, time_ms)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    every = max(1, iters // history_samples) if history_samples else 0

    def run(r):
        t = time.perf_counter()
        out = _anneal(*arrays, const, iters, t_start, t_start * T_RATIO, seed + r, every)
        return out + (time.perf_counter() - t,)

    with ThreadPoolExecutor(_workers(restarts)) as pool:
        runs = list(pool.map(run, range(restarts)))
    best = None
    for r, (bx, _, hit, he, secs) in enumerate(runs):
        bits = tuple(int(b) for b in bx)
        exact = q.energy(bits)
        if best is None or exact < best[0]:
            best = (exact, bits, hit, he, secs)
    exact, bits, hit, he, secs = best
    hist = [(float(secs * i / iters), int(i), float(v)) for i, v in zip(hit, he)]
    return SolveResult(
        q.assignment(bits), bits, exact, "sa", int(iters), restarts, time.perf_counter() - start, seed, hist
    )


def gap(value, reference):
    """Optimality gap ``100 * (z* - z) / z*`` on domain objective values.

    Returns None when ``value`` is None (no feasible decode).

    Raises:
        ValueError: ``reference`` is zero, where the gap is undefined.
    """
    if value is None:
        return None
    reference = Fraction(reference)
    if reference == 0:
        raise ValueError("optimality gap is undefined for a zero reference optimum")
    return to_number(100 * (reference - Fraction(value)) / reference)

import itertools
import random

import numpy as np
import pytest

from brute import qubo_minimum
from levelqubo.model import CnfFormula, Graph, ModelError, WeightMatrix
from levelqubo.polynomial import Polynomial
from levelqubo.problems import (
    encode_cdp,
    encode_lop,
    encode_max2sat,
    encode_mis,
    gnp_graph,
    lop_order,
    random_2cnf,
    random_weights,
)
from levelqubo.verify import check_equivalence, projected_values

# -- independent domain oracles ---------------------------------------------


def sat_count(clauses, bits):
    ok = lambda l: bits[abs(l) - 1] == (1 if l > 0 else 0)
    return sum(1 for a, b in clauses if ok(a) or ok(b))


def best_sat(n, clauses):
    return max(sat_count(clauses, bits) for bits in itertools.product((0, 1), repeat=n))


def best_order(rows):
    n = len(rows)
    return max(sum(rows[p[a]][p[b]] for a in range(n) for b in range(a + 1, n)) for p in itertools.permutations(range(n)))


def best_partition(n, edges):
    best = 0
    for labels in itertools.product(range(n), repeat=n):
        best = max(best, 2 * sum(labels[u] == labels[v] for u, v in edges))
    return best


def best_independent(n, edges):
    for k in range(n, -1, -1):
        for s in itertools.combinations(range(n), k):
            ss = set(s)
            if not any(u in ss and v in ss for u, v in edges):
                return k
    return 0


def random_graph(rng, n, p=0.5):
    return Graph(n, tuple((u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p))


# -- Max2SAT ----------------------------------------------------------------


def test_max2sat_dimensions_and_trace():
    f = CnfFormula(3, ((1, 2), (-1, 3), (-2, -3)))
    enc = encode_max2sat(f)
    assert enc.forms["QUBO1"].qubo.n == 6 and enc.forms["QUBO2"].qubo.n == 3
    for e in enc.forms["QUBO2"].trace.entries:
        assert "weight" not in e and e["objective_term"]
    assert [e["rule"] for e in enc.forms["QUBO2"].trace.entries] == ["P++", "P+-", "P--"]
    assert enc.forms["QUBO2"].qubo.to_polynomial() == Polynomial.parse(
        "(1-x1)*(1-x2) + x1*(1-x3) + x2*x3".replace("(1-x1)*(1-x2)", "1 - x1 - x2 + x1*x2").replace(
            "x1*(1-x3)", "x1 - x1*x3"
        )
    )


@pytest.mark.parametrize("seed", range(6))
def test_max2sat_optima(seed):
    f = random_2cnf(4, 5, seed)
    want = best_sat(f.n, f.clauses)
    enc = encode_max2sat(f)
    for name, q in enc.forms.items():
        e, arg = qubo_minimum(q.qubo)
        assert enc.energy_to_objective(e) == want, name
        d = enc.decode(name, arg[0])
        assert d.objective == want


def test_max2sat_equivalence_qubo1():
    f = random_2cnf(3, 4, 7)
    enc = encode_max2sat(f, form="QUBO1")
    assert check_equivalence(enc.blp, enc.forms["QUBO1"]).ok


def test_max2sat_strict():
    f = CnfFormula(2, ((1, -1),))
    with pytest.raises(ModelError):
        encode_max2sat(f, strict=True)
    assert encode_max2sat(f).forms["QUBO2"].qubo.n == 2


# -- LOP --------------------------------------------------------------------


def test_lop_structure():
    enc = encode_lop(random_weights(4, seed=1))
    q = enc.forms["QUBO"]
    assert q.qubo.n == 6 and q.ancillary_count == 0 and q.is_compact
    assert len(enc.blp.constraints) == 4
    assert all(p.poly.degree == 2 for p in q.penalties)


@pytest.mark.parametrize("seed", range(5))
def test_lop_optima(seed):
    W = random_weights(4, seed=seed)
    enc = encode_lop(W)
    e, arg = qubo_minimum(enc.forms["QUBO"].qubo)
    want = best_order(W.rows)
    assert enc.energy_to_objective(e) == want
    d = enc.decode("QUBO", arg[0])
    assert d.feasible and d.objective == want


def test_lop_order_decoding():
    assert lop_order({"x1_2": 1, "x1_3": 1, "x2_3": 1}, 3) == (0, 1, 2)
    assert lop_order({"x1_2": 0, "x1_3": 0, "x2_3": 1}, 3) == (1, 2, 0)
    assert lop_order({"x1_2": 1, "x1_3": 0, "x2_3": 1}, 3) is None


# -- CDP --------------------------------------------------------------------


def test_cdp_table_values():
    enc = encode_cdp(Graph(3, ((0, 1), (1, 2), (0, 2))), form="QUBO2")
    q = enc.forms["QUBO2"]
    assert q.qubo.n == 6 and q.ancillary_count == 3
    pen = sum((p.poly for p in q.penalties), Polynomial.zero())
    vals, _ = projected_values(pen, ["x1_2", "x2_3", "x1_3"])
    # rows 000, 100, 010, 001, 110, 101, 011, 111 over (x12, x23, x13)
    rows = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)]
    got = [int(vals[a + 2 * b + 4 * c]) for a, b, c in rows]
    assert got == [0, 1, 1, 1, 0, 0, 0, 0]


@pytest.mark.parametrize("seed", range(4))
def test_cdp_optima(seed):
    rng = random.Random(seed)
    g = random_graph(rng, 4)
    want = best_partition(g.n, g.edges)
    enc = encode_cdp(g)
    for name, q in enc.forms.items():
        e, arg = qubo_minimum(q.qubo)
        assert enc.energy_to_objective(e) == want
        assert enc.decode(name, arg[0]).feasible
        assert check_equivalence(enc.blp, q).ok


def test_cdp_needs_three_vertices():
    with pytest.raises(ModelError):
        encode_cdp(Graph(2, ((0, 1),)))


# -- MIS --------------------------------------------------------------------


def test_mis_triangle():
    enc = encode_mis(Graph(3, ((0, 1), (1, 2), (0, 2))))
    q2, q1 = enc.forms["QUBO2"], enc.forms["QUBO1"]
    assert q2.qubo.to_polynomial() == Polynomial.parse("-x1 - x2 - x3 + 2*x1*x2 + 2*x2*x3 + 2*x1*x3")
    assert q1.qubo.n == q2.qubo.n + 3
    assert enc.qubo_compact is q2 and enc.qubo_augmented is q1


@pytest.mark.parametrize("seed", range(5))
def test_mis_optima(seed):
    rng = random.Random(100 + seed)
    g = random_graph(rng, rng.randint(4, 7), 0.4)
    want = best_independent(g.n, g.edges)
    enc = encode_mis(g)
    for name in ("QUBO2",) + (("QUBO1",) if g.n + g.m <= 14 else ()):
        e, arg = qubo_minimum(enc.forms[name].qubo)
        assert enc.energy_to_objective(e) == want
        assert enc.decode(name, arg[0]).objective == want


def test_mis_decode_infeasible():
    enc = encode_mis(Graph(2, ((0, 1),)), form="QUBO2")
    d = enc.decode("QUBO2", (1, 1))
    assert not d.feasible and d.objective is None and d.solution == (0, 1)


# -- generators -------------------------------------------------------------


def test_gnp_deterministic():
    a, b = gnp_graph(30, 0.1, 4), gnp_graph(30, 0.1, 4)
    assert a.edges == b.edges and a.edges != gnp_graph(30, 0.1, 5).edges
    assert gnp_graph(5, 0.0, 1).m == 0 and gnp_graph(5, 1.0, 1).m == 10
    with pytest.raises(ValueError):
        gnp_graph(5, 1.5, 0)


def test_gnp_density():
    g = gnp_graph(200, 0.1, 0)
    assert abs(g.m / (200 * 199 / 2) - 0.1) < 0.01


def test_random_2cnf_distinct_variables():
    f = random_2cnf(5, 40, 2)
    assert f.m == 40 and all(abs(a) != abs(b) for a, b in f.clauses)
    assert all(1 <= abs(l) <= 5 for c in f.clauses for l in c)


def test_random_weights():
    W = random_weights(5, (1, 3), seed=9)
    assert all(W[i, i] == 0 for i in range(5))
    assert all(1 <= W[i, j] <= 3 for i in range(5) for j in range(5) if i != j)
    assert np.array_equal(np.array(W.rows), np.array(random_weights(5, (1, 3), seed=9).rows))

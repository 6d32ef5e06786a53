from __future__ import annotations

import logging
import random
from fractions import Fraction
from itertools import combinations

import pytest

from nucleodp.lpsolve import (
    ConstraintSystem,
    LazyLevel,
    LpStatus,
    OracleAnswer,
    maximize,
    optimize_linear_over_region,
    solve_with_separation,
)
from nucleodp.nucleolus import chi
from nucleodp.ratmath import RationalSpan, Singular, solve_linear_system

F = Fraction


def vertex_max(c, A, b, E=(), f=()):
    """Brute-force LP oracle for bounded problems: best feasible basic point."""
    ny = len(c)
    rows = [(list(map(F, r)), F(v)) for r, v in zip(A, b)]
    eqs = [(list(map(F, r)), F(v)) for r, v in zip(E, f)]
    best = None
    for picked in combinations(range(len(rows)), max(0, ny - len(eqs))):
        sysA = [r for r, _ in eqs] + [rows[i][0] for i in picked]
        sysb = [v for _, v in eqs] + [rows[i][1] for i in picked]
        if len(sysA) != ny:
            continue
        y = solve_linear_system(sysA, sysb)
        if isinstance(y, Singular):
            continue
        if all(sum(a * x for a, x in zip(r, y)) <= v for r, v in rows) and \
                all(sum(a * x for a, x in zip(r, y)) == v for r, v in eqs):
            val = sum(a * x for a, x in zip(c, y))
            best = val if best is None or val > best else best
    return best


# -- dense LP -----------------------------------------------------------------

def test_simple_box():
    sol = maximize([1, 1], [[1, 0], [0, 1]], [2, 3])
    assert sol.status is LpStatus.OPTIMAL and sol.value == 5 and sol.point == (2, 3)


def test_equality_and_free_variables():
    sol = maximize([1, -1], [[1, 0], [0, -1]], [F(7, 2), 1], [[1, 1]], [1])
    assert sol.value == 3 and sol.point == (2, -1)  # y2 >= -1 binds before y1 <= 7/2
    sol = maximize([1, 0], [[1, 0]], [F(1, 3)], [[1, 1]], [0])
    assert sol.value == F(1, 3) and sol.point == (F(1, 3), F(-1, 3))


def test_infeasible():
    assert maximize([1], [[1], [-1]], [0, -1]).status is LpStatus.INFEASIBLE
    assert maximize([0, 0], [], [], [[1, 1], [1, 1]], [0, 1]).status is LpStatus.INFEASIBLE


def test_unbounded():
    assert maximize([1, 0], [[0, 1]], [1]).status is LpStatus.UNBOUNDED
    assert maximize([1], [], []).status is LpStatus.UNBOUNDED


def test_no_constraints_zero_objective():
    sol = maximize([0, 0], [], [])
    assert sol.status is LpStatus.OPTIMAL and sol.value == 0


def test_degenerate_vertex():
    A = [[1, 0], [0, 1], [1, 1], [2, 1], [1, 2]]
    b = [1, 1, 2, 3, 3]
    sol = maximize([1, 1], A, b)
    assert sol.value == 2 and sol.point == (1, 1)


def test_matches_vertex_enumeration_random():
    rng = random.Random(31)
    for _ in range(200):
        ny = rng.randint(1, 3)
        A = [[F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(ny)] for _ in range(rng.randint(0, 4))]
        b = [F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in A]
        for i in range(ny):  # box keeps the problem bounded
            A.append([F(int(i == j)) for j in range(ny)])
            A.append([F(-int(i == j)) for j in range(ny)])
            b += [F(5), F(5)]
        E, f = [], []
        if rng.random() < 0.4:
            E = [[F(rng.randint(-2, 2)) for _ in range(ny)]]
            f = [F(rng.randint(-2, 2))]
        c = [F(rng.randint(-5, 5), rng.randint(1, 2)) for _ in range(ny)]
        want = vertex_max(c, A, b, E, f)
        sol = maximize(c, A, b, E, f)
        if want is None:
            assert sol.status is LpStatus.INFEASIBLE
            continue
        assert sol.status is LpStatus.OPTIMAL
        assert sol.value == want == sum(a * y for a, y in zip(c, sol.point))
        assert all(sum(a * y for a, y in zip(r, sol.point)) <= v for r, v in zip(A, b))
        assert all(sum(a * y for a, y in zip(r, sol.point)) == v for r, v in zip(E, f))


def test_idempotent():
    A = [[1, 2], [3, -1], [-1, 0], [0, -1]]
    b = [4, 5, 0, 0]
    assert maximize([1, 1], A, b) == maximize([1, 1], A, b)


# -- constraint systems with lazy levels --------------------------------------------

def brute_oracle(n, nu, sys):
    def oracle(x, j):
        span = RationalSpan(n, sys.levels[j].span)
        best = None
        for S in range(1, 1 << n):
            v = chi(S, n)
            if span.contains(v):
                continue
            e = sum(x[i] for i in range(n) if v[i]) - nu[S]
            if best is None or e < best.excess:
                best = OracleAnswer(e, v, nu[S])
        return best
    return oracle


def majority():
    return {S: F(1 if bin(S).count("1") >= 2 else 0) for S in range(8)}


def leastcore_system(n, nu):
    sys = ConstraintSystem(n)
    sys.add_equality((1,) * n, nu[(1 << n) - 1])
    for i in range(n):
        sys.add_lower_bound(chi(1 << i, n), nu[1 << i])
    sys.levels.append(LazyLevel(span=[(1,) * n]))
    for i in range(n):  # seed the level so epsilon starts bounded
        sys.add_cut(0, chi(1 << i, n), nu[1 << i])
    return sys


def test_two_player_epsilon_without_violations():
    sys = ConstraintSystem(2, levels=[LazyLevel(span=[(1, 1)])])
    sys.add_equality((1, 1), 1)
    for i in range(2):
        sys.add_lower_bound(chi(1 << i, 2), 0)
    sys.add_cut(0, (1, 0), F(0))
    sys.add_cut(0, (0, 1), F(0))
    res = solve_with_separation(sys, (0, 0, 1), lambda x, j: None)
    assert res.epsilon == F(1, 2) and res.point == (F(1, 2), F(1, 2))
    assert res.rounds == 1 and res.cuts == []


def test_majority_leastcore():
    nu = majority()
    sys = leastcore_system(3, nu)
    res = solve_with_separation(sys, (0, 0, 0, 1), brute_oracle(3, nu, sys))
    assert res.status is LpStatus.OPTIMAL
    assert res.epsilon == F(-1, 3)
    for S in (3, 5, 6):
        assert sum(res.point[i] for i in range(3) if S >> i & 1) - 1 == F(-1, 3)


def test_majority_leastcore_max_pair_payoff():
    nu = majority()
    sys = leastcore_system(3, nu)
    oracle = brute_oracle(3, nu, sys)
    res = solve_with_separation(sys, (0, 0, 0, 1), oracle)
    sys.levels[0].threshold = res.epsilon
    top = optimize_linear_over_region(sys, (1, 1, 0), "max", oracle)
    low = optimize_linear_over_region(sys, (1, 1, 0), "min", oracle)
    assert top.optimum == F(2, 3) == low.optimum


def test_singleton_region():
    sys = ConstraintSystem(3)
    for i in range(3):
        sys.add_equality(chi(1 << i, 3), F(1, 3))
    res = optimize_linear_over_region(sys, (1, 0, 0), "max", lambda x, j: None)
    assert res.optimum == F(1, 3)


def test_region_requires_frozen_thresholds():
    sys = ConstraintSystem(2, levels=[LazyLevel(span=[])])
    with pytest.raises(ValueError):
        optimize_linear_over_region(sys, (1, 0), "max", lambda x, j: None)
    with pytest.raises(ValueError):
        optimize_linear_over_region(ConstraintSystem(2), (1, 0), "sideways", lambda x, j: None)


def test_duplicate_cut_rejected():
    sys = ConstraintSystem(2, levels=[LazyLevel(span=[])])
    sys.add_cut(0, (1, 0), F(0))
    with pytest.raises(ValueError, match="duplicate"):
        sys.add_cut(0, (1, 0), F(0))


def test_single_free_epsilon():
    with pytest.raises(ValueError):
        ConstraintSystem(2, levels=[LazyLevel(span=[]), LazyLevel(span=[])])


def test_separation_matches_dense_lp_random():
    rng = random.Random(32)
    for _ in range(25):
        n = rng.randint(2, 4)
        nu = {S: F(rng.randint(0, 6), rng.randint(1, 2)) for S in range(1 << n)}
        nu[0] = F(0)
        for i in range(n):
            nu[1 << i] = F(0)
        full = (1 << n) - 1
        nu[full] = max(nu[full], F(1))
        sys = leastcore_system(n, nu)
        res = solve_with_separation(sys, (0,) * n + (1,), brute_oracle(n, nu, sys))
        # dense version: all proper nonempty coalitions explicitly
        A, b = [], []
        for S in range(1, full):
            A.append([-F(S >> i & 1) for i in range(n)] + [F(1)])
            b.append(-nu[S])
        for i in range(n):
            A.append([-F(int(i == j)) for j in range(n)] + [F(0)])
            b.append(F(0))
        dense = maximize([0] * n + [1], A, b, [[1] * n + [0]], [nu[full]])
        assert res.epsilon == dense.value
        # all generated cuts are now explicit: a plain re-solve gives the same optimum
        again = sys.solve((0,) * n + (1,))
        assert again.value == res.optimum and again.point[:n] == res.point


def test_cut_trace_logged(caplog):
    nu = majority()
    sys = leastcore_system(3, nu)
    with caplog.at_level(logging.INFO, logger="nucleodp.cuts"):
        res = solve_with_separation(sys, (0, 0, 0, 1), brute_oracle(3, nu, sys))
    assert len(caplog.records) == len(res.cuts) > 0
    assert caplog.records[0].getMessage().startswith("level 1: add S = {")

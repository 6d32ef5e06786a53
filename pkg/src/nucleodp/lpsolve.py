"""Exact rational linear programming with lazily separated excess constraints.

The core solver maximizes ``c.y`` subject to ``A y <= b`` and ``E y = f`` with
``y`` free.  It runs Bland's-rule simplex on the dual

    min b.z_A + f.(z+ - z-)   s.t.  A^T z_A + E^T (z+ - z-) = c,  z >= 0,

whose tableau has one row per primal variable, so the large constraint counts
of coalition LPs only widen the tableau.  Pivoting is fraction-free: every
entry is an integer numerator over a shared denominator (Edmonds' scheme), and
the primal point is recovered from the optimal dual basis by one exact solve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

from .ratmath import Singular, format_rational, solve_linear_system

log = logging.getLogger("nucleodp.cuts")


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None


def _lcm_den(values) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, v.denominator)
    return d


class _Tableau:
    """Fraction-free simplex tableau for ``min d.z, M z = rhs, z >= 0``."""

    def __init__(self, M: list[list[Fraction]], rhs: list[Fraction], d: list[Fraction]):
        rows, ncols = len(M), len(d)
        self.rows, self.ncols = rows, ncols
        # Scale all rows by one factor and each column separately (z_j -> z_j / s_j)
        # so the data is integral while the artificial block stays an identity.
        Lr = _lcm_den(rhs)
        scale = [_lcm_den(M[i][j] * Lr for i in range(rows)) for j in range(ncols)]
        T = []
        for i in range(rows):
            s = -1 if rhs[i] < 0 else 1
            row = [int(s * M[i][j] * Lr * scale[j]) for j in range(ncols)]
            art = [0] * rows
            art[i] = 1
            T.append(row + art + [int(s * rhs[i] * Lr)])
        costs = [d[j] * scale[j] for j in range(ncols)]
        Ld = _lcm_den(costs)
        self.obj2 = [int(v * Ld) for v in costs] + [0] * (rows + 1)
        self.obj1 = [-sum(T[i][j] for i in range(rows)) for j in range(ncols)] + [0] * rows
        self.obj1.append(-sum(T[i][-1] for i in range(rows)))
        self.T = T
        self.D = 1
        self.basis = [ncols + i for i in range(rows)]

    def pivot(self, r: int, c: int):
        T, D = self.T, self.D
        prow = T[r]
        p = prow[c]
        for i in range(self.rows):
            if i == r:
                continue
            row = T[i]
            f = row[c]
            if f == 0:
                T[i] = [v * p // D for v in row] if p != D else row
            else:
                T[i] = [(a * p - f * b) // D for a, b in zip(row, prow)]
        for name in ("obj1", "obj2"):
            row = getattr(self, name)
            f = row[c]
            if f == 0:
                setattr(self, name, [v * p // D for v in row] if p != D else row)
            else:
                setattr(self, name, [(a * p - f * b) // D for a, b in zip(row, prow)])
        self.D = p
        self.basis[r] = c
        if self.D < 0:
            self.D = -self.D
            self.T = [[-v for v in row] for row in self.T]
            self.obj1 = [-v for v in self.obj1]
            self.obj2 = [-v for v in self.obj2]

    def run(self, obj: str, allowed: int) -> bool:
        """Bland's rule on columns ``< allowed``; False when unbounded."""
        while True:
            row = getattr(self, obj)
            c = next((j for j in range(allowed) if row[j] < 0), None)
            if c is None:
                return True
            r = None
            for i in range(self.rows):
                a = self.T[i][c]
                if a <= 0:
                    continue
                if r is None:
                    r = i
                    continue
                lhs = self.T[i][-1] * self.T[r][c]
                rhs = self.T[r][-1] * a
                if lhs < rhs or (lhs == rhs and self.basis[i] < self.basis[r]):
                    r = i
            if r is None:
                return False
            self.pivot(r, c)


def _solve_dual(M, rhs, d):
    """Returns ('optimal', basis) | ('infeasible', None) | ('unbounded', None)."""
    tab = _Tableau(M, rhs, d)
    ncols = tab.ncols
    tab.run("obj1", ncols)
    if tab.obj1[-1] != 0:
        return "infeasible", None
    for i in range(tab.rows):
        if tab.basis[i] >= ncols:
            c = next((j for j in range(ncols) if tab.T[i][j] != 0), None)
            if c is not None:
                tab.pivot(i, c)
    if not tab.run("obj2", ncols):
        return "unbounded", None
    return "optimal", tab


def maximize(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]], b: Sequence[Fraction],
             E: Sequence[Sequence[Fraction]] = (), f: Sequence[Fraction] = ()) -> LpSolution:
    """Exact ``max c.y`` s.t. ``A y <= b``, ``E y = f``, ``y`` free."""
    ny = len(c)
    c = [Fraction(v) for v in c]
    cols = [[Fraction(v) for v in row] for row in A]
    costs = [Fraction(v) for v in b]
    for row, val in zip(E, f):
        cols.append([Fraction(v) for v in row])
        costs.append(Fraction(val))
        cols.append([-Fraction(v) for v in row])
        costs.append(-Fraction(val))
    if not cols:
        if any(c):
            return LpSolution(LpStatus.UNBOUNDED)
        return LpSolution(LpStatus.OPTIMAL, Fraction(0), tuple(Fraction(0) for _ in range(ny)))
    M = [[cols[j][i] for j in range(len(cols))] for i in range(ny)]
    status, tab = _solve_dual(M, c, costs)
    if status == "unbounded":
        return LpSolution(LpStatus.INFEASIBLE)
    if status == "infeasible":
        zero = _solve_dual(M, [Fraction(0)] * ny, costs)[0]
        return LpSolution(LpStatus.INFEASIBLE if zero == "unbounded" else LpStatus.UNBOUNDED)
    # primal point: y^T M_B = d_B over the final basis (artificial columns give y_i = 0)
    rows, rhs = [], []
    for j in tab.basis:
        if j < len(cols):
            rows.append(cols[j])
            rhs.append(costs[j])
        else:
            i = j - len(cols)
            unit = [Fraction(0)] * ny
            unit[i] = Fraction(1)
            rows.append(unit)
            rhs.append(Fraction(0))
    y = solve_linear_system(rows, rhs)
    if isinstance(y, Singular):
        raise AssertionError(f"singular optimal basis: {y.value}")
    value = sum((ci * yi for ci, yi in zip(c, y)), Fraction(0))
    return LpSolution(LpStatus.OPTIMAL, value, y)


# ---------------------------------------------------------------------------
# Constraint systems over (x, epsilon) with lazy excess constraints


Coalition = tuple[int, ...]  # 0-1 incidence vector


@dataclass
class LazyLevel:
    """Excess constraints ``x(S) >= nu(S) + threshold`` for ``chi(S)`` outside ``span(V)``.

    ``threshold`` None means the free variable epsilon.
    """

    span: list[Coalition]
    threshold: Fraction | None = None
    cuts: dict[Coalition, Fraction] = field(default_factory=dict)  # coalition -> nu(S)


@dataclass
class ConstraintSystem:
    n: int
    equalities: list[tuple[tuple[Fraction, ...], Fraction]] = field(default_factory=list)
    lower_bounds: list[tuple[tuple[Fraction, ...], Fraction]] = field(default_factory=list)
    levels: list[LazyLevel] = field(default_factory=list)

    def __post_init__(self):
        self._check_levels()

    def _check_levels(self):
        if sum(1 for lv in self.levels if lv.threshold is None) > 1:
            raise ValueError("at most one level may use the free epsilon")

    @property
    def has_epsilon(self) -> bool:
        return any(lv.threshold is None for lv in self.levels)

    def add_equality(self, coef: Sequence, rhs) -> None:
        self.equalities.append((tuple(Fraction(v) for v in coef), Fraction(rhs)))

    def add_lower_bound(self, coef: Sequence, rhs) -> None:
        self.lower_bounds.append((tuple(Fraction(v) for v in coef), Fraction(rhs)))

    def add_cut(self, level: int, coalition: Coalition, nu: Fraction) -> None:
        lv = self.levels[level]
        if coalition in lv.cuts:
            raise ValueError(f"duplicate cut {coalition} at level {level}")
        lv.cuts[coalition] = Fraction(nu)

    def cut_count(self) -> int:
        return sum(len(lv.cuts) for lv in self.levels)

    def solve(self, objective: Sequence) -> LpSolution:
        """Solve the explicit relaxation; variables are x, then epsilon if present."""
        eps = self.has_epsilon
        ny = self.n + (1 if eps else 0)
        A, b = [], []

        def pad(coef):
            return list(coef) + ([Fraction(0)] if eps else [])

        for coef, rhs in self.lower_bounds:
            A.append([-v for v in pad(coef)])
            b.append(-rhs)
        for lv in self.levels:
            for S, nu in lv.cuts.items():
                row = [Fraction(-s) for s in S]
                if lv.threshold is None:
                    row.append(Fraction(1))
                    A.append(row)
                    b.append(-nu)
                else:
                    A.append(pad(row))
                    b.append(-nu - lv.threshold)
        E = [pad(coef) for coef, _ in self.equalities]
        f = [rhs for _, rhs in self.equalities]
        obj = list(objective) + [Fraction(0)] * (ny - len(objective))
        return maximize(obj, A, b, E, f)


@dataclass(frozen=True)
class OracleAnswer:
    excess: Fraction
    coalition: Coalition
    nu: Fraction


Oracle = Callable[[tuple[Fraction, ...], int], "OracleAnswer | None"]


@dataclass
class LpResult:
    status: LpStatus
    optimum: Fraction | None
    point: tuple[Fraction, ...] | None
    epsilon: Fraction | None
    cuts: list[tuple[int, Coalition]]
    rounds: int


def solve_with_separation(sys: ConstraintSystem, objective: Sequence, oracle: Oracle) -> LpResult:
    """Cutting-plane loop: solve, separate every level, add the most violated cut."""
    added: list[tuple[int, Coalition]] = []
    rounds = 0
    while True:
        rounds += 1
        sol = sys.solve(objective)
        if sol.status is not LpStatus.OPTIMAL:
            return LpResult(sol.status, None, None, None, added, rounds)
        x = sol.point[: sys.n]
        eps = sol.point[sys.n] if sys.has_epsilon else None
        worst = None
        for j, lv in enumerate(sys.levels):
            thr = eps if lv.threshold is None else lv.threshold
            ans = oracle(x, j)
            if ans is None or ans.excess >= thr:
                continue
            gap = thr - ans.excess
            if worst is None or gap > worst[0]:
                worst = (gap, j, ans, thr)
        if worst is None:
            return LpResult(LpStatus.OPTIMAL, sol.value, x, eps, added, rounds)
        _, j, ans, thr = worst
        if log.isEnabledFor(logging.INFO):
            members = ", ".join(str(i) for i, s in enumerate(ans.coalition) if s)
            log.info("level %d: add S = {%s}, excess %s < threshold %s", j + 1, members,
                     format_rational(ans.excess), format_rational(thr))
        sys.add_cut(j, ans.coalition, ans.nu)
        added.append((j, ans.coalition))


def optimize_linear_over_region(sys: ConstraintSystem, objective: Sequence, sense: str,
                                oracle: Oracle) -> LpResult:
    if sys.has_epsilon:
        raise ValueError("all thresholds must be frozen")
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    obj = [Fraction(v) for v in objective]
    if sense == "min":
        obj = [-v for v in obj]
    res = solve_with_separation(sys, obj, oracle)
    if sense == "min" and res.optimum is not None:
        res.optimum = -res.optimum
    return res

"""Nucleolus computation: the relaxed MPS driver and a brute-force reference.

The driver keeps a growing list ``V`` of fixed coalition vectors (seeded with
the grand coalition) and, per iteration, maximizes the minimum excess over
coalitions outside ``span(V)`` subject to all earlier levels' frozen
thresholds.  Excess constraints are separated lazily by a DP oracle that
avoids ``span(V)``; a new fixed vector is then found by testing candidate
minimizers for constancy over the optimal face.  ``rank(V) = n`` pins the
nucleolus.
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .hyperdp import AffineMap, AffineObjective, DpFormulation, HyperDag
from .lpsolve import (
    ConstraintSystem,
    LazyLevel,
    LpStatus,
    OracleAnswer,
    maximize,
    optimize_linear_over_region,
    solve_with_separation,
)
from .ratmath import RationalSpan, Singular, solve_linear_system
from .subspace import solve_avoiding_span

Coalition = tuple[int, ...]


class NoImputation(ValueError):
    def __init__(self, grand: Fraction, singles: Fraction):
        super().__init__(f"no imputation: nu(N) = {grand} < sum of singleton values {singles}")


def chi(mask: int, n: int) -> Coalition:
    return tuple((mask >> i) & 1 for i in range(n))


def mask_of(coalition: Iterable[int]) -> int:
    return sum(1 << i for i, s in enumerate(coalition) if s)


class CooperativeGame(ABC):
    """A game given compactly: a value oracle and a min-excess DP builder.

    ``build_min_excess_dp(x, mode)`` returns an integral formulation whose
    optimum is ``max nu(S) - x(S)``; the coalition vector of a solution is read
    from the coordinates ``coalition_coordinates``.  Modes: ``"admissible"``
    ranges over nonempty proper coalitions, ``"all"`` over every coalition.
    """

    @property
    @abstractmethod
    def n(self) -> int: ...

    @abstractmethod
    def value(self, members: Iterable[int]) -> Fraction: ...

    @abstractmethod
    def build_min_excess_dp(self, x: Sequence[Fraction], mode: str = "admissible") -> DpFormulation: ...

    @property
    def coalition_coordinates(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def grand_value(self) -> Fraction:
        return self.value(range(self.n))

    def singleton_value(self, i: int) -> Fraction:
        return self.value([i])

    def explicit_table(self) -> dict[int, Fraction]:
        if self.n > 16:
            raise ValueError("too large")
        return {S: self.value([i for i in range(self.n) if S >> i & 1]) for S in range(1 << self.n)}


class ExplicitGame(CooperativeGame):
    """A game given by its full table; the DP has one arc per coalition."""

    def __init__(self, n: int, table: Mapping[int, Fraction]):
        self._n = n
        self.table = {S: Fraction(v) for S, v in table.items()}
        self.table.setdefault(0, Fraction(0))
        self._skeletons: dict[str, tuple[HyperDag, AffineMap, list[int]]] = {}

    @property
    def n(self) -> int:
        return self._n

    def value(self, members: Iterable[int]) -> Fraction:
        return self.table[sum(1 << i for i in set(members))]

    def _skeleton(self, mode: str):
        if mode not in self._skeletons:
            full = (1 << self._n) - 1
            masks = list(range(1, full)) if mode == "admissible" else list(range(full + 1))
            H = HyperDag(2, tuple((0, (1,)) for _ in masks), (0,) if masks else ())
            g = AffineMap.build(self._n, [{i: 1 for i in range(self._n) if S >> i & 1} for S in masks])
            self._skeletons[mode] = (H, g, masks)
        return self._skeletons[mode]

    def build_min_excess_dp(self, x, mode="admissible"):
        H, g, masks = self._skeleton(mode)
        w = tuple(self.table[S] - sum((x[i] for i in range(self._n) if S >> i & 1), Fraction(0))
                  for S in masks)
        return DpFormulation(H, g, AffineObjective(w))


@dataclass
class Iteration:
    epsilon: Fraction
    fixed: Coalition
    constant: Fraction
    rank: int
    candidates_tested: int
    cuts: int


@dataclass
class NucleolusResult:
    allocation: tuple[Fraction, ...]
    iterations: list[Iteration] = field(default_factory=list)
    total_cuts: int = 0
    oracle_calls: int = 0
    seconds: float = 0.0

    @property
    def epsilons(self) -> list[Fraction]:
        return [it.epsilon for it in self.iterations]


@dataclass
class SolverOptions:
    prime_policy: str = "factorial"
    method: str = "tables"
    quick_exit: bool = True
    oracle_mode: str = "all"


class _Oracle:
    """Minimum excess over coalitions outside a level's span, via the game's DP."""

    def __init__(self, game: CooperativeGame, opts: SolverOptions):
        self.game = game
        self.opts = opts
        self.calls = 0
        self._last: tuple | None = None

    def formulation(self, x):
        key = tuple(x)
        if self._last is None or self._last[0] != key:
            self._last = (key, self.game.build_min_excess_dp(key, self.opts.oracle_mode))
        return self._last[1]

    def minimize(self, x, span: Sequence[Coalition]) -> OracleAnswer | None:
        self.calls += 1
        F = self.formulation(x)
        res = solve_avoiding_span(F, span, self.game.coalition_coordinates,
                                  prime_policy=self.opts.prime_policy, method=self.opts.method,
                                  quick_exit=self.opts.quick_exit)
        if res is None:
            return None
        xs = sum((xi for xi, s in zip(x, res.coalition) if s), Fraction(0))
        return OracleAnswer(-res.value, res.coalition, xs + res.value)


@dataclass
class MpsState:
    n: int
    fixed_vectors: list[Coalition]
    fixed_values: list[Fraction]
    thresholds: list[Fraction]
    system: ConstraintSystem

    @property
    def span(self) -> RationalSpan:
        return RationalSpan(self.n, self.fixed_vectors)


@dataclass
class LeastCore:
    epsilon: Fraction
    allocation: tuple[Fraction, ...]
    cuts: int
    oracle_calls: int


class _Driver:
    def __init__(self, game: CooperativeGame, opts: SolverOptions):
        n = game.n
        grand = Fraction(game.grand_value())
        singles = [Fraction(game.singleton_value(i)) for i in range(n)]
        if grand < sum(singles):
            raise NoImputation(grand, sum(singles))
        self.n = n
        self.oracle = _Oracle(game, opts)
        ones = (1,) * n
        sys = ConstraintSystem(n)
        sys.add_equality(ones, grand)
        for i in range(n):
            e = [0] * n
            e[i] = 1
            sys.add_lower_bound(e, singles[i])
        self.state = MpsState(n, [ones], [grand], [], sys)
        self.span = RationalSpan(n, [ones])
        self.known_nu: dict[Coalition, Fraction] = {
            tuple(int(j == i) for j in range(n)): singles[i] for i in range(n)}

    def level_oracle(self, x, j):
        return self.oracle.minimize(x, self.state.system.levels[j].span)

    def solve_level(self):
        """Open a level over the current span and maximize its minimum excess."""
        sys = self.state.system
        level = LazyLevel(list(self.state.fixed_vectors))
        sys.levels.append(level)
        for S, nu in self.known_nu.items():
            if not self.span.contains(S):
                level.cuts[S] = nu
        res = solve_with_separation(sys, [0] * self.n + [1], self.level_oracle)
        if res.status is not LpStatus.OPTIMAL:
            raise RuntimeError(f"level {len(sys.levels)} LP is {res.status.value}")
        level.threshold = res.epsilon
        self.state.thresholds.append(res.epsilon)
        return res


def least_core(game: CooperativeGame, options: SolverOptions | None = None) -> LeastCore:
    """Optimal value and one optimal point of the first (leastcore) level."""
    drv = _Driver(game, options or SolverOptions())
    if drv.span.rank == drv.n:
        x = (Fraction(drv.state.fixed_values[0]),)
        return LeastCore(Fraction(0), x, 0, 0)
    res = drv.solve_level()
    return LeastCore(res.epsilon, res.point, drv.state.system.cut_count(), drv.oracle.calls)


def compute_nucleolus(game: CooperativeGame, options: SolverOptions | None = None) -> NucleolusResult:
    t0 = time.perf_counter()
    drv = _Driver(game, options or SolverOptions())
    state, span, sys = drv.state, drv.span, drv.state.system
    result = NucleolusResult(())
    while span.rank < drv.n:
        cuts_before = sys.cut_count()
        res = drv.solve_level()
        eps = res.epsilon
        vec, const, tested = find_new_fixed_vector(state, res.point, eps, drv.level_oracle)
        for lv in sys.levels:
            drv.known_nu.update(lv.cuts)
        if not span.add(vec):
            raise AssertionError("fixed vector already spanned")
        state.fixed_vectors.append(vec)
        state.fixed_values.append(const)
        sys.add_equality(vec, const)
        result.iterations.append(Iteration(eps, vec, const, span.rank, tested,
                                           sys.cut_count() - cuts_before))
    x = solve_linear_system(state.fixed_vectors, state.fixed_values)
    if isinstance(x, Singular):
        raise AssertionError(f"fixed system is {x.value}")
    result.allocation = x
    result.total_cuts = sys.cut_count()
    result.oracle_calls = drv.oracle.calls
    result.seconds = time.perf_counter() - t0
    return result


def find_new_fixed_vector(state: MpsState, xbar: Sequence[Fraction], eps: Fraction, oracle):
    """A coalition outside ``span(V)`` whose payoff is constant on the optimal face.

    Returns ``(chi(S), nu(S) + eps, candidates tested)``.
    """
    sys = state.system
    lid = len(sys.levels) - 1
    xbar = tuple(xbar)
    tested = 0
    while True:
        ans = oracle(xbar, lid)
        if ans is None or ans.excess != eps:
            raise AssertionError("optimal face lost its tight coalition")
        tested += 1
        S = ans.coalition
        res = optimize_linear_over_region(sys, S, "max", oracle)
        if res.status is not LpStatus.OPTIMAL:
            raise RuntimeError(f"fixedness test LP is {res.status.value}")
        if res.optimum == ans.nu + eps:
            return S, ans.nu + eps, tested
        xbar = tuple((a + b) / 2 for a, b in zip(xbar, res.point))


# ---------------------------------------------------------------------------
# Brute force


def _dot(S: Coalition, x) -> Fraction:
    return sum((xi for xi, s in zip(x, S) if s), Fraction(0))


@dataclass
class BruteForceResult:
    allocation: tuple[Fraction, ...]
    epsilons: list[Fraction]
    fixed_per_level: list[list[int]]


def brute_force_nucleolus(n: int, nu: Mapping[int, Fraction], details: bool = False):
    """Classic MPS scheme with every coalition constraint explicit."""
    if n > 12:
        raise ValueError("too large")
    full = (1 << n) - 1
    grand = Fraction(nu[full])
    singles = [Fraction(nu[1 << i]) for i in range(n)]
    if grand < sum(singles):
        raise NoImputation(grand, sum(singles))
    eqs: list[tuple[Coalition, Fraction]] = [((1,) * n, grand)]
    span = RationalSpan(n, [(1,) * n])
    active = list(range(1, full))
    unit = [tuple(int(j == i) for j in range(n)) for i in range(n)]
    epsilons: list[Fraction] = []
    levels: list[list[int]] = []
    while span.rank < n:
        A, b = [], []
        for S in active:
            A.append([-Fraction(s) for s in chi(S, n)] + [Fraction(1)])
            b.append(-Fraction(nu[S]))
        for i in range(n):
            A.append([-Fraction(s) for s in unit[i]] + [Fraction(0)])
            b.append(-singles[i])
        E = [list(v) + [0] for v, _ in eqs]
        f = [c for _, c in eqs]
        sol = maximize([0] * n + [1], A, b, E, f)
        if sol.status is not LpStatus.OPTIMAL:
            raise RuntimeError(f"brute-force LP is {sol.status.value}")
        eps = sol.value
        epsilons.append(eps)
        x0 = sol.point[:n]
        rows = [(chi(S, n), Fraction(nu[S]) + eps) for S in active] + list(zip(unit, singles))
        implicit = _implicit_equalities(n, rows, eqs, x0)
        hull = RationalSpan(n, [v for v, _ in eqs] + [rows[r][0] for r in implicit])
        fixed = [S for S in active if hull.contains(chi(S, n))]
        if not fixed:
            raise AssertionError("MPS iteration fixed nothing")
        for S in fixed:
            v = chi(S, n)
            if span.add(v):
                eqs.append((v, _dot(v, x0)))
        levels.append(fixed)
        fixedset = set(fixed)
        active = [S for S in active if S not in fixedset]
    x = solve_linear_system([v for v, _ in eqs], [c for _, c in eqs])
    if isinstance(x, Singular):
        raise AssertionError(f"fixed system is {x.value}")
    if details:
        return BruteForceResult(x, epsilons, levels)
    return x


def _implicit_equalities(n, rows, eqs, x0) -> list[int]:
    """Indices of rows ``a.x >= beta`` that hold with equality on the whole polytope."""
    A = [[-Fraction(a) for a in v] for v, _ in rows]
    b = [-beta for _, beta in rows]
    E = [list(v) for v, _ in eqs]
    f = [c for _, c in eqs]

    def slack(r, x):
        return _dot(rows[r][0], x) - rows[r][1]

    undecided = [r for r in range(len(rows)) if slack(r, x0) == 0]
    while undecided:
        obj = [Fraction(0)] * n
        for r in undecided:
            for i, s in enumerate(rows[r][0]):
                if s:
                    obj[i] += 1
        sol = maximize(obj, A, b, E, f)
        if sol.status is not LpStatus.OPTIMAL:
            raise RuntimeError(f"face LP is {sol.status.value}")
        loose = [r for r in undecided if slack(r, sol.point) > 0]
        if not loose:
            break
        undecided = [r for r in undecided if slack(r, sol.point) == 0]
    return undecided


def excess_profile(n: int, nu: Mapping[int, Fraction], x: Sequence[Fraction]) -> list[tuple[Fraction, int]]:
    """All ``2^n - 2`` excesses ``x(S) - nu(S)`` over nonempty proper ``S``, sorted."""
    if n > 12:
        raise ValueError("too large")
    full = (1 << n) - 1
    out = []
    for S in range(1, full):
        out.append((_dot(chi(S, n), x) - Fraction(nu[S]), S))
    out.sort()
    return out


def lex_compare(theta_a: Sequence[tuple[Fraction, int]], theta_b: Sequence[tuple[Fraction, int]]) -> int:
    """-1, 0, 1 as the excess sequence of ``a`` is lexicographically below, equal, above ``b``."""
    for (ea, _), (eb, _) in zip(theta_a, theta_b):
        if ea != eb:
            return -1 if ea < eb else 1
    return 0

"""Optimizing a DP over solutions that avoid a linear subspace.

``chi(S)`` lies outside ``span_Q(V)`` exactly when, for some prime ``p`` of a
suitable set and some vector ``u`` of a basis of ``V``'s orthogonal complement
over ``F_p``, ``u . chi(S)`` is a nonzero residue.  Each ``(p, u, k)`` triple is a
congruency-constrained DP, solved either by an explicit residue-product
hypergraph (``congruency_transform``) or by evaluating every residue class of
the base hypergraph at once (``residue_tables``), which is the same recursion
applied to the product graph without materializing it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .hyperdp import (
    AffineMap,
    AffineObjective,
    DpFormulation,
    HyperDag,
    HyperPath,
    NotIntegral,
    compose,
    evaluate,
    no_common_descendants,
    trim,
)
from .ratmath import RationalSpan, orthogonal_basis_mod_p, rank_mod_p

PRIME_POLICIES = ("factorial", "hadamard")


def _primes():
    found: list[int] = []
    cand = 2
    while True:
        if all(cand % q for q in found if q * q <= cand):
            found.append(cand)
            yield cand
        cand += 1


def prime_set(n: int) -> tuple[int, ...]:
    """The first ``max(1, ceil(log2(n!)))`` primes."""
    if n < 1:
        raise ValueError("n must be at least 1")
    count = max(1, (math.factorial(n) - 1).bit_length())
    gen = _primes()
    return tuple(next(gen) for _ in range(count))


def hadamard_det_bound(n: int) -> int:
    """Integer upper bound on |det| of any m x m 0-1 matrix with m <= n."""
    # (m+1)^((m+1)/2) / 2^m is increasing in m; square it to stay in integers.
    m = n
    sq = (m + 1) ** (m + 1)
    return math.isqrt(sq // 4**m) + 1


def sufficient_primes(n: int) -> tuple[int, ...]:
    """Shortest prefix of the primes whose product exceeds every 0-1 minor of order <= n.

    A nonzero integer minor below the product cannot be divisible by all of
    these primes, so some prime preserves it, which is all the avoidance
    argument needs.  The set is never larger than :func:`prime_set`.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    bound = hadamard_det_bound(n)
    out, prod = [], 1
    for p in _primes():
        out.append(p)
        prod *= p
        if prod > bound:
            break
    base = prime_set(n)
    return tuple(out) if len(out) < len(base) else base


def primes_for(n: int, policy: str = "factorial") -> tuple[int, ...]:
    if policy == "factorial":
        return prime_set(n)
    if policy == "hadamard":
        return sufficient_primes(n)
    raise ValueError(f"unknown prime policy {policy!r}")


@dataclass(frozen=True)
class CongruencySpec:
    p: int
    residues: tuple[int, ...]
    target: int

    def __post_init__(self):
        if not all(0 <= r < self.p for r in self.residues) or not 0 <= self.target < self.p:
            raise ValueError("residues must lie in [0, p-1]")


def _mod(q: Fraction, p: int) -> int:
    q = Fraction(q)
    if q.denominator % p == 0:
        raise ValueError(f"coefficient {q} has no residue mod {p}")
    return q.numerator * pow(q.denominator, -1, p) % p


def lift_congruence(F: DpFormulation, v: Sequence[int], k: int, p: int) -> CongruencySpec:
    """Pull ``v . g(chi) = k (mod p)`` back to arc residues ``a`` and a target."""
    if len(v) != F.g.dim:
        raise ValueError(f"dimension mismatch: vector has {len(v)} entries, solution space {F.g.dim}")
    res = tuple(sum(_mod(c, p) * v[i] for i, c in col) % p for col in F.g.columns)
    vb = sum(_mod(b, p) * v[i] for i, b in enumerate(F.g.offset) if b)
    return CongruencySpec(p, res, (k - vb) % p)


def _sumset(a: set[int], b: set[int], p: int) -> set[int]:
    return {(x + y) % p for x in a for y in b}


def congruency_transform(F: DpFormulation, spec: CongruencySpec) -> DpFormulation:
    """Formulation whose paths are exactly ``F``'s paths with arc-residue sum = target."""
    H = F.hypergraph
    p = spec.p
    if len(spec.residues) != len(H.arcs):
        raise ValueError("one residue per arc required")
    if not no_common_descendants(H):
        raise NotIntegral()
    # (1) give every start its own copy per outgoing arc
    arcs = list(H.arcs)
    nv = H.vertex_count
    starts: list[int] = []
    for s in H.starts:
        out = H.out_arcs[s]
        if len(out) <= 1:
            starts.append(s)
            continue
        for e in out:
            arcs[e] = (nv, arcs[e][1])
            starts.append(nv)
            nv += 1
    base = HyperDag(nv, tuple(arcs), tuple(starts))
    # (2) achievable residues, bottom-up
    R: list[set[int]] = [set() for _ in range(nv)]
    for v in reversed(base.topological_order()):
        out = base.out_arcs[v]
        if not out:
            R[v] = {0}
            continue
        acc: set[int] = set()
        for e in out:
            sums = {spec.residues[e] % p}
            for h in base.arcs[e][1]:
                sums = _sumset(sums, R[h], p)
            acc |= sums
        R[v] = acc
    # (3) residue copies and arcs
    ids: dict[tuple[int, int], int] = {}
    for v in range(nv):
        for r in sorted(R[v]):
            ids[(v, r)] = len(ids)
    new_arcs = []
    origin = []
    for e, (u, S) in enumerate(base.arcs):
        for rs in product(*(sorted(R[h]) for h in S)):
            r = (spec.residues[e] + sum(rs)) % p
            new_arcs.append((ids[(u, r)], tuple(ids[(h, rh)] for h, rh in zip(S, rs))))
            origin.append(e)
    # (4) residue-filtered starts, (5) pruning
    new_starts = [ids[(s, spec.target)] for s in starts if spec.target in R[s]]
    H2, kept = trim(len(ids), new_arcs, new_starts)
    if len(H2.arcs) > p ** (H.max_heads + 1) * len(H.arcs):
        raise AssertionError("congruency transform exceeded its size bound")
    # (6) each copy maps to its original arc
    m = len(H.arcs)
    g = AffineMap(m, tuple(((origin[e], Fraction(1)),) for e in kept), (Fraction(0),) * m)
    c = AffineObjective(tuple(F.c.weights[origin[e]] for e in kept), F.c.constant)
    return compose(F, DpFormulation(H2, g, c))


# ---------------------------------------------------------------------------
# All-residue evaluation


@dataclass
class _Plan:
    depth_batches: list[list[tuple[np.ndarray, np.ndarray, np.ndarray]]]  # (arc ids, tails, heads)


def _plan(H: HyperDag) -> _Plan:
    if "residue_plan" in H._cache:
        return H._cache["residue_plan"]
    depth = [0] * H.vertex_count
    for v in reversed(H.topological_order()):
        ds = [depth[h] for e in H.out_arcs[v] for h in H.arcs[e][1]]
        depth[v] = 1 + max(ds) if ds else 0
    groups: dict[tuple[int, int], list[int]] = {}
    for e, (t, hs) in enumerate(H.arcs):
        groups.setdefault((depth[t], len(hs)), []).append(e)
    maxd = max(depth, default=0)
    batches: list[list] = [[] for _ in range(maxd + 1)]
    for (d, _), es in sorted(groups.items()):
        ids = np.array(es, dtype=np.int64)
        tails = np.array([H.arcs[e][0] for e in es], dtype=np.int64)
        heads = np.array([H.arcs[e][1] for e in es], dtype=np.int64)
        batches[d].append((ids, tails, heads))
    plan = _Plan(batches)
    H._cache["residue_plan"] = plan
    return plan


@dataclass
class ResidueTables:
    """``table[v, j, r]`` is the best scaled weight of a sub-path from ``v``
    whose residue sum under the ``j``-th residue vector is ``r``; entries at or
    below ``floor`` mean no such sub-path."""

    table: np.ndarray
    weights: np.ndarray
    residues: np.ndarray  # (U, m)
    scale: int
    floor: int
    p: int


def _scaled_weights(F: DpFormulation) -> tuple[list[int], int]:
    scale = 1
    for w in F.c.weights:
        scale = math.lcm(scale, w.denominator)
    return [int(w * scale) for w in F.c.weights], scale


def residue_tables(F: DpFormulation, residues: np.ndarray, p: int) -> ResidueTables:
    H = F.hypergraph
    U = residues.shape[0]
    W, scale = _scaled_weights(F)
    total = sum(abs(w) for w in W) + 1
    neg = -4 * total
    dtype = np.int64 if 8 * total < 2**62 else object
    weights = np.array(W, dtype=dtype)
    table = np.full((H.vertex_count, U, p), neg, dtype=dtype)
    sinks = [v for v in range(H.vertex_count) if not H.out_arcs[v]]
    table[sinks, :, 0] = 0
    rvec = np.arange(p)
    for batches in _plan(H).depth_batches[1:]:
        for ids, tails, heads in batches:
            acc = table[heads[:, 0]]
            for col in range(1, heads.shape[1]):
                other = table[heads[:, col]]
                best = None
                for r1 in range(p):
                    cand = acc[:, :, r1:r1 + 1] + np.roll(other, r1, axis=2)
                    best = cand if best is None else np.maximum(best, cand)
                acc = np.maximum(best, neg)
            shift = (rvec[None, None, :] - residues[:, ids].T[:, :, None]) % p
            vals = np.take_along_axis(acc, shift, axis=2) + weights[ids][:, None, None]
            np.maximum.at(table, tails, np.maximum(vals, neg))
    return ResidueTables(table, weights, residues, scale, -2 * total, p)


def residue_witness(F: DpFormulation, rt: ResidueTables, j: int, start: int, r: int) -> HyperPath:
    """Backtrack an optimal sub-path realizing ``rt.table[start, j, r]``; lowest arc id first."""
    H = F.hypergraph
    T, a, W, p = rt.table, rt.residues[j], rt.weights, rt.p
    chosen = []
    stack = [(start, r)]
    while stack:
        v, rv = stack.pop()
        target = T[v, j, rv]
        for e in H.out_arcs[v]:
            hs = H.arcs[e][1]
            rest = (rv - int(a[e])) % p
            split = _split(T, j, hs, rest, target - W[e], p, rt.floor)
            if split is not None:
                chosen.append(e)
                stack.extend(zip(hs, split))
                break
        else:
            if H.out_arcs[v]:
                raise AssertionError("residue table backtrack failed")
    return HyperPath(frozenset(chosen), start)


def _split(T, j, heads, r, need, p, floor):
    """Residues for ``heads`` summing to ``r`` whose table values add to ``need``."""
    if len(heads) == 1:
        val = T[heads[0], j, r]
        return (r,) if val > floor and val == need else None
    h = heads[0]
    for r1 in range(p):
        val = T[h, j, r1]
        if val <= floor:
            continue
        rest = _split(T, j, heads[1:], (r - r1) % p, need - val, p, floor)
        if rest is not None:
            return (r1,) + rest
    return None


# ---------------------------------------------------------------------------
# Span avoidance


@dataclass(frozen=True)
class AvoidResult:
    """Best avoiding solution.  ``path`` is a witness in whichever hypergraph
    produced it: ``F`` itself, or a congruency transform of ``F``."""

    value: Fraction
    solution: tuple[Fraction, ...]
    coalition: tuple[int, ...]
    path: HyperPath


def _project(sol: Sequence[Fraction], proj: Sequence[int]) -> tuple[int, ...]:
    out = []
    for i in proj:
        if sol[i] not in (0, 1):
            raise ValueError("coalition coordinates must be 0-1")
        out.append(int(sol[i]))
    return tuple(out)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NUCLEO_THREADS", "1")))
    except ValueError:
        return 1


def solve_avoiding_span(F: DpFormulation, V: Sequence[Sequence[int]], projection: Sequence[int], *,
                        prime_policy: str = "factorial", method: str = "tables",
                        quick_exit: bool = True) -> AvoidResult | None:
    """Best solution of ``F`` whose coalition part lies outside ``span_Q(V)``.

    ``projection`` lists the solution coordinates forming the coalition vector.
    Returns None when no such solution exists.  ``method`` selects the
    per-prime solver: ``"tables"`` (all residues at once) or ``"explicit"``
    (one congruency transform per ``(p, u, k)``).
    """
    n = len(projection)
    span = RationalSpan(n, V)
    if quick_exit:
        ev = evaluate(F)
        if ev is None:
            return None
        sol = F.g.apply(ev.witness.arcs)
        chi = _project(sol, projection)
        if not span.contains(chi):
            return AvoidResult(ev.value, sol, chi, ev.witness)
    elif not no_common_descendants(F.hypergraph):
        raise NotIntegral()
    rank_q = span.rank
    jobs = []
    for p in primes_for(n, prime_policy):
        if V and rank_mod_p(V, p) < rank_q:
            continue
        basis = orthogonal_basis_mod_p(V, n, p)
        if not basis:
            continue
        padded = []
        for u in basis:
            full = [0] * F.g.dim
            for i, c in zip(projection, u):
                full[i] = c
            padded.append(full)
        jobs.append((p, padded))
    if not jobs:
        return None
    solver = _solve_prime_tables if method == "tables" else _solve_prime_explicit
    if _threads() > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            found = list(pool.map(lambda job: solver(F, *job), jobs))
    else:
        found = [solver(F, *job) for job in jobs]
    best = None
    for cand in found:
        if cand is not None and (best is None or cand[0] > best[0]):
            best = cand
    if best is None:
        return None
    value, sol, path = best
    chi = _project(sol, projection)
    if span.contains(chi):
        raise AssertionError("span avoidance returned a spanned coalition")
    return AvoidResult(value, sol, chi, path)


def _solve_prime_explicit(F: DpFormulation, p: int, basis: list[list[int]]):
    best = None
    for u in basis:
        for k in range(1, p):
            F2 = congruency_transform(F, lift_congruence(F, u, k, p))
            ev = evaluate(F2, check_integral=False)
            if ev is not None and (best is None or ev.value > best[0]):
                best = (ev.value, F2.g.apply(ev.witness.arcs), ev.witness)
    return best


def _solve_prime_tables(F: DpFormulation, p: int, basis: list[list[int]]):
    H = F.hypergraph
    res = np.array([lift_congruence(F, u, 0, p).residues for u in basis], dtype=np.int64)
    offsets = [(-lift_congruence(F, u, 0, p).target) % p for u in basis]  # v.b mod p
    rt = residue_tables(F, res, p)
    best = None
    for j, vb in enumerate(offsets):
        for k in range(1, p):
            r = (k - vb) % p
            for s in H.starts:
                val = rt.table[s, j, r]
                if val <= rt.floor:
                    continue
                if best is None or val > best[0]:
                    best = (val, j, s, r)
    if best is None:
        return None
    val, j, s, r = best
    path = residue_witness(F, rt, j, s, r)
    return F.c.constant + Fraction(int(val), rt.scale), F.g.apply(path.arcs), path

from __future__ import annotations

import math
import random
from collections import Counter
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from generators import random_b_matching_game, random_integral_formulation, random_voting_game
from nucleodp.hyperdp import (
    AffineMap,
    AffineObjective,
    DpFormulation,
    HyperDag,
    enumerate_paths,
    evaluate,
    no_common_descendants,
)
from nucleodp.nucleolus import ExplicitGame, chi
from nucleodp.ratmath import RationalSpan, rank_mod_p, rank_over_q
from nucleodp.subspace import (
    CongruencySpec,
    congruency_transform,
    hadamard_det_bound,
    lift_congruence,
    prime_set,
    primes_for,
    residue_tables,
    residue_witness,
    solve_avoiding_span,
    sufficient_primes,
)


def images(F):
    return Counter((F.g.apply(P.arcs), F.c.value(P.arcs)) for P in enumerate_paths(F.hypergraph))


def filtered_images(F, residues, p, k):
    return Counter((F.g.apply(P.arcs), F.c.value(P.arcs)) for P in enumerate_paths(F.hypergraph)
                   if sum(residues[e] for e in P.arcs) % p == k)


# -- primes -------------------------------------------------------------------

def test_prime_set_examples():
    assert prime_set(1) == (2,)
    assert prime_set(3) == (2, 3, 5)
    assert prime_set(4) == (2, 3, 5, 7, 11)


def test_prime_set_size():
    for n in range(1, 12):
        assert len(prime_set(n)) == max(1, math.ceil(math.log2(math.factorial(n))))


def test_hadamard_bound_dominates_small_minors():
    # exhaustive over all 0-1 matrices of order <= 3
    from itertools import product

    def det(M):
        if len(M) == 1:
            return M[0][0]
        return sum((-1) ** j * M[0][j] * det([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(len(M)))

    for m in range(1, 4):
        worst = max(abs(det([list(bits[i * m:(i + 1) * m]) for i in range(m)]))
                    for bits in product((0, 1), repeat=m * m))
        assert worst <= hadamard_det_bound(m)


def test_sufficient_primes_is_prefix_of_prime_set():
    for n in range(1, 12):
        hp = sufficient_primes(n)
        assert hp == prime_set(n)[:len(hp)]
        assert math.prod(hp) > hadamard_det_bound(n) or hp == prime_set(n)
        assert len(hp) <= len(prime_set(n))
    with pytest.raises(ValueError):
        primes_for(3, "bogus")


# -- congruency transform ----------------------------------------------------------

def two_parallel(residues, target, p=2):
    H = HyperDag(2, ((0, (1,)), (0, (1,))), (0,))
    F = DpFormulation(H, AffineMap.identity(2), AffineObjective((Fraction(1), Fraction(2))))
    return F, congruency_transform(F, CongruencySpec(p, residues, target))


def test_transform_parallel_arcs():
    F, F2 = two_parallel((1, 0), 1)
    paths = enumerate_paths(F2.hypergraph)
    assert len(paths) == 1
    assert F2.g.apply(paths[0].arcs) == (1, 0)


def test_transform_empty_class_is_infeasible():
    H = HyperDag(2, ((0, (1,)),), (0,))
    F = DpFormulation(H, AffineMap.identity(1), AffineObjective((Fraction(3),)))
    F2 = congruency_transform(F, CongruencySpec(2, (0,), 1))
    assert F2.hypergraph.starts == ()
    assert evaluate(F2) is None


def test_transform_exact_on_random_graphs():
    rng = random.Random(21)
    for _ in range(80):
        F = random_integral_formulation(rng, max_arcs=10, max_heads=3)
        for p in (2, 3, 5):
            a = tuple(rng.randrange(p) for _ in F.hypergraph.arcs)
            for k in range(p):
                F2 = congruency_transform(F, CongruencySpec(p, a, k))
                assert images(F2) == filtered_images(F, a, p, k)
                assert no_common_descendants(F2.hypergraph)
                assert len(F2.hypergraph.arcs) <= p ** (F.hypergraph.max_heads + 1) * len(F.hypergraph.arcs)


def test_transform_rejects_bad_spec():
    with pytest.raises(ValueError):
        CongruencySpec(3, (0, 3), 1)
    F, _ = two_parallel((0, 0), 0)
    with pytest.raises(ValueError):
        congruency_transform(F, CongruencySpec(2, (0,), 0))


# -- lifting --------------------------------------------------------------------

def test_lift_identity_map():
    H = HyperDag(2, ((0, (1,)), (0, (1,)), (0, (1,))), (0,))
    F = DpFormulation(H, AffineMap.identity(3), AffineObjective((Fraction(0),) * 3))
    spec = lift_congruence(F, (1, 2, 0), 2, 3)
    assert spec.residues == (1, 2, 0) and spec.target == 2


def test_lift_offset_cancels():
    H = HyperDag(2, ((0, (1,)),), (0,))
    F = DpFormulation(H, AffineMap.build(2, [{0: 1}], [0, 1]), AffineObjective((Fraction(0),)))
    spec = lift_congruence(F, (0, 1), 1, 2)  # v.b = 1 = k
    assert spec.target == 0


def test_lift_dimension_mismatch():
    H = HyperDag(2, ((0, (1,)),), (0,))
    F = DpFormulation(H, AffineMap.identity(1), AffineObjective((Fraction(0),)))
    with pytest.raises(ValueError, match="dimension mismatch"):
        lift_congruence(F, (1, 1), 0, 2)


def test_lift_equivalence_random():
    rng = random.Random(22)
    for _ in range(60):
        F = random_integral_formulation(rng, max_arcs=6, dim=3)
        for p in (2, 3, 5):
            v = [rng.randrange(p) for _ in range(3)]
            k = rng.randrange(p)
            spec = lift_congruence(F, v, k, p)
            for P in enumerate_paths(F.hypergraph):
                img = F.g.apply(P.arcs)
                lhs = sum(int(x) * c for x, c in zip(img, v)) % p == k
                rhs = sum(spec.residues[e] for e in P.arcs) % p == spec.target
                assert lhs == rhs


# -- residue tables ----------------------------------------------------------------

def test_residue_tables_match_transform():
    rng = random.Random(23)
    for _ in range(60):
        F = random_integral_formulation(rng, max_arcs=10, max_heads=3)
        H = F.hypergraph
        for p in (2, 3, 5):
            rows = np.array([[rng.randrange(p) for _ in H.arcs] for _ in range(3)], dtype=np.int64)
            rt = residue_tables(F, rows, p)
            for j in range(3):
                for s in H.starts:
                    for r in range(p):
                        vals = [F.c.value(P.arcs) - F.c.constant for P in enumerate_paths(
                            HyperDag(H.vertex_count, H.arcs, (s,)))
                            if sum(int(rows[j, e]) for e in P.arcs) % p == r]
                        got = rt.table[s, j, r]
                        if not vals:
                            assert got <= rt.floor
                            continue
                        assert Fraction(int(got), rt.scale) == max(vals)
                        P = residue_witness(F, rt, j, s, r)
                        assert sum(int(rows[j, e]) for e in P.arcs) % p == r
                        assert F.c.value(P.arcs) - F.c.constant == max(vals)


# -- span avoidance ---------------------------------------------------------------

def avoid_brute(F, V, proj):
    span = RationalSpan(len(proj), V)
    best = None
    for P in enumerate_paths(F.hypergraph):
        sol = F.g.apply(P.arcs)
        if span.contains([int(sol[i]) for i in proj]):
            continue
        val = F.c.value(P.arcs)
        best = val if best is None or val > best else best
    return best


def test_avoid_two_players():
    game = ExplicitGame(2, {0: 0, 1: 0, 2: 0, 3: 0})
    x = (Fraction(1, 2), Fraction(1, 2))
    F = game.build_min_excess_dp(x, "all")
    res = solve_avoiding_span(F, [(1, 1)], game.coalition_coordinates)
    assert res.value == Fraction(-1, 2)
    assert sum(res.coalition) == 1


def test_avoid_full_span_is_empty():
    game = ExplicitGame(2, {0: 0, 1: 0, 2: 0, 3: 1})
    F = game.build_min_excess_dp((Fraction(1, 2),) * 2, "all")
    for quick in (True, False):
        assert solve_avoiding_span(F, [(1, 0), (0, 1)], (0, 1), quick_exit=quick) is None


def test_avoid_empty_span_excludes_only_zero():
    rng = random.Random(24)
    for _ in range(10):
        game = random_voting_game(rng, 2, 5)
        x = [Fraction(rng.randint(0, 8), 4) for _ in range(game.n)]
        F = game.build_min_excess_dp(x, "all")
        best = max(F.c.value(P.arcs) for P in enumerate_paths(F.hypergraph)
                   if any(F.g.apply(P.arcs)[i] for i in game.coalition_coordinates))
        for quick in (True, False):
            assert solve_avoiding_span(F, [], game.coalition_coordinates, quick_exit=quick).value == best


@pytest.mark.parametrize("method", ["tables", "explicit"])
@pytest.mark.parametrize("policy", ["factorial", "hadamard"])
def test_avoid_matches_brute_force(method, policy):
    rng = random.Random(25)
    for trial in range(30):
        if trial % 2:
            game = random_voting_game(rng, 2, 6)
        else:
            game = random_b_matching_game(rng, 2, 5, 2)
        n = game.n
        x = [Fraction(rng.randint(-2, 8), 4) for _ in range(n)]
        F = game.build_min_excess_dp(x, "all")
        V = [tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(rng.randint(0, n))]
        want = avoid_brute(F, V, game.coalition_coordinates)
        for quick in (True, False):
            got = solve_avoiding_span(F, V, game.coalition_coordinates, prime_policy=policy,
                                      method=method, quick_exit=quick)
            if want is None:
                assert got is None
                continue
            assert got.value == want
            assert not RationalSpan(n, V).contains(got.coalition)
            assert (got.solution, want) in images(F)


def test_avoid_mod2_dependence_needs_odd_prime():
    # the three vectors are independent over Q but dependent over F_2
    game = ExplicitGame(4, {S: Fraction(bin(S).count("1") % 3) for S in range(16)})
    F = game.build_min_excess_dp((Fraction(1, 2),) * 4, "admissible")
    V = [(1, 1, 0, 0), (0, 1, 1, 0), (1, 0, 1, 0)]
    assert rank_over_q(V) == 3 and rank_mod_p(V, 2) == 2
    want = avoid_brute(F, V, (0, 1, 2, 3))
    for method in ("tables", "explicit"):
        res = solve_avoiding_span(F, V, (0, 1, 2, 3), method=method, quick_exit=False)
        assert res.coalition[3] == 1
        assert res.value == want


def test_threaded_matches_serial(monkeypatch):
    rng = random.Random(26)
    game = random_voting_game(rng, 5, 5)
    x = [Fraction(rng.randint(0, 8), 4) for _ in range(5)]
    F = game.build_min_excess_dp(x, "all")
    V = [(1, 1, 1, 1, 1), (1, 0, 0, 0, 0)]
    serial = solve_avoiding_span(F, V, game.coalition_coordinates, quick_exit=False)
    monkeypatch.setenv("NUCLEO_THREADS", "3")
    threaded = solve_avoiding_span(F, V, game.coalition_coordinates, quick_exit=False)
    assert serial.value == threaded.value and serial.coalition == threaded.coalition

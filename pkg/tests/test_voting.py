from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

import pytest

from generators import random_voting_game
from nucleodp.games.voting import VotingGame, nucleolus_of_voting
from nucleodp.hyperdp import enumerate_paths, evaluate, no_common_descendants
from nucleodp.nucleolus import brute_force_nucleolus

F = Fraction


def best_excess_brute(game, x, proper=True):
    n = game.n
    full = (1 << n) - 1
    masks = range(1, full) if proper else range(full + 1)
    vals = [game.value([i for i in range(n) if S >> i & 1]) - sum((x[i] for i in range(n) if S >> i & 1), F(0))
            for S in masks]
    return max(vals) if vals else None


# -- values ---------------------------------------------------------------------

def test_value_examples():
    assert VotingGame((1, 1, 1), 2).value([0, 1]) == 1
    assert VotingGame((5, 2), 1).value([]) == 0
    assert VotingGame((3, 1, 1), 4).value([1, 2]) == 0


@pytest.mark.parametrize("weights, threshold", [((), 1), ((1, -1), 1), ((1, 1.5), 1), ((1, 1), 1.0)])
def test_invalid_games(weights, threshold):
    with pytest.raises(ValueError):
        VotingGame(weights, threshold)


# -- min-excess DP ----------------------------------------------------------------

def test_dp_majority_example():
    game = VotingGame((1, 1, 1), 2)
    F_ = game.build_min_excess_dp((F(1, 3),) * 3)
    ev = evaluate(F_)
    assert ev.value == F(1, 3)
    sol = F_.g.apply(ev.witness.arcs)
    assert sum(sol) == 2


def test_dp_huge_allocation_picks_cheapest_loser():
    game = VotingGame((2, 3, 4), 5)
    x = (F(1000), F(900), F(1100))
    assert evaluate(game.build_min_excess_dp(x)).value == -900


def test_dp_single_player_is_infeasible():
    assert evaluate(VotingGame((3,), 2).build_min_excess_dp((F(1),))) is None


def test_dp_matches_enumeration_random():
    rng = random.Random(51)
    for _ in range(40):
        game = random_voting_game(rng, 1, 8)
        for _ in range(20):
            x = [F(rng.randint(-4, 12), rng.randint(1, 6)) for _ in range(game.n)]
            ev = evaluate(game.build_min_excess_dp(x))
            want = best_excess_brute(game, x)
            assert (ev.value if ev else None) == want
            ev_all = evaluate(game.build_min_excess_dp(x, "all"))
            assert ev_all.value == best_excess_brute(game, x, proper=False)


def test_dp_paths_are_coalitions_exactly_once():
    rng = random.Random(52)
    for _ in range(25):
        game = random_voting_game(rng, 1, 6)
        n = game.n
        for mode, expected in (("admissible", range(1, (1 << n) - 1)), ("all", range(1 << n))):
            F_ = game.build_min_excess_dp([F(0)] * n, mode)
            got = Counter(sum(int(v) << i for i, v in enumerate(F_.g.apply(P.arcs)))
                          for P in enumerate_paths(F_.hypergraph))
            assert got == Counter(expected)
            for P in enumerate_paths(F_.hypergraph):
                S = F_.g.apply(P.arcs)
                assert F_.c.value(P.arcs) == game.value([i for i in range(n) if S[i]])


def test_dp_size_bound_and_integrality():
    rng = random.Random(53)
    for _ in range(40):
        game = random_voting_game(rng, 1, 8)
        n, T = game.n, game.threshold
        plain = game.build_min_excess_dp([F(0)] * n, "all").hypergraph
        flagged = game.build_min_excess_dp([F(0)] * n).hypergraph
        table = n * (min(T, sum(game.weights)) + 1)
        assert plain.vertex_count <= 2 * (table + n + 2)
        assert flagged.vertex_count <= 4 * plain.vertex_count
        assert plain.max_heads == 1 and flagged.max_heads <= 1
        assert no_common_descendants(plain) and no_common_descendants(flagged)


def test_state_budget():
    with pytest.raises(ValueError, match="state table too large"):
        VotingGame((50, 50, 50), 100, state_budget=100).build_min_excess_dp([F(0)] * 3)


# -- nucleolus ------------------------------------------------------------------

def test_nucleolus_examples():
    assert nucleolus_of_voting(VotingGame((1, 1, 1), 2)).allocation == (F(1, 3),) * 3
    assert nucleolus_of_voting(VotingGame((1, 1, 1, 1), 3)).allocation == (F(1, 4),) * 4
    game = VotingGame((3, 1, 1), 4)
    assert nucleolus_of_voting(game).allocation == brute_force_nucleolus(3, game.explicit_table())


def test_nucleolus_dictator_and_veto():
    assert nucleolus_of_voting(VotingGame((5, 1, 1), 5)).allocation == (1, 0, 0)
    game = VotingGame((0, 2, 3), 3)
    assert nucleolus_of_voting(game).allocation == brute_force_nucleolus(3, game.explicit_table())


def test_nucleolus_matches_brute_force_random():
    rng = random.Random(54)
    for _ in range(15):
        game = random_voting_game(rng, 2, 6)
        assert nucleolus_of_voting(game).allocation == brute_force_nucleolus(game.n, game.explicit_table())

"""Weighted voting games ``nu(S) = [w(S) >= T]`` and their knapsack-chain DP."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..hyperdp import AffineMap, AffineObjective, DpFormulation, HyperDag, trim
from ..nucleolus import CooperativeGame, NucleolusResult, SolverOptions, compute_nucleolus

DEFAULT_STATE_BUDGET = 2_000_000


@dataclass
class _Skeleton:
    hypergraph: HyperDag
    g: AffineMap
    player: list[int]  # player taken by each arc, -1 for none
    base: list[Fraction]


@dataclass(eq=False)
class VotingGame(CooperativeGame):
    weights: tuple[int, ...]
    threshold: int
    state_budget: int = DEFAULT_STATE_BUDGET
    _skeletons: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.weights = tuple(self.weights)
        if not self.weights:
            raise ValueError("a voting game needs at least one player")
        for w in self.weights:
            if isinstance(w, bool) or not isinstance(w, int):
                raise ValueError(f"weights must be integers, got {w!r}")
            if w < 0:
                raise ValueError(f"negative weight {w} not supported")
        if isinstance(self.threshold, bool) or not isinstance(self.threshold, int):
            raise ValueError("threshold must be an integer")

    @property
    def n(self) -> int:
        return len(self.weights)

    def value(self, members: Iterable[int]) -> Fraction:
        return Fraction(int(sum(self.weights[i] for i in set(members)) >= self.threshold))

    def _skeleton(self, mode: str) -> _Skeleton:
        if mode in self._skeletons:
            return self._skeletons[mode]
        if mode not in ("admissible", "all"):
            raise ValueError(f"unknown mode {mode!r}")
        n, T, w = self.n, self.threshold, self.weights
        flagged = mode == "admissible"
        span = min(max(T, 0), sum(w)) + 1
        if (n + 1) * 2 * span * (4 if flagged else 1) > self.state_budget:
            raise ValueError("state table too large")
        ids: dict[tuple, int] = {}

        def vid(key):
            if key not in ids:
                ids[key] = len(ids)
            return ids[key]

        arcs: list[tuple[int, tuple[int, ...]]] = []
        player: list[int] = []
        base: list[Fraction] = []

        def arc(tail, head, who, b):
            arcs.append((tail, (head,)))
            player.append(who)
            base.append(Fraction(b))

        starts = []
        layer: list[tuple] = []
        if T >= 1:  # losing family N0: D = weight taken, D <= T - 1
            s = vid(("entry", 0))
            starts.append(s)
            first = ("lose", 0, 0, False, False)
            arc(s, vid(first), -1, 0)
            layer.append(first)
        s = vid(("entry", 1))  # winning family N1: R = remaining demand, clamped at 0
        starts.append(s)
        first = ("win", 0, max(T, 0), False, False)
        arc(s, vid(first), -1, 1)
        layer.append(first)
        for k in range(n):
            nxt: dict[tuple, None] = {}
            for st in layer:
                fam, _, q, took, left = st
                t_flags = (True, left) if flagged else (False, False)
                s_flags = (took, True) if flagged else (False, False)
                if fam == "lose":
                    taken = (fam, k + 1, q + w[k], *t_flags) if q + w[k] <= T - 1 else None
                else:
                    taken = (fam, k + 1, max(q - w[k], 0), *t_flags)
                skipped = (fam, k + 1, q, *s_flags)
                if taken is not None:
                    arc(vid(st), vid(taken), k, 0)
                    nxt[taken] = None
                arc(vid(st), vid(skipped), -1, 0)
                nxt[skipped] = None
            layer = list(nxt)
        terminals = []
        for st in layer:
            fam, _, q, took, left = st
            if fam == "win" and q != 0:
                continue
            if flagged and not (took and left):
                continue
            terminals.append(vid(st))
        H, kept = trim(len(ids), arcs, starts, terminals)
        g = AffineMap.build(n, [{player[e]: 1} if player[e] >= 0 else {} for e in kept])
        sk = _Skeleton(H, g, [player[e] for e in kept], [base[e] for e in kept])
        self._skeletons[mode] = sk
        return sk

    def build_min_excess_dp(self, x: Sequence[Fraction], mode: str = "admissible") -> DpFormulation:
        if len(x) != self.n:
            raise ValueError("allocation length must equal player count")
        sk = self._skeleton(mode)
        xs = [Fraction(v) for v in x]
        weights = tuple(b - xs[p] if p >= 0 else b for p, b in zip(sk.player, sk.base))
        return DpFormulation(sk.hypergraph, sk.g, AffineObjective(weights))

    def layer_state_count(self) -> int:
        """Vertices of the flag-free skeleton: the knapsack table plus entries."""
        return self._skeleton("all").hypergraph.vertex_count


def nucleolus_of_voting(game: VotingGame, options: SolverOptions | None = None) -> NucleolusResult:
    return compute_nucleolus(game, options)

"""b-matching games on bounded-treewidth graphs.

``nu(S)`` is the maximum weight of a b-matching inside ``G[S]``.  The
min-excess DP walks a nice tree decomposition bottom-up.  A state at node ``i``
is ``(X, d, F, flags)``:

* ``X`` -- bag vertices that are in the coalition but unmatched (``d = 0``);
* ``d`` -- for each bag vertex, its matching degree over edges decided so far;
* ``F`` -- matching edges with both ends in the bag;
* ``flags`` -- (coalition nonempty, coalition proper) over forgotten vertices.

Edges between bag vertices are chosen when their later endpoint is
introduced, and paid for (weight and solution coordinate) when their first
endpoint is forgotten.  A forgotten vertex belongs to the coalition exactly
when it is in ``X`` or matched, and only then is ``x_v`` charged.  Joins
require identical ``X`` and ``F`` and add degrees, subtracting the shared
``F`` edges counted on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from ..hyperdp import AffineMap, AffineObjective, DpFormulation, HyperDag, evaluate, trim
from ..nucleolus import CooperativeGame, NucleolusResult, SolverOptions, compute_nucleolus
from .decomposition import (
    FORGET,
    INTRODUCE,
    JOIN,
    LEAF,
    NiceTreeDecomposition,
    TreeDecomposition,
    greedy_decomposition,
    make_nice,
    validate_decomposition,
)

DEFAULT_STATE_BUDGET = 2_000_000
MODES = ("admissible", "all", "grand")


@dataclass
class _Skeleton:
    hypergraph: HyperDag
    g: AffineMap
    edge_weight: list[Fraction]  # w(J) paid on each arc
    player: list[int]  # coalition vertex charged on each arc, -1 for none
    states_per_node: list[int]


@dataclass(eq=False)
class BMatchingGame(CooperativeGame):
    vertex_count: int
    edges: tuple[tuple[int, int, Fraction], ...]
    b: tuple[int, ...]
    decomposition: TreeDecomposition | None = None
    state_budget: int = DEFAULT_STATE_BUDGET
    width_budget: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = self.vertex_count
        if n < 1:
            raise ValueError("a b-matching game needs at least one vertex")
        self.edges = tuple((int(u), int(v), Fraction(w)) for u, v, w in self.edges)
        self.b = tuple(int(x) for x in self.b)
        if len(self.b) != n:
            raise ValueError("one degree cap per vertex required")
        if any(x < 1 for x in self.b):
            raise ValueError("degree caps must be positive")
        seen = set()
        for u, v, _ in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) has an endpoint outside the graph")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"parallel edge ({u},{v})")
            seen.add(key)
        if self.decomposition is not None:
            rep = validate_decomposition(n, self.edge_pairs, self.decomposition)
            if not rep.valid:
                raise ValueError("invalid tree decomposition: " + "; ".join(rep.violations))

    @property
    def n(self) -> int:
        return self.vertex_count

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, _ in self.edges]

    @property
    def coalition_coordinates(self) -> tuple[int, ...]:
        return tuple(range(self.m, self.m + self.n))

    def caps(self) -> list[int]:
        deg = [0] * self.n
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return [min(bu, du) for bu, du in zip(self.b, deg)]

    def tree_decomposition(self) -> TreeDecomposition:
        return self.decomposition or greedy_decomposition(self.n, self.edge_pairs)

    def nice_decomposition(self) -> NiceTreeDecomposition:
        if "nice" not in self._cache:
            td = self.tree_decomposition()
            if self.width_budget is not None and td.width > self.width_budget:
                raise ValueError(f"width too large: {td.width} > {self.width_budget}")
            self._cache["nice"] = make_nice(self.n, self.edge_pairs, td, empty_root=True)
        return self._cache["nice"]

    # -- values -----------------------------------------------------------

    def value(self, members: Iterable[int]) -> Fraction:
        S = set(members)
        if len(S) == self.n and "grand" not in self._cache:
            self._cache["grand"] = evaluate(self.build_min_excess_dp([0] * self.n, "grand")).value
        if len(S) == self.n:
            return self._cache["grand"]
        return max_weight_b_matching(self, S)

    def grand_value(self) -> Fraction:
        return self.value(range(self.n))

    def singleton_value(self, i: int) -> Fraction:
        return Fraction(0)

    def explicit_table(self) -> dict[int, Fraction]:
        if self.n > 16:
            raise ValueError("too large")
        return {S: max_weight_b_matching(self, [i for i in range(self.n) if S >> i & 1])
                for S in range(1 << self.n)}

    # -- DP -----------------------------------------------------------------

    def _skeleton(self, mode: str) -> _Skeleton:
        key = ("skeleton", mode)
        if key not in self._cache:
            self._cache[key] = self._build_skeleton(mode)
        return self._cache[key]

    def _build_skeleton(self, mode: str) -> _Skeleton:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        ntd = self.nice_decomposition()
        flagged = mode == "admissible"
        cap = self.caps()
        m, n = self.m, self.n
        incident: dict[tuple[int, int], int] = {}
        for e, (u, v, _) in enumerate(self.edges):
            incident[(u, v)] = incident[(v, u)] = e
        edge_ends = [(u, v) for u, v, _ in self.edges]

        vid: dict[tuple, int] = {}
        arcs: list[tuple[int, tuple[int, ...]]] = []
        cols: list[dict[int, int]] = []
        wts: list[Fraction] = []
        who: list[int] = []
        node_states: list[dict[tuple, int]] = []
        sinks: list[int] = []
        total = 0

        def state_id(i, st):
            nonlocal total
            k = (i, st)
            if k not in vid:
                vid[k] = len(vid)
                total += 1
                if total > self.state_budget:
                    raise ValueError("width too large: state budget exceeded")
            return vid[k]

        def arc(tail, heads, col=None, w=Fraction(0), player=-1):
            arcs.append((tail, heads))
            cols.append(col or {})
            wts.append(w)
            who.append(player)

        for i, nd in enumerate(ntd.nodes):
            bag = tuple(sorted(nd.bag))
            here: dict[tuple, int] = {}
            if nd.kind == LEAF:
                (v,) = bag
                for X in (frozenset({v}), frozenset()):
                    st = (X, (0,), frozenset(), (False, False))
                    here[st] = state_id(i, st)
                    sinks.append(here[st])
            elif nd.kind == INTRODUCE:
                v = nd.vertex
                child = ntd.nodes[nd.children[0]]
                cbag = tuple(sorted(child.bag))
                for cst, cid in node_states[nd.children[0]].items():
                    X, d, F, fl = cst
                    dmap = dict(zip(cbag, d))
                    # v in the coalition, permanently unmatched
                    dn = dict(dmap)
                    dn[v] = 0
                    st = (X | {v}, tuple(dn[u] for u in bag), F, fl)
                    here.setdefault(st, state_id(i, st))
                    arc(here[st], (cid,))
                    options = [incident[(v, u)] for u in cbag
                               if (v, u) in incident and u not in X and dmap[u] < cap[u]]
                    for size in range(min(cap[v], len(options)) + 1):
                        for N in combinations(options, size):
                            dn = dict(dmap)
                            dn[v] = size
                            for e in N:
                                a, c = edge_ends[e]
                                dn[c if a == v else a] += 1
                            st = (X, tuple(dn[u] for u in bag), F | frozenset(N), fl)
                            here.setdefault(st, state_id(i, st))
                            arc(here[st], (cid,))
            elif nd.kind == FORGET:
                v = nd.vertex
                child = ntd.nodes[nd.children[0]]
                cbag = tuple(sorted(child.bag))
                for cst, cid in node_states[nd.children[0]].items():
                    X, d, F, fl = cst
                    dmap = dict(zip(cbag, d))
                    in_s = v in X or dmap[v] > 0
                    if mode == "grand" and not in_s:
                        continue
                    J = frozenset(e for e in F if v in edge_ends[e])
                    nfl = (fl[0] or in_s, fl[1] or not in_s) if flagged else fl
                    st = (X - {v}, tuple(dmap[u] for u in bag), F - J, nfl)
                    here.setdefault(st, state_id(i, st))
                    col = {e: 1 for e in J}
                    if in_s:
                        col[m + v] = 1
                    arc(here[st], (cid,), col, sum((self.edges[e][2] for e in J), Fraction(0)),
                        v if in_s else -1)
            elif nd.kind == JOIN:
                c1, c2 = nd.children
                groups: dict[tuple, list[tuple[tuple, int]]] = {}
                for st2, id2 in node_states[c2].items():
                    groups.setdefault((st2[0], st2[2]), []).append((st2, id2))
                for st1, id1 in node_states[c1].items():
                    X, d1, F, fl1 = st1
                    shared = [sum(1 for e in F if u in edge_ends[e]) for u in bag]
                    for st2, id2 in groups.get((X, F), ()):
                        d = tuple(a + b - s for a, b, s in zip(d1, st2[1], shared))
                        if any(du > cap[u] for du, u in zip(d, bag)):
                            continue
                        fl2 = st2[3]
                        st = (X, d, F, (fl1[0] or fl2[0], fl1[1] or fl2[1]))
                        here.setdefault(st, state_id(i, st))
                        arc(here[st], (id1, id2))
            else:
                raise ValueError(f"unknown node kind {nd.kind}")
            node_states.append(here)

        root_states = node_states[ntd.root]
        if flagged:
            starts = [sid for st, sid in root_states.items() if st[3] == (True, True)]
        else:
            starts = list(root_states.values())
        H, kept = trim(len(vid), arcs, starts, sinks)
        g = AffineMap.build(m + n, [cols[e] for e in kept])
        return _Skeleton(H, g, [wts[e] for e in kept], [who[e] for e in kept],
                         [len(s) for s in node_states])

    def build_min_excess_dp(self, x: Sequence[Fraction], mode: str = "admissible") -> DpFormulation:
        if len(x) != self.n:
            raise ValueError("allocation length must equal player count")
        sk = self._skeleton(mode)
        xs = [Fraction(v) for v in x]
        weights = tuple(w - xs[p] if p >= 0 else w for w, p in zip(sk.edge_weight, sk.player))
        return DpFormulation(sk.hypergraph, sk.g, AffineObjective(weights))


def max_weight_b_matching(game: BMatchingGame, members: Iterable[int]) -> Fraction:
    """Brute-force maximum-weight b-matching of ``G[members]`` (test oracle)."""
    if game.n > 16:
        raise ValueError("too large")
    S = set(members)
    es = [(u, v, w) for u, v, w in game.edges if u in S and v in S and w > 0]
    b = game.b

    @lru_cache(maxsize=None)
    def best(k: int, deg: tuple[int, ...]) -> Fraction:
        if k == len(es):
            return Fraction(0)
        u, v, w = es[k]
        skip = best(k + 1, deg)
        if deg[u] < b[u] and deg[v] < b[v]:
            nd = list(deg)
            nd[u] += 1
            nd[v] += 1
            return max(skip, w + best(k + 1, tuple(nd)))
        return skip

    return best(0, (0,) * game.n)


def nucleolus_of_b_matching(game: BMatchingGame, options: SolverOptions | None = None) -> NucleolusResult:
    return compute_nucleolus(game, options)

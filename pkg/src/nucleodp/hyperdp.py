"""Directed acyclic hypergraph dynamic programs.

A formulation ``(H, g, c)`` couples a hypergraph ``H`` whose hyperpaths are the
DP's solutions with an affine map ``g`` from arc-incidence vectors to the
problem's solution space and an affine objective ``c`` on arcs.  Solving the
DP means finding a maximum-``c`` hyperpath; when no two heads of an arc share a
descendant ("integral" formulations) the bottom-up recursion is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .ratmath import format_rational

Arc = tuple[int, tuple[int, ...]]
SparseColumn = tuple[tuple[int, Fraction], ...]


class HypergraphError(ValueError):
    pass


class NotIntegral(HypergraphError):
    def __init__(self, msg: str = "not integral"):
        super().__init__(msg)


class PathCapExceeded(RuntimeError):
    def __init__(self, cap: int):
        super().__init__(f"cap exceeded: more than {cap} paths")
        self.cap = cap


@dataclass(frozen=True)
class HyperDag:
    vertex_count: int
    arcs: tuple[Arc, ...]
    starts: tuple[int, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        norm = []
        for tail, heads in self.arcs:
            hs = tuple(sorted(set(heads)))
            if not hs:
                raise HypergraphError(f"arc from {tail} has no heads")
            if len(hs) != len(tuple(heads)):
                raise HypergraphError(f"arc from {tail} repeats a head")
            if tail in hs:
                raise HypergraphError(f"arc from {tail} lists its tail as a head")
            for v in (tail, *hs):
                if not 0 <= v < self.vertex_count:
                    raise HypergraphError(f"vertex {v} out of range")
            norm.append((tail, hs))
        object.__setattr__(self, "arcs", tuple(norm))
        starts = tuple(self.starts)
        if len(set(starts)) != len(starts):
            raise HypergraphError("duplicate designated start")
        for s in starts:
            if not 0 <= s < self.vertex_count:
                raise HypergraphError(f"start {s} out of range")
        object.__setattr__(self, "starts", starts)

    @property
    def max_heads(self) -> int:
        """Largest head-set size over all arcs (0 for an arc-free graph)."""
        return max((len(h) for _, h in self.arcs), default=0)

    @property
    def out_arcs(self) -> list[list[int]]:
        if "out" not in self._cache:
            out: list[list[int]] = [[] for _ in range(self.vertex_count)]
            for e, (tail, _) in enumerate(self.arcs):
                out[tail].append(e)
            self._cache["out"] = out
        return self._cache["out"]

    @property
    def in_degree(self) -> list[int]:
        if "indeg" not in self._cache:
            deg = [0] * self.vertex_count
            for _, heads in self.arcs:
                for h in heads:
                    deg[h] += 1
            self._cache["indeg"] = deg
        return self._cache["indeg"]

    def is_sink(self, v: int) -> bool:
        return not self.out_arcs[v]

    @property
    def sinks(self) -> list[int]:
        return [v for v in range(self.vertex_count) if not self.out_arcs[v]]

    def topological_order(self) -> list[int]:
        """Tails before heads. Raises ``HypergraphError('cycle detected')``."""
        if "topo" not in self._cache:
            indeg = list(self.in_degree)
            out = self.out_arcs
            order = [v for v in range(self.vertex_count) if indeg[v] == 0]
            i = 0
            while i < len(order):
                v = order[i]
                i += 1
                for e in out[v]:
                    for h in self.arcs[e][1]:
                        indeg[h] -= 1
                        if indeg[h] == 0:
                            order.append(h)
            if len(order) != self.vertex_count:
                raise HypergraphError("cycle detected")
            self._cache["topo"] = order
        return self._cache["topo"]

    def descendants(self) -> list[int]:
        """Reflexive descendant sets as bitmasks, one per vertex."""
        if "desc" not in self._cache:
            desc = [0] * self.vertex_count
            for v in reversed(self.topological_order()):
                m = 1 << v
                for e in self.out_arcs[v]:
                    for h in self.arcs[e][1]:
                        m |= desc[h]
                desc[v] = m
            self._cache["desc"] = desc
        return self._cache["desc"]


@dataclass(frozen=True)
class HyperPath:
    arcs: frozenset[int]
    start: int


@dataclass(frozen=True)
class AffineMap:
    """``g(chi) = A chi + b`` with ``A`` stored as one sparse column per arc."""

    dim: int
    columns: tuple[SparseColumn, ...]
    offset: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.offset) != self.dim:
            raise ValueError("offset length must equal dim")
        for col in self.columns:
            for i, _ in col:
                if not 0 <= i < self.dim:
                    raise ValueError(f"column entry {i} outside dimension {self.dim}")

    @classmethod
    def build(cls, dim: int, columns: Iterable, offset: Sequence | None = None) -> "AffineMap":
        """Normalize columns given as dicts or pair lists (zeros dropped, sorted)."""
        cols = []
        for col in columns:
            items = col.items() if isinstance(col, dict) else col
            cols.append(tuple(sorted((int(i), Fraction(v)) for i, v in items if v != 0)))
        off = tuple(Fraction(v) for v in offset) if offset is not None else (Fraction(0),) * dim
        return cls(dim, tuple(cols), off)

    @classmethod
    def identity(cls, m: int) -> "AffineMap":
        return cls(m, tuple(((e, Fraction(1)),) for e in range(m)), (Fraction(0),) * m)

    def apply(self, arc_ids: Iterable[int]) -> tuple[Fraction, ...]:
        out = list(self.offset)
        for e in arc_ids:
            for i, v in self.columns[e]:
                out[i] += v
        return tuple(out)

    def matrix(self) -> list[list[Fraction]]:
        A = [[Fraction(0)] * len(self.columns) for _ in range(self.dim)]
        for e, col in enumerate(self.columns):
            for i, v in col:
                A[i][e] = v
        return A


@dataclass(frozen=True)
class AffineObjective:
    weights: tuple[Fraction, ...]
    constant: Fraction = Fraction(0)

    def value(self, arc_ids: Iterable[int]) -> Fraction:
        return self.constant + sum((self.weights[e] for e in arc_ids), Fraction(0))


@dataclass(frozen=True)
class DpFormulation:
    hypergraph: HyperDag
    g: AffineMap
    c: AffineObjective

    def __post_init__(self):
        m = len(self.hypergraph.arcs)
        if len(self.g.columns) != m or len(self.c.weights) != m:
            raise ValueError("g and c must have one entry per arc")

    @property
    def solution_dim(self) -> int:
        return self.g.dim


@dataclass(frozen=True)
class ValidationReport:
    acyclic: bool
    start_consistency: bool
    reachability: bool
    vertices: int
    arcs: int
    max_heads: int


@dataclass(frozen=True)
class Evaluation:
    value: Fraction
    witness: HyperPath


def validate(H: HyperDag) -> ValidationReport:
    """Check acyclicity, that every start is a source, and that every vertex is
    reachable from some start. Raises ``HypergraphError`` on the first failure."""
    H.topological_order()
    indeg = H.in_degree
    for s in H.starts:
        if indeg[s]:
            raise HypergraphError(f"start not a source: {s}")
    seen = set(H.starts)
    stack = list(H.starts)
    while stack:
        v = stack.pop()
        for e in H.out_arcs[v]:
            for h in H.arcs[e][1]:
                if h not in seen:
                    seen.add(h)
                    stack.append(h)
    if len(seen) != H.vertex_count:
        missing = min(set(range(H.vertex_count)) - seen)
        raise HypergraphError(f"unreachable vertex: {missing}")
    return ValidationReport(True, True, True, H.vertex_count, len(H.arcs), H.max_heads)


def weakly_connected_bruteforce(H: HyperDag) -> bool:
    """Exhaustive cut check for tiny graphs: every nonempty strict vertex subset
    must be crossed by some arc (tail on one side, a head on the other)."""
    n = H.vertex_count
    if n > 12:
        raise ValueError("brute-force cut check limited to 12 vertices")
    full = (1 << n) - 1
    arc_masks = [(1 << t, sum(1 << h for h in hs)) for t, hs in H.arcs]
    for U in range(1, full):
        crossed = False
        for tm, hm in arc_masks:
            if tm & U and hm & ~U & full:
                crossed = True
                break
            if not tm & U and hm & U:
                crossed = True
                break
        if not crossed:
            return False
    return True


def no_common_descendants(H: HyperDag) -> bool:
    desc = H.descendants()
    for _, heads in H.arcs:
        if len(heads) < 2:
            continue
        seen = 0
        for h in heads:
            if seen & desc[h]:
                return False
            seen |= desc[h]
    return True


def build_reference_subsets(H: HyperDag) -> dict[int, frozenset[int]]:
    if not no_common_descendants(H):
        raise NotIntegral("no reference subsets: heads share a descendant")
    desc = H.descendants()
    out = {}
    for v in range(H.vertex_count):
        m, bits, i = desc[v], [], 0
        while m:
            if m & 1:
                bits.append(i)
            m >>= 1
            i += 1
        out[v] = frozenset(bits)
    return out


def enumerate_paths(H: HyperDag, cap: int = 10_000) -> list[HyperPath]:
    """All hyperpaths from designated starts that end only at sinks.

    Exhaustive: one outgoing arc is chosen for every non-sink vertex the path
    reaches, with a shared choice when two branches meet.
    """
    topo_pos = {v: i for i, v in enumerate(H.topological_order())}
    out = H.out_arcs
    paths: list[HyperPath] = []

    def expand(start: int, chosen: dict[int, int], frontier: frozenset[int]):
        pending = [v for v in frontier if out[v] and v not in chosen]
        if not pending:
            if len(paths) >= cap:
                raise PathCapExceeded(cap)
            paths.append(HyperPath(frozenset(chosen.values()), start))
            return
        v = min(pending, key=topo_pos.__getitem__)
        rest = frontier - {v}
        for e in out[v]:
            chosen[v] = e
            expand(start, chosen, rest | frozenset(H.arcs[e][1]))
            del chosen[v]

    for s in H.starts:
        expand(s, {}, frozenset([s]))
    return paths


def evaluate(F: DpFormulation, check_integral: bool = True) -> Evaluation | None:
    """Maximum objective hyperpath by bottom-up recursion; None when no start."""
    H = F.hypergraph
    if check_integral and not no_common_descendants(H):
        raise NotIntegral()
    if not H.starts:
        return None
    w = F.c.weights
    val: list[Fraction | None] = [None] * H.vertex_count
    best: list[int] = [-1] * H.vertex_count
    for v in reversed(H.topological_order()):
        arcs = H.out_arcs[v]
        if not arcs:
            val[v] = Fraction(0)
            continue
        bv = None
        for e in arcs:
            cand = w[e] + sum((val[h] for h in H.arcs[e][1]), Fraction(0))
            if bv is None or cand > bv:
                bv, best[v] = cand, e
        val[v] = bv
    s = max(H.starts, key=lambda u: (val[u], -H.starts.index(u)))
    chosen = []
    stack = [s]
    while stack:
        v = stack.pop()
        if best[v] >= 0:
            chosen.append(best[v])
            stack.extend(H.arcs[best[v]][1])
    return Evaluation(F.c.constant + val[s], HyperPath(frozenset(chosen), s))


def pullback_objective(c: AffineObjective, g: AffineMap) -> AffineObjective:
    """``c o g`` for a linear functional ``c`` on g's target space."""
    weights = tuple(sum((c.weights[i] * v for i, v in col), Fraction(0)) for col in g.columns)
    const = c.constant + sum((c.weights[i] * b for i, b in enumerate(g.offset)), Fraction(0))
    return AffineObjective(weights, const)


def compose(outer: DpFormulation, inner: DpFormulation) -> DpFormulation:
    """``(H', g o g', c')`` where ``inner`` solves the path problem on ``outer``'s graph."""
    m = len(outer.hypergraph.arcs)
    if inner.g.dim != m:
        raise ValueError(f"dimension mismatch: inner maps to {inner.g.dim}, outer has {m} arcs")
    ocols = outer.g.columns
    cols = []
    for col in inner.g.columns:
        acc: dict[int, Fraction] = {}
        for e, coef in col:
            for i, v in ocols[e]:
                acc[i] = acc.get(i, Fraction(0)) + coef * v
        cols.append(acc)
    offset = list(outer.g.offset)
    for e, b in enumerate(inner.g.offset):
        if b:
            for i, v in ocols[e]:
                offset[i] += b * v
    g = AffineMap.build(outer.g.dim, cols, offset)
    return DpFormulation(inner.hypergraph, g, inner.c)


def subdivision_formulation(F: DpFormulation, arc_id: int, v: int) -> DpFormulation:
    """Formulation of the path problem on ``F``'s graph over the subdivided graph."""
    H = F.hypergraph
    u, S = H.arcs[arc_id]
    if v not in S:
        raise ValueError(f"{v} is not a head of arc {arc_id}")
    if len(S) < 2:
        raise ValueError("subdivision needs an arc with at least two heads")
    b = H.vertex_count
    arcs = list(H.arcs)
    arcs[arc_id] = (u, (v, b))
    arcs.append((b, tuple(s for s in S if s != v)))
    H2 = HyperDag(b + 1, tuple(arcs), H.starts)
    m = len(H.arcs)
    g = AffineMap(m, tuple(((e, Fraction(1)),) for e in range(m)) + ((),), (Fraction(0),) * m)
    c = AffineObjective(F.c.weights + (Fraction(0),), F.c.constant)
    return DpFormulation(H2, g, c)


def subdivide(F: DpFormulation, arc_id: int, v: int) -> DpFormulation:
    return compose(F, subdivision_formulation(F, arc_id, v))


def reduce_arity(F: DpFormulation) -> DpFormulation:
    """Equivalent formulation with at most two heads per arc.

    An arc ``(u, {s1..sd})`` becomes the chain ``(u,{s1,b1}), (b1,{s2,b2}), ...,
    (b_{d-2},{s_{d-1},s_d})``; the first link inherits the arc's g-column and
    weight, the others carry zeros.
    """
    H = F.hypergraph
    if H.max_heads <= 2:
        return F
    arcs = list(H.arcs)
    cols = list(F.g.columns)
    weights = list(F.c.weights)
    nv = H.vertex_count
    for e, (u, S) in enumerate(H.arcs):
        if len(S) <= 2:
            continue
        rest = list(S)
        first = rest.pop(0)
        arcs[e] = (u, (first, nv))
        tail = nv
        nv += 1
        while len(rest) > 2:
            s = rest.pop(0)
            arcs.append((tail, (s, nv)))
            tail = nv
            nv += 1
            cols.append(())
            weights.append(Fraction(0))
        arcs.append((tail, tuple(rest)))
        cols.append(())
        weights.append(Fraction(0))
    H2 = HyperDag(nv, tuple(arcs), H.starts)
    return DpFormulation(H2, AffineMap(F.g.dim, tuple(cols), F.g.offset),
                         AffineObjective(tuple(weights), F.c.constant))


def trim(vertex_count: int, arcs: Sequence[Arc], starts: Sequence[int],
         terminals: Iterable[int] | None = None) -> tuple[HyperDag, list[int]]:
    """Drop dead and unreachable parts of a raw hypergraph.

    A vertex without outgoing arcs survives only if it is a terminal (all of
    them when ``terminals`` is None); any other vertex survives if some arc has
    all heads alive.  Only vertices reachable from surviving starts are kept.
    Returns the compacted graph and, for each kept arc, its index in ``arcs``.
    """
    out: list[list[int]] = [[] for _ in range(vertex_count)]
    for e, (t, _) in enumerate(arcs):
        out[t].append(e)
    term = None if terminals is None else set(terminals)
    raw = HyperDag(vertex_count, tuple(arcs), ())
    alive = [False] * vertex_count
    arc_alive = [False] * len(arcs)
    for v in reversed(raw.topological_order()):
        if not out[v]:
            alive[v] = term is None or v in term
            continue
        for e in out[v]:
            if all(alive[h] for h in raw.arcs[e][1]):
                arc_alive[e] = True
                alive[v] = True
    keep = [False] * vertex_count
    stack = [s for s in starts if alive[s]]
    for s in stack:
        keep[s] = True
    while stack:
        v = stack.pop()
        for e in out[v]:
            if arc_alive[e]:
                for h in raw.arcs[e][1]:
                    if not keep[h]:
                        keep[h] = True
                        stack.append(h)
    remap = {}
    for v in range(vertex_count):
        if keep[v]:
            remap[v] = len(remap)
    kept_arcs = [e for e in range(len(arcs)) if arc_alive[e] and keep[raw.arcs[e][0]]]
    new_arcs = tuple((remap[raw.arcs[e][0]], tuple(remap[h] for h in raw.arcs[e][1])) for e in kept_arcs)
    new_starts = tuple(remap[s] for s in starts if alive[s])
    return HyperDag(len(remap), new_arcs, new_starts), kept_arcs


def path_image(F: DpFormulation, P: HyperPath) -> tuple[Fraction, ...]:
    return F.g.apply(P.arcs)


def dump(F: DpFormulation) -> list[str]:
    """One line per arc: ``tail <- {heads} | weight | {coord: value, ...}``."""
    lines = []
    for e, (t, hs) in enumerate(F.hypergraph.arcs):
        heads = ",".join(map(str, hs))
        col = ", ".join(f"{i}: {format_rational(v)}" for i, v in F.g.columns[e])
        lines.append(f"{t} <- {{{heads}}} | {format_rational(F.c.weights[e])} | {{{col}}}")
    return lines


def delta_pairs(heads: Sequence[int]) -> Iterable[tuple[int, int]]:
    return combinations(heads, 2)

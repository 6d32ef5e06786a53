"""Tree decompositions: validation, a min-degree heuristic, and nice form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

LEAF, INTRODUCE, FORGET, JOIN = "leaf", "introduce", "forget", "join"


@dataclass(frozen=True)
class TreeDecomposition:
    bags: tuple[frozenset[int], ...]
    edges: tuple[tuple[int, int], ...]
    root: int = 0

    @classmethod
    def build(cls, bags: Sequence[Sequence[int]], edges: Sequence[Sequence[int]], root: int = 0):
        return cls(tuple(frozenset(b) for b in bags), tuple((int(a), int(b)) for a, b in edges), root)

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1


@dataclass
class DecompositionReport:
    valid: bool
    width: int
    violations: list[str] = field(default_factory=list)


def validate_decomposition(n: int, graph_edges: Sequence[tuple[int, int]],
                           td: TreeDecomposition) -> DecompositionReport:
    """Check the tree shape plus vertex cover, edge cover and subtree properties."""
    problems: list[str] = []
    k = len(td.bags)
    if k == 0:
        return DecompositionReport(n == 0, -1, [] if n == 0 else ["no bags"])
    adj: list[list[int]] = [[] for _ in range(k)]
    for a, b in td.edges:
        if not (0 <= a < k and 0 <= b < k) or a == b:
            problems.append(f"tree edge ({a},{b}) is invalid")
            continue
        adj[a].append(b)
        adj[b].append(a)
    if not 0 <= td.root < k:
        problems.append(f"root {td.root} is not a tree node")
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) != k or len(td.edges) != k - 1:
        problems.append("decomposition is not a tree")
    for bag in td.bags:
        for v in bag:
            if not 0 <= v < n:
                problems.append(f"bag vertex {v} is not a graph vertex")
    for v in range(n):
        nodes = [i for i, b in enumerate(td.bags) if v in b]
        if not nodes:
            problems.append(f"vertex {v} is in no bag")
            continue
        inside = set(nodes)
        reach = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in inside and w not in reach:
                    reach.add(w)
                    stack.append(w)
        if reach != inside:
            problems.append(f"bags containing vertex {v} are disconnected")
    for u, v in graph_edges:
        if not any(u in b and v in b for b in td.bags):
            problems.append(f"edge ({u},{v}) is in no bag")
    return DecompositionReport(not problems, td.width, problems)


def greedy_decomposition(n: int, graph_edges: Sequence[tuple[int, int]]) -> TreeDecomposition:
    """Min-degree elimination ordering (ties to the lowest vertex id)."""
    if n == 0:
        return TreeDecomposition((), (), 0)
    nbrs = [set() for _ in range(n)]
    for u, v in graph_edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    alive = set(range(n))
    order: list[int] = []
    bags: list[frozenset[int]] = []
    for _ in range(n):
        v = min(alive, key=lambda u: (len(nbrs[u]), u))
        nv = set(nbrs[v])
        bags.append(frozenset(nv | {v}))
        for a in nv:
            nbrs[a] |= nv - {a}
            nbrs[a].discard(v)
        alive.remove(v)
        order.append(v)
    pos = {v: i for i, v in enumerate(order)}
    edges = []
    roots = []
    for i, v in enumerate(order):
        later = [u for u in bags[i] if u != v]
        if later:
            edges.append((i, min(pos[u] for u in later)))
        else:
            roots.append(i)
    top = roots[-1]
    for r in roots[:-1]:
        edges.append((r, top))
    return TreeDecomposition(tuple(bags), tuple(edges), top)


@dataclass(frozen=True)
class NiceNode:
    kind: str
    bag: frozenset[int]
    children: tuple[int, ...]
    vertex: int | None = None  # introduced/forgotten vertex


@dataclass(frozen=True)
class NiceTreeDecomposition:
    nodes: tuple[NiceNode, ...]  # post-order: children precede parents
    root: int

    @property
    def width(self) -> int:
        return max((len(nd.bag) for nd in self.nodes), default=0) - 1

    def as_tree_decomposition(self) -> TreeDecomposition:
        edges = tuple((c, i) for i, nd in enumerate(self.nodes) for c in nd.children)
        return TreeDecomposition(tuple(nd.bag for nd in self.nodes), edges, self.root)


def check_nice(ntd: NiceTreeDecomposition, empty_root: bool = False) -> list[str]:
    """Node-typing violations (empty when every node matches its kind)."""
    out = []
    for i, nd in enumerate(ntd.nodes):
        ch = [ntd.nodes[c].bag for c in nd.children]
        if nd.kind == LEAF:
            ok = not ch and len(nd.bag) == 1
        elif nd.kind == INTRODUCE:
            ok = len(ch) == 1 and nd.vertex not in ch[0] and nd.bag == ch[0] | {nd.vertex}
        elif nd.kind == FORGET:
            ok = len(ch) == 1 and nd.vertex in ch[0] and nd.bag == ch[0] - {nd.vertex}
        elif nd.kind == JOIN:
            ok = len(ch) == 2 and ch[0] == ch[1] == nd.bag
        else:
            ok = False
        if not ok:
            out.append(f"node {i} is not a valid {nd.kind} node")
        if any(c >= i for c in nd.children):
            out.append(f"node {i} precedes a child")
    if empty_root and ntd.nodes and ntd.nodes[ntd.root].bag:
        out.append("root bag is not empty")
    return out


def make_nice(n: int, graph_edges: Sequence[tuple[int, int]], td: TreeDecomposition,
              empty_root: bool = False) -> NiceTreeDecomposition:
    """Nice form of a valid decomposition; raises ValueError for invalid input.

    With ``empty_root`` a chain of Forget nodes empties the root bag, so every
    vertex is forgotten exactly once.
    """
    rep = validate_decomposition(n, graph_edges, td)
    if not rep.valid:
        raise ValueError("invalid tree decomposition: " + "; ".join(rep.violations))
    nodes: list[NiceNode] = []

    def add(kind, bag, children, vertex=None) -> int:
        nodes.append(NiceNode(kind, frozenset(bag), tuple(children), vertex))
        return len(nodes) - 1

    def morph(idx: int, src: frozenset[int], dst: frozenset[int]) -> int:
        bag = set(src)
        for v in sorted(src - dst):
            bag.discard(v)
            idx = add(FORGET, bag, [idx], v)
        for v in sorted(dst - src):
            bag.add(v)
            idx = add(INTRODUCE, bag, [idx], v)
        return idx

    adj: list[list[int]] = [[] for _ in td.bags]
    for a, b in td.edges:
        adj[a].append(b)
        adj[b].append(a)

    # iterative post-order over the rooted decomposition tree
    parent = {td.root: None}
    order = [td.root]
    for u in order:
        for v in sorted(adj[u]):
            if v not in parent:
                parent[v] = u
                order.append(v)
    built: dict[int, int | None] = {}
    for t in reversed(order):
        bag = td.bags[t]
        subs = []
        for c in sorted(adj[t]):
            if parent.get(c) == t and built[c] is not None:
                subs.append(morph(built[c], td.bags[c], bag))
        if not subs:
            if not bag:
                built[t] = None
                continue
            first = min(bag)
            idx = add(LEAF, {first}, [])
            built[t] = morph(idx, frozenset({first}), bag)
            continue
        idx = subs[0]
        for other in subs[1:]:
            idx = add(JOIN, bag, [idx, other])
        built[t] = idx
    top = built[td.root]
    if top is None:
        raise ValueError("decomposition has no nonempty bag")
    root = morph(top, td.bags[td.root], frozenset()) if empty_root else top
    return NiceTreeDecomposition(tuple(nodes), root)

"""Regenerate the bundled instances under ``instances/`` (deterministic seed)."""

from __future__ import annotations

import json
import random
from pathlib import Path

from nucleodp.games.bmatching import BMatchingGame
from nucleodp.games.decomposition import greedy_decomposition

OUT = Path(__file__).resolve().parent.parent / "instances"


def voting(rng: random.Random) -> dict:
    while True:
        n = rng.randint(2, 8)
        w = [rng.randint(0, 10) for _ in range(n)]
        if sum(w) == 0:
            continue
        T = rng.randint(1, sum(w))
        if sum(1 for x in w if x >= T) <= 1:
            return {"type": "weighted_voting", "weights": w, "threshold": T}


def b_matching(rng: random.Random, with_td: bool) -> dict:
    while True:
        n = rng.randint(2, 7)
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.45]
        if greedy_decomposition(n, pairs).width > 3:
            continue
        edges = [[u, v, str(rng.randint(1, 5))] for u, v in pairs]
        inst = {"type": "b_matching", "n": n, "edges": edges, "b": [rng.randint(1, 2) for _ in range(n)]}
        if with_td:
            td = greedy_decomposition(n, pairs)
            inst["tree_decomposition"] = {"bags": [sorted(b) for b in td.bags],
                                          "edges": [list(e) for e in td.edges], "root": td.root}
        BMatchingGame(n, [(u, v, int(w)) for u, v, w in edges], inst["b"])
        return inst


def main() -> None:
    rng = random.Random(20240611)
    OUT.mkdir(exist_ok=True)
    fixed = [
        ("voting_majority3", {"type": "weighted_voting", "weights": [1, 1, 1], "threshold": 2}),
        ("voting_3_1_1", {"type": "weighted_voting", "weights": [3, 1, 1], "threshold": 4}),
        ("voting_symmetric4", {"type": "weighted_voting", "weights": [1, 1, 1, 1], "threshold": 3}),
        ("bmatch_edge", {"type": "b_matching", "n": 2, "edges": [[0, 1, "1"]], "b": [1, 1]}),
        ("bmatch_path3", {"type": "b_matching", "n": 3, "edges": [[0, 1, "1"], [1, 2, "1"]], "b": [1, 1, 1],
                          "tree_decomposition": {"bags": [[0, 1], [1, 2]], "edges": [[0, 1]], "root": 0}}),
        ("bmatch_cycle4", {"type": "b_matching", "n": 4,
                           "edges": [[0, 1, "1"], [1, 2, "1"], [2, 3, "1"], [3, 0, "1"]], "b": [1, 1, 1, 1]}),
    ]
    items = list(fixed)
    for i in range(24):
        items.append((f"voting_random_{i:02d}", voting(rng)))
    for i in range(20):
        items.append((f"bmatch_random_{i:02d}", b_matching(rng, with_td=i % 2 == 0)))
    for name, inst in items:
        (OUT / f"{name}.json").write_text(json.dumps(inst, sort_keys=True) + "\n")
    print(f"wrote {len(items)} instances to {OUT}")


if __name__ == "__main__":
    main()
